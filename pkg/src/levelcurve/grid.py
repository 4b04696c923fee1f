"""Raster primitives: Gaussian kernels, convolution, Heaviside/Dirac,
finite differences, curvature and rectangle level-set initialization.

Fields are plain ``numpy`` arrays of shape ``(H, W)`` (scalar) or
``(H, W, D)`` (vector). Intensities stay in their native 0-255 scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .exceptions import NonPositiveEps, NonPositiveSigma, RectOutOfBounds, ValidationError

CURVATURE_FLOOR = 1e-8


@dataclass(frozen=True)
class GaussianKernel:
    """Separable, truncated and renormalized Gaussian.

    ``taps`` holds the 1-D factor; the 2-D kernel is its outer product, so
    both sum to one.
    """

    sigma: float
    radius: int
    taps: np.ndarray

    @property
    def taps2d(self) -> np.ndarray:
        return np.outer(self.taps, self.taps)


def gaussian_kernel(sigma: float, radius: int | None = None) -> GaussianKernel:
    if not (np.isfinite(sigma) and sigma > 0):
        raise NonPositiveSigma(f"sigma must be > 0, got {sigma}")
    if radius is None:
        radius = math.ceil(4.0 * sigma)
    radius = int(radius)
    if radius < 0:
        raise ValidationError(f"kernel radius must be >= 0, got {radius}")
    x = np.arange(-radius, radius + 1, dtype=float)
    taps = np.exp(-(x * x) / (2.0 * sigma * sigma))
    taps /= taps.sum()
    taps.setflags(write=False)
    return GaussianKernel(float(sigma), radius, taps)


def convolve(field: np.ndarray, kernel: GaussianKernel, mode: str = "nearest") -> np.ndarray:
    """Separable convolution over the two spatial axes.

    ``mode="nearest"`` is replicate padding (the default for contour
    smoothing). ``mode="constant"`` pads with zeros, which turns a ratio of
    two convolutions into a normalized convolution restricted to the domain.
    """
    out = np.asarray(field, dtype=float)
    for axis in (0, 1):
        out = ndimage.correlate1d(out, kernel.taps, axis=axis, mode=mode, cval=0.0)
    return out


def heaviside(z):
    """H(z) = 1 for z >= 0, else 0 (so the zero level joins the foreground)."""
    return (np.asarray(z) >= 0).astype(float)


def dirac_eps(z, eps: float = 1.0):
    if not eps > 0:
        raise NonPositiveEps(f"eps must be > 0, got {eps}")
    z = np.asarray(z, dtype=float)
    return (eps / math.pi) / (eps * eps + z * z)


def gradient(field: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(d/dy, d/dx): central differences inside, one-sided at the border."""
    f = np.asarray(field, dtype=float)
    gy = np.gradient(f, axis=0) if f.shape[0] > 1 else np.zeros_like(f)
    gx = np.gradient(f, axis=1) if f.shape[1] > 1 else np.zeros_like(f)
    return gy, gx


def gradient_magnitude(field: np.ndarray) -> np.ndarray:
    gy, gx = gradient(field)
    return np.hypot(gx, gy)


def curvature(phi: np.ndarray) -> np.ndarray:
    """div(grad phi / (|grad phi| + 1e-8))."""
    gy, gx = gradient(phi)
    norm = np.hypot(gx, gy) + CURVATURE_FLOOR
    ny_y, _ = gradient(gy / norm)
    _, nx_x = gradient(gx / norm)
    return nx_x + ny_y


class Rect(NamedTuple):
    """Axis-aligned pixel rectangle: columns x..x+width-1, rows y..y+height-1."""

    x: int
    y: int
    width: int
    height: int

    @classmethod
    def parse(cls, text: str) -> "Rect":
        parts = [p.strip() for p in str(text).split(",")]
        if len(parts) != 4:
            raise ValidationError(f"rectangle must be x,y,w,h; got {text!r}")
        try:
            return cls(*(int(p) for p in parts))
        except ValueError as exc:
            raise ValidationError(f"rectangle must hold integers; got {text!r}") from exc

    def check(self, shape: tuple[int, int]) -> None:
        h, w = shape[:2]
        if self.width < 1 or self.height < 1:
            raise RectOutOfBounds(f"rectangle {tuple(self)} is empty")
        if self.x < 0 or self.y < 0 or self.x + self.width > w or self.y + self.height > h:
            raise RectOutOfBounds(f"rectangle {tuple(self)} exceeds domain {w}x{h}")

    def mask(self, shape: tuple[int, int]) -> np.ndarray:
        self.check(shape)
        m = np.zeros(shape[:2], dtype=bool)
        m[self.y:self.y + self.height, self.x:self.x + self.width] = True
        return m


def init_levelset_rect(shape: tuple[int, int], rect: Rect, rho: float = 1.0) -> np.ndarray:
    """+rho strictly inside ``rect``, 0 on its one-pixel boundary ring, -rho outside."""
    if not rho > 0:
        raise ValidationError(f"rho must be > 0, got {rho}")
    rect = Rect(*rect)
    rect.check(shape)
    phi = np.full(shape[:2], -float(rho))
    x0, y0 = rect.x, rect.y
    x1, y1 = rect.x + rect.width, rect.y + rect.height
    phi[y0:y1, x0:x1] = 0.0
    if rect.width > 2 and rect.height > 2:
        phi[y0 + 1:y1 - 1, x0 + 1:x1 - 1] = float(rho)
    return phi


def binarize_levelset(phi: np.ndarray, rho: float = 1.0) -> np.ndarray:
    return rho * (heaviside(phi) - heaviside(-np.asarray(phi)))


def foreground(phi: np.ndarray) -> np.ndarray:
    return np.asarray(phi) >= 0
