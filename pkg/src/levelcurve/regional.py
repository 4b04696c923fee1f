"""Region descriptors: global means and medians over a mask, and
Gaussian-weighted local means."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyRegion, NonPositiveSigma
from .grid import convolve, gaussian_kernel

DENOMINATOR_FLOOR = 1e-12


@dataclass(frozen=True)
class RegionDescriptor:
    mean: float | np.ndarray
    median: float | None
    pixel_count: int


def _channels(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=float)
    return image[..., None] if image.ndim == 2 else image


def region_mean(image: np.ndarray, mask: np.ndarray):
    """Mean of ``image`` over ``mask`` (a float, or one value per channel)."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyRegion("region mean over an empty mask")
    vals = np.asarray(image, dtype=float)[mask]
    m = vals.mean(axis=0)
    return float(m) if np.ndim(m) == 0 else m


def region_median(image: np.ndarray, mask: np.ndarray) -> float:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyRegion("region median over an empty mask")
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise ValueError("medians are defined for scalar images only")
    return float(np.median(image[mask]))


def describe(image: np.ndarray, mask: np.ndarray) -> RegionDescriptor:
    mask = np.asarray(mask, dtype=bool)
    med = region_median(image, mask) if np.ndim(image) == 2 else None
    return RegionDescriptor(region_mean(image, mask), med, int(mask.sum()))


def _local_kernel(sigma: float, shape: tuple[int, int]):
    if not (np.isfinite(sigma) and sigma > 0):
        raise NonPositiveSigma(f"sigma must be > 0, got {sigma}")
    # With zero padding, taps farther than the domain extent never meet a
    # pixel, so capping the radius there is exact and keeps huge sigma cheap.
    cap = max(shape[0], shape[1]) - 1
    return gaussian_kernel(sigma, radius=min(math.ceil(4.0 * sigma), cap))


def local_weighted_mean(image: np.ndarray, mask: np.ndarray, sigma: float,
                        fallback=None) -> np.ndarray:
    """Per-pixel Gaussian-weighted mean of ``image`` over ``mask``.

    Pixels whose weighted mask support falls below 1e-12 take ``fallback``
    (default: the region's global mean). Output has the image's shape.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyRegion("local mean over an empty mask")
    img = _channels(image)
    k = _local_kernel(sigma, mask.shape)
    m = mask.astype(float)
    den = convolve(m, k, mode="constant")
    num = convolve(img * m[..., None], k, mode="constant")
    weak = den < DENOMINATOR_FLOOR
    out = num / np.where(weak, 1.0, den)[..., None]
    # convexity guard against round-off
    vals = img[mask]
    np.clip(out, vals.min(axis=0), vals.max(axis=0), out=out)
    if weak.any():
        out[weak] = region_mean(img, mask) if fallback is None else fallback
    return out[..., 0] if np.ndim(image) == 2 else out


def local_full_mean(image: np.ndarray, sigma_star: float) -> np.ndarray:
    """Local weighted mean over the whole domain."""
    return local_weighted_mean(image, np.ones(np.shape(image)[:2], dtype=bool), sigma_star)
