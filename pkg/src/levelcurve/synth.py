"""Synthetic test images and seeded noise."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ShapeOutOfBounds, ValidationError


@dataclass(frozen=True)
class Box:
    x: int
    y: int
    width: int
    height: int
    value: float

    def paint(self, h: int, w: int) -> np.ndarray:
        if (self.width < 1 or self.height < 1 or self.x < 0 or self.y < 0
                or self.x + self.width > w or self.y + self.height > h):
            raise ShapeOutOfBounds(f"{self} does not fit a {w}x{h} canvas")
        m = np.zeros((h, w), dtype=bool)
        m[self.y:self.y + self.height, self.x:self.x + self.width] = True
        return m


@dataclass(frozen=True)
class Disc:
    cx: float
    cy: float
    radius: float
    value: float

    def paint(self, h: int, w: int) -> np.ndarray:
        r = self.radius
        if (r <= 0 or self.cx - r < 0 or self.cy - r < 0
                or self.cx + r > w - 1 or self.cy + r > h - 1):
            raise ShapeOutOfBounds(f"{self} does not fit a {w}x{h} canvas")
        yy, xx = np.mgrid[0:h, 0:w]
        return (xx - self.cx) ** 2 + (yy - self.cy) ** 2 <= r * r


@dataclass(frozen=True)
class SynthSpec:
    """Shapes painted in order over a flat background.

    ``ramp`` adds a linear illumination drift along x, from ``ramp[0]`` at
    the left column to ``ramp[1]`` at the right one.
    """

    width: int
    height: int
    background: float = 0.0
    shapes: tuple = field(default_factory=tuple)
    ramp: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValidationError("canvas must be at least 1x1")
        for v in [self.background] + [s.value for s in self.shapes]:
            if not 0 <= v <= 255:
                raise ValidationError(f"intensity {v} outside [0, 255]")


def gen_synthetic(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    h, w = spec.height, spec.width
    image = np.full((h, w), float(spec.background))
    truth = np.zeros((h, w), dtype=bool)
    for shape in spec.shapes:
        m = shape.paint(h, w)
        image[m] = shape.value
        truth |= m
    if spec.ramp != (0.0, 0.0):
        image = image + np.linspace(spec.ramp[0], spec.ramp[1], w)[None, :]
        np.clip(image, 0.0, 255.0, out=image)
    return image, truth


def _bands(x0, y0, band_w, band_h, values):
    return tuple(Box(x0 + i * band_w, y0, band_w, band_h, v) for i, v in enumerate(values))


# three discs, the 100-tone one largest; shared by fig6_1 and fig7_3b
_DISCS = (Disc(44, 27, 18, 100), Disc(44, 64, 15, 150), Disc(44, 97, 14, 200))

PRESETS: dict[str, SynthSpec] = {
    # three equal-area vertical bands
    "fig4_1": SynthSpec(123, 80, 20.0, _bands(18, 15, 29, 50, (100, 150, 200))),
    "fig6_1": SynthSpec(90, 122, 120.0, _DISCS),
    "fig7_3b": SynthSpec(90, 122, 20.0, _DISCS),
    "fig7_3a": SynthSpec(140, 100, 30.0, _bands(10, 20, 20, 60, (80, 100, 140, 170, 200, 230))),
    # full-height band: straight edges survive the smoothing step unchanged
    "two_tone": SynthSpec(64, 61, 50.0, (Box(20, 0, 24, 61, 200),)),
    # two-tone scene under a left-to-right illumination ramp
    "ramp": SynthSpec(127, 96, 40.0, (Disc(40, 48, 22, 110), Box(78, 22, 34, 52, 110)),
                      ramp=(0.0, 80.0)),
    "two_object": SynthSpec(100, 100, 40.0, (Disc(30, 50, 18, 110), Box(58, 25, 30, 50, 110)),
                            ramp=(0.0, 70.0)),
}


def preset(name: str) -> SynthSpec:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValidationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def add_gaussian_noise(image: np.ndarray, sd: float, seed: int = 0) -> np.ndarray:
    if sd < 0:
        raise ValidationError(f"noise sd must be >= 0, got {sd}")
    image = np.asarray(image, dtype=float)
    if sd == 0:
        return image.copy()
    rng = np.random.default_rng(seed)
    return np.clip(image + rng.normal(0.0, sd, size=image.shape), 0.0, 255.0)


def add_salt_pepper(image: np.ndarray, density: float, seed: int = 0) -> np.ndarray:
    if not 0 <= density <= 1:
        raise ValidationError(f"density must lie in [0, 1], got {density}")
    image = np.array(image, dtype=float)
    rng = np.random.default_rng(seed)
    hit = rng.random(image.shape[:2]) < density
    salt = rng.random(image.shape[:2]) < 0.5
    image[hit & salt] = 255.0
    image[hit & ~salt] = 0.0
    return image
