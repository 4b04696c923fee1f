"""Global-statistics speed models: Chan-Vese, SBGFRLS and GSRPF."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evolve import DIRAC, GRAD_MAG, SpeedModel
from .exceptions import EmptyRegion, ValidationError
from .grid import curvature
from .regional import region_mean, region_median

DEGENERATE_FLOOR = 1e-9 * 255.0


def _sqdist(image: np.ndarray, value) -> np.ndarray:
    """|I - value|^2, summed over channels for vector images."""
    diff = np.asarray(image, dtype=float) - value
    return diff * diff if diff.ndim == 2 else (diff * diff).sum(axis=-1)


def _sign0(z):
    """sign with sign(0) = +1."""
    return np.where(np.asarray(z) >= 0, 1.0, -1.0)


def contour_length(mask: np.ndarray) -> int:
    """Number of 4-neighbour pixel pairs that straddle the contour."""
    m = np.asarray(mask, dtype=bool)
    return int((m[1:, :] != m[:-1, :]).sum() + (m[:, 1:] != m[:, :-1]).sum())


def _both_sides(mask):
    mask = np.asarray(mask, dtype=bool)
    if not mask.any() or mask.all():
        raise EmptyRegion("energy needs a nonempty inside and outside")
    return mask


# -- Chan-Vese ------------------------------------------------------------------

@dataclass(frozen=True)
class CvParams:
    lambda_plus: float = 1.0
    lambda_minus: float = 1.0
    mu: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        if self.lambda_plus < 0 or self.lambda_minus < 0:
            raise ValidationError("lambda weights must be >= 0")
        if self.mu < 0:
            raise ValidationError("mu must be >= 0")


def cv_energy(image, mask, params: CvParams = CvParams()) -> float:
    mask = _both_sides(mask)
    c_in, c_out = region_mean(image, mask), region_mean(image, ~mask)
    e = (params.lambda_plus * _sqdist(image, c_in)[mask].sum()
         + params.lambda_minus * _sqdist(image, c_out)[~mask].sum())
    if params.mu:
        e += params.mu * contour_length(mask)
    if params.nu:
        e += params.nu * mask.sum()
    return float(e)


def cv_speed_from_means(image, phi, c_in, c_out, params: CvParams) -> np.ndarray:
    s = (-params.lambda_plus * _sqdist(image, c_in)
         + params.lambda_minus * _sqdist(image, c_out))
    if params.mu:
        s = s + params.mu * curvature(phi)
    if params.nu:
        s = s - params.nu
    return s


class ChanVese(SpeedModel):
    name = "cv"
    multiplier = DIRAC

    def __init__(self, params: CvParams = CvParams()):
        self.params = params

    def descriptors(self, image, phi):
        inside = phi >= 0
        return self.region_mean(image, inside, "c+"), self.region_mean(image, ~inside, "c-")

    def speed(self, image, phi):
        c_in, c_out = self.descriptors(image, phi)
        return cv_speed_from_means(image, phi, c_in, c_out, self.params)

    def energy(self, image, mask):
        return cv_energy(image, mask, self.params)


def cv_speed(image, phi, params: CvParams = CvParams()) -> np.ndarray:
    return ChanVese(params).speed(image, phi)


# -- SBGFRLS --------------------------------------------------------------------

def sbgfrls_spf(image, c_in: float, c_out: float) -> np.ndarray:
    dev = np.asarray(image, dtype=float) - 0.5 * (c_in + c_out)
    peak = np.abs(dev).max()
    return dev / peak if peak > 0 else np.zeros_like(dev)


class SBGFRLS(SpeedModel):
    name = "sbgfrls"
    multiplier = GRAD_MAG

    def __init__(self, alpha: float = 20.0):
        if not alpha > 0:
            raise ValidationError(f"alpha must be > 0, got {alpha}")
        self.alpha = float(alpha)

    def speed(self, image, phi):
        if np.ndim(image) != 2:
            raise ValidationError("SBGFRLS expects a scalar image")
        inside = phi >= 0
        c_in = self.region_mean(image, inside, "c+")
        c_out = self.region_mean(image, ~inside, "c-")
        return self.alpha * sbgfrls_spf(image, c_in, c_out)

    def energy(self, image, mask):
        return cv_energy(image, mask)


def sbgfrls_speed(image, phi, alpha: float = 20.0) -> np.ndarray:
    return SBGFRLS(alpha).speed(image, phi)


# -- GSRPF ----------------------------------------------------------------------

@dataclass(frozen=True)
class GsrpfState:
    c_plus: float
    m_plus: float
    c_minus: float

    @property
    def denominator(self) -> float:
        return 2.0 * self.c_plus + 2.0 * self.m_plus - 4.0 * self.c_minus

    @property
    def degenerate(self) -> bool:
        return abs(self.denominator) < DEGENERATE_FLOOR

    @property
    def threshold(self) -> float:
        if self.degenerate:
            return float("nan")
        return (self.c_plus ** 2 + self.m_plus ** 2 - 2.0 * self.c_minus ** 2) / self.denominator


def gsrpf_descriptors(image, phi) -> GsrpfState:
    inside = np.asarray(phi) >= 0
    return GsrpfState(region_mean(image, inside), region_median(image, inside),
                      region_mean(image, ~inside))


def gsrpf_spf(image, state: GsrpfState) -> np.ndarray:
    image = np.asarray(image, dtype=float)
    if state.degenerate:
        return np.zeros_like(image)
    return _sign0(state.denominator) * _sign0(image - state.threshold)


def gsrpf_alpha(image, state: GsrpfState) -> np.ndarray:
    image = np.asarray(image, dtype=float)
    if state.degenerate:
        return np.zeros_like(image)
    return (image - state.threshold) ** 2


def gsrpf_energy(image, mask, lambda_plus: float = 1.0, lambda_minus: float = 1.0) -> float:
    mask = _both_sides(mask)
    c_in, m_in = region_mean(image, mask), region_median(image, mask)
    c_out = region_mean(image, ~mask)
    e_in = (_sqdist(image, c_in) + _sqdist(image, m_in))[mask].sum()
    e_out = _sqdist(image, c_out)[~mask].sum()
    return float(lambda_plus * e_in + 2.0 * lambda_minus * e_out)


class GSRPF(SpeedModel):
    """Signed pressure force from the inside mean and median and the outside
    mean, with a quadratic magnitude. ``states`` records the descriptors
    used at every iteration."""

    name = "gsrpf"
    multiplier = GRAD_MAG

    def __init__(self, lambda_plus: float = 1.0, lambda_minus: float = 1.0):
        self.lambda_plus, self.lambda_minus = lambda_plus, lambda_minus
        self.states: list[GsrpfState] = []

    def reset(self):
        super().reset()
        self.states = []

    def descriptors(self, image, phi) -> GsrpfState:
        if np.ndim(image) != 2:
            raise ValidationError("GSRPF expects a scalar image")
        inside = np.asarray(phi) >= 0
        c_in = self.region_mean(image, inside, "c+")
        m_in = self.remember("m+", lambda m: region_median(image, m), inside)
        c_out = self.region_mean(image, ~inside, "c-")
        return GsrpfState(c_in, m_in, c_out)

    def speed(self, image, phi):
        state = self.descriptors(image, phi)
        self.states.append(state)
        return gsrpf_alpha(image, state) * gsrpf_spf(image, state)

    def energy(self, image, mask):
        return gsrpf_energy(image, mask, self.lambda_plus, self.lambda_minus)


def gsrpf_speed(image, phi) -> np.ndarray:
    return GSRPF().speed(image, phi)
