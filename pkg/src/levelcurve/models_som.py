"""Speed models whose regional descriptors are prototypes of trained
self-organizing maps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evolve import DIRAC, SpeedModel
from .exceptions import DimMismatch, ParamOrder, ValidationError
from .models_global import _sqdist
from .regional import local_full_mean, local_weighted_mean
from .som import SomMap, bmu, bmu_prototypes


def _check_dims(image, *maps: SomMap) -> None:
    d = 1 if np.ndim(image) == 2 else np.shape(image)[-1]
    for m in maps:
        if m.dim != d:
            raise DimMismatch(f"map dimension {m.dim} does not match image channels {d}")


def _nearest(som: SomMap, value) -> np.ndarray:
    return som.prototypes[bmu(som, np.atleast_1d(value) if som.dim > 1 else value)]


def _proto_value(p: np.ndarray, image):
    """Prototype as a value broadcastable against ``image``."""
    return float(p[0]) if np.ndim(image) == 2 else p


def _two_term(image, w_plus, w_minus, lp: float, lm: float) -> np.ndarray:
    return -lp * _sqdist(image, w_plus) + lm * _sqdist(image, w_minus)


class _Weighted(SpeedModel):
    multiplier = DIRAC

    def __init__(self, lambda_plus: float = 1.0, lambda_minus: float = 1.0):
        if lambda_plus < 0 or lambda_minus < 0:
            raise ValidationError("lambda weights must be >= 0")
        self.lambda_plus, self.lambda_minus = float(lambda_plus), float(lambda_minus)

    def pixel_term(self, image, phi) -> np.ndarray:
        return self.speed(image, phi)


# -- CSOM-CV --------------------------------------------------------------------

class CSOMCV(_Weighted):
    """Global means mapped through the per-class maps' best-matching units."""

    name = "csomcv"

    def __init__(self, fg_map: SomMap, bg_map: SomMap, lambda_plus=1.0, lambda_minus=1.0):
        super().__init__(lambda_plus, lambda_minus)
        self.fg_map, self.bg_map = fg_map, bg_map

    def descriptors(self, image, phi):
        _check_dims(image, self.fg_map, self.bg_map)
        inside = np.asarray(phi) >= 0
        w_plus = _nearest(self.fg_map, self.region_mean(image, inside, "c+"))
        w_minus = _nearest(self.bg_map, self.region_mean(image, ~inside, "c-"))
        return _proto_value(w_plus, image), _proto_value(w_minus, image)

    def speed(self, image, phi):
        w_plus, w_minus = self.descriptors(image, phi)
        return _two_term(image, w_plus, w_minus, self.lambda_plus, self.lambda_minus)


def csomcv_speed(image, phi, maps) -> np.ndarray:
    return CSOMCV(*maps).speed(image, phi)


# -- SOAC -----------------------------------------------------------------------

class SOAC(_Weighted):
    """Per-pixel BMU prototypes of the local weighted means of each region."""

    name = "soac"

    def __init__(self, fg_map: SomMap, bg_map: SomMap, sigma: float = 0.1,
                 lambda_plus=1.0, lambda_minus=1.0):
        super().__init__(lambda_plus, lambda_minus)
        if not sigma > 0:
            raise ValidationError(f"sigma must be > 0, got {sigma}")
        self.fg_map, self.bg_map, self.sigma = fg_map, bg_map, float(sigma)

    def descriptors(self, image, phi):
        _check_dims(image, self.fg_map, self.bg_map)
        inside = np.asarray(phi) >= 0
        s = self.sigma
        c_in = self.remember("c+", lambda m: local_weighted_mean(image, m, s), inside)
        c_out = self.remember("c-", lambda m: local_weighted_mean(image, m, s), ~inside)
        return bmu_prototypes(self.fg_map, c_in), bmu_prototypes(self.bg_map, c_out)

    def speed(self, image, phi):
        w_plus, w_minus = self.descriptors(image, phi)
        return _two_term(image, w_plus, w_minus, self.lambda_plus, self.lambda_minus)


def soac_descriptors(image, phi, maps, sigma):
    return SOAC(*maps, sigma=sigma).descriptors(image, phi)


def soac_speed(image, phi, maps, sigma) -> np.ndarray:
    return SOAC(*maps, sigma=sigma).speed(image, phi)


# -- SOMCV / SOMCV_s --------------------------------------------------------------

@dataclass(frozen=True)
class PrototypePartition:
    fg_prototypes: np.ndarray
    bg_prototypes: np.ndarray
    fg_index: np.ndarray
    bg_index: np.ndarray

    @property
    def counts(self) -> tuple[int, int]:
        return len(self.fg_index), len(self.bg_index)


def partition_prototypes(som: SomMap, c_in, c_out) -> PrototypePartition:
    """Neuron n goes to the foreground set iff |w_n - c+| <= |w_n - c-|."""
    w = som.prototypes
    a_plus = np.linalg.norm(w - np.atleast_1d(c_in), axis=1)
    a_minus = np.linalg.norm(w - np.atleast_1d(c_out), axis=1)
    fg = np.flatnonzero(a_plus <= a_minus)
    bg = np.flatnonzero(a_plus > a_minus)
    return PrototypePartition(w[fg], w[bg], fg, bg)


def somcv_partition(som: SomMap, image, phi) -> PrototypePartition:
    inside = np.asarray(phi) >= 0
    model = SOMCV(som)
    return partition_prototypes(som, model.region_mean(image, inside, "c+"),
                                model.region_mean(image, ~inside, "c-"))


class SOMCV(_Weighted):
    """Sum over all prototypes assigned to each region (``simplified=False``)
    or the single best-matching prototype per region (``simplified=True``).

    An empty partition side falls back to that region's single BMU.
    """

    def __init__(self, som: SomMap, lambda_plus=1.0, lambda_minus=1.0, simplified: bool = False):
        super().__init__(lambda_plus, lambda_minus)
        self.som, self.simplified = som, bool(simplified)
        self.name = "somcvs" if simplified else "somcv"
        self.partitions: list[PrototypePartition] = []

    def reset(self):
        super().reset()
        self.partitions = []

    def descriptors(self, image, phi):
        _check_dims(image, self.som)
        inside = np.asarray(phi) >= 0
        c_in = self.region_mean(image, inside, "c+")
        c_out = self.region_mean(image, ~inside, "c-")
        if self.simplified:
            return _nearest(self.som, c_in)[None, :], _nearest(self.som, c_out)[None, :]
        part = partition_prototypes(self.som, c_in, c_out)
        self.partitions.append(part)
        fg = part.fg_prototypes if part.counts[0] else _nearest(self.som, c_in)[None, :]
        bg = part.bg_prototypes if part.counts[1] else _nearest(self.som, c_out)[None, :]
        return fg, bg

    def speed(self, image, phi):
        fg, bg = self.descriptors(image, phi)
        e_plus = sum(_sqdist(image, _proto_value(w, image)) for w in fg)
        e_minus = sum(_sqdist(image, _proto_value(w, image)) for w in bg)
        return -self.lambda_plus * e_plus + self.lambda_minus * e_minus


def somcv_speed(image, phi, som: SomMap) -> np.ndarray:
    return SOMCV(som).speed(image, phi)


def somcvs_speed(image, phi, som: SomMap) -> np.ndarray:
    return SOMCV(som, simplified=True).speed(image, phi)


# -- SOM-RAC --------------------------------------------------------------------

@dataclass(frozen=True)
class SomRacDescriptors:
    wb: np.ndarray
    wb_plus: np.ndarray
    wb_minus: np.ndarray


class SOMRAC(_Weighted):
    """Pixelwise BMU of a fine local mean, assigned to whichever side's coarse
    local mean it is strictly closer to; the other side gets 0."""

    name = "somrac"

    def __init__(self, som: SomMap, sigma_star: float = 0.1, sigma: float = 30.0,
                 lambda_plus=1.0, lambda_minus=1.0):
        super().__init__(lambda_plus, lambda_minus)
        if not sigma_star > 0:
            raise ValidationError(f"sigma_star must be > 0, got {sigma_star}")
        if sigma_star >= sigma:
            raise ParamOrder(f"sigma_star ({sigma_star}) must be smaller than sigma ({sigma})")
        self.som, self.sigma_star, self.sigma = som, float(sigma_star), float(sigma)
        self._wb = (None, None)

    def bmu_field(self, image) -> np.ndarray:
        if self._wb[0] is not image:
            _check_dims(image, self.som)
            self._wb = (image, bmu_prototypes(self.som, local_full_mean(image, self.sigma_star)))
        return self._wb[1]

    def descriptors(self, image, phi) -> SomRacDescriptors:
        wb = self.bmu_field(image)
        inside = np.asarray(phi) >= 0
        s = self.sigma
        c_in = self.remember("c+", lambda m: local_weighted_mean(image, m, s), inside)
        c_out = self.remember("c-", lambda m: local_weighted_mean(image, m, s), ~inside)
        a_plus, a_minus = _sqdist(wb, c_in), _sqdist(wb, c_out)
        closer_in, closer_out = a_plus < a_minus, a_plus > a_minus
        if wb.ndim == 3:
            closer_in, closer_out = closer_in[..., None], closer_out[..., None]
        return SomRacDescriptors(wb, np.where(closer_in, wb, 0.0), np.where(closer_out, wb, 0.0))

    def speed(self, image, phi):
        d = self.descriptors(image, phi)
        return _two_term(image, d.wb_plus, d.wb_minus, self.lambda_plus, self.lambda_minus)


def somrac_descriptors(image, phi, som, sigma_star=0.1, sigma=30.0) -> SomRacDescriptors:
    return SOMRAC(som, sigma_star, sigma).descriptors(image, phi)


def somrac_speed(image, phi, som, sigma_star=0.1, sigma=30.0) -> np.ndarray:
    return SOMRAC(som, sigma_star, sigma).speed(image, phi)


def diagnostic_field(image, phi, model) -> np.ndarray:
    """Raw per-pixel data term (no curvature) of SOAC or a log-likelihood model."""
    term = getattr(model, "pixel_term", None)
    if term is None or model.name not in ("soac", "kde", "gmm", "loglik"):
        raise ValidationError(f"no diagnostic field for model {model.name!r}")
    model.reset()
    return term(image, phi) if model.name == "soac" else term(image)
