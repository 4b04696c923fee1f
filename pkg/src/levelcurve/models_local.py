"""Local and supervised statistical speed models: LRCV and the
log-likelihood contour driven by KDE or Gaussian-mixture densities."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import logsumexp

from .evolve import DIRAC, SpeedModel
from .exceptions import ModelError, TooFewSamples, ValidationError
from .grid import curvature
from .models_global import _both_sides, _sqdist
from .regional import local_weighted_mean

DENSITY_FLOOR = 1e-12
KDE_MIN_BANDWIDTH = 0.5
_CHUNK = 4096


# -- LRCV -----------------------------------------------------------------------

@dataclass(frozen=True)
class LrcvParams:
    sigma: float = 3.0
    lambda_plus: float = 1.0
    lambda_minus: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError(f"sigma must be > 0, got {self.sigma}")
        if self.lambda_plus < 0 or self.lambda_minus < 0:
            raise ValidationError("lambda weights must be >= 0")


class LRCV(SpeedModel):
    name = "lrcv"
    multiplier = DIRAC

    def __init__(self, params: LrcvParams = LrcvParams()):
        self.params = params

    def local_means(self, image, phi):
        inside = np.asarray(phi) >= 0
        s = self.params.sigma
        c_in = self.remember("c+", lambda m: local_weighted_mean(image, m, s), inside)
        c_out = self.remember("c-", lambda m: local_weighted_mean(image, m, s), ~inside)
        return c_in, c_out

    def speed(self, image, phi):
        c_in, c_out = self.local_means(image, phi)
        p = self.params
        return -p.lambda_plus * _sqdist(image, c_in) + p.lambda_minus * _sqdist(image, c_out)

    def energy(self, image, mask):
        return lrcv_energy(image, mask, self.params)


def lrcv_speed(image, phi, params: LrcvParams = LrcvParams()) -> np.ndarray:
    return LRCV(params).speed(image, phi)


def lrcv_energy(image, mask, params: LrcvParams = LrcvParams()) -> float:
    mask = _both_sides(mask)
    c_in = local_weighted_mean(image, mask, params.sigma)
    c_out = local_weighted_mean(image, ~mask, params.sigma)
    return float(params.lambda_plus * _sqdist(image, c_in)[mask].sum()
                 + params.lambda_minus * _sqdist(image, c_out)[~mask].sum())


# -- densities ------------------------------------------------------------------

def _samples(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x.reshape(-1, 1) if x.ndim <= 1 else x.reshape(-1, x.shape[-1])


def mean_nn_distance(samples) -> float:
    x = _samples(samples)
    if x.shape[0] < 2:
        raise TooFewSamples("need at least two samples for a nearest-neighbour bandwidth")
    dist, _ = cKDTree(x).query(x, k=2)
    return float(dist[:, 1].mean())


@dataclass(frozen=True)
class KdeModel:
    fg_samples: np.ndarray
    bg_samples: np.ndarray
    sigma_fg: float
    sigma_bg: float

    @property
    def dim(self) -> int:
        return self.fg_samples.shape[1]

    def density(self, region: str, intensity) -> np.ndarray:
        return kde_density(self, region, intensity)


def kde_fit(fg, bg) -> KdeModel:
    """One bandwidth per region: mean nearest-neighbour distance, floored at 0.5."""
    fg, bg = _samples(fg), _samples(bg)
    if fg.shape[1] != bg.shape[1]:
        raise ValidationError("training sets disagree on dimension")
    return KdeModel(fg, bg, max(mean_nn_distance(fg), KDE_MIN_BANDWIDTH),
                    max(mean_nn_distance(bg), KDE_MIN_BANDWIDTH))


def _kde_eval(samples: np.ndarray, sigma: float, values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    d = samples.shape[1]
    if d == 1:
        shape = v.shape
        flat = v.reshape(-1, 1)
    else:
        if v.shape[-1] != d:
            raise ValidationError(f"expected {d}-channel input")
        shape = v.shape[:-1]
        flat = v.reshape(-1, d)
    out = np.empty(flat.shape[0])
    norm = 1.0 / (math.sqrt(2.0 * math.pi) * samples.shape[0])
    for start in range(0, flat.shape[0], _CHUNK):
        blk = flat[start:start + _CHUNK]
        u2 = ((blk[:, None, :] - samples[None, :, :]) ** 2).sum(axis=2) / (sigma * sigma)
        out[start:start + _CHUNK] = norm * np.exp(-0.5 * u2).sum(axis=1)
    return out.reshape(shape)


def kde_density(model: KdeModel, region: str, intensity) -> np.ndarray:
    """(1/|L|) sum_i K((I - I_i)/sigma); the kernel is not divided by sigma."""
    if region in ("fg", "in", "foreground"):
        return _kde_eval(model.fg_samples, model.sigma_fg, intensity)
    if region in ("bg", "out", "background"):
        return _kde_eval(model.bg_samples, model.sigma_bg, intensity)
    raise ValidationError(f"unknown region {region!r}")


@dataclass(frozen=True)
class GmmModel:
    """Diagonal Gaussian mixture for one region."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    log_likelihood: float = float("nan")
    trace: tuple = field(default=(), repr=False)

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    def log_density(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        d = self.means.shape[1]
        shape = v.shape if d == 1 else v.shape[:-1]
        x = v.reshape(-1, d)
        logp = _component_logpdf(x, self.weights, self.means, self.variances)
        return logsumexp(logp, axis=1).reshape(shape)

    def density(self, values) -> np.ndarray:
        return np.exp(self.log_density(values))


def _component_logpdf(x, weights, means, variances) -> np.ndarray:
    """log(alpha_k N(x | mu_k, diag var_k)) for every sample and component."""
    diff2 = (x[:, None, :] - means[None, :, :]) ** 2 / variances[None, :, :]
    log_norm = -0.5 * np.log(2.0 * math.pi * variances).sum(axis=1)
    return np.log(weights)[None, :] + log_norm[None, :] - 0.5 * diff2.sum(axis=2)


def _em(x, k, rng, var_floor, tol, max_iter):
    n = x.shape[0]
    means = x[rng.choice(n, size=k, replace=False)].copy()
    variances = np.maximum(np.tile(x.var(axis=0), (k, 1)), var_floor)
    weights = np.full(k, 1.0 / k)
    trace = []
    for _ in range(max_iter):
        logp = _component_logpdf(x, weights, means, variances)
        ll_each = logsumexp(logp, axis=1)
        ll = float(ll_each.sum())
        if trace and ll < trace[-1] - 1e-9 * max(1.0, abs(trace[-1])):
            raise ModelError(f"EM log-likelihood decreased: {trace[-1]} -> {ll}")
        trace.append(ll)
        if len(trace) > 1 and abs(trace[-1] - trace[-2]) <= tol * max(abs(trace[-2]), 1e-300):
            break
        resp = np.exp(logp - ll_each[:, None])
        nk = resp.sum(axis=0) + 1e-300
        weights = nk / n
        means = (resp.T @ x) / nk[:, None]
        variances = np.maximum((resp.T @ (x * x)) / nk[:, None] - means ** 2, var_floor)
    return GmmModel(weights, means, variances, trace[-1], tuple(trace))


def gmm_fit(samples, k: int = 2, seed: int = 0, *, restarts: int = 5,
            var_floor: float = 1e-2, tol: float = 1e-8, max_iter: int = 500) -> GmmModel:
    """EM fit, best log-likelihood over ``restarts`` seeded initializations."""
    x = _samples(samples)
    if k < 1:
        raise ValidationError("k must be >= 1")
    if x.shape[0] < k:
        raise TooFewSamples(f"{x.shape[0]} samples for {k} components")
    best = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        fit = _em(x, k, np.random.default_rng(child), var_floor, tol, max_iter)
        if best is None or fit.log_likelihood > best.log_likelihood:
            best = fit
    return best


# -- log-likelihood contour -------------------------------------------------------

class LogLikelihood(SpeedModel):
    """S = beta*kappa + log p_in(I) - log p_out(I) with densities floored at 1e-12."""

    name = "loglik"
    multiplier = DIRAC

    def __init__(self, p_in: Callable, p_out: Callable, beta: float = 0.0):
        if beta < 0:
            raise ValidationError("beta must be >= 0")
        self.p_in, self.p_out, self.beta = p_in, p_out, float(beta)
        self._cache = (None, None)

    def pixel_term(self, image) -> np.ndarray:
        if self._cache[0] is not image:
            ratio = (np.log(np.maximum(self.p_in(image), DENSITY_FLOOR))
                     - np.log(np.maximum(self.p_out(image), DENSITY_FLOOR)))
            self._cache = (image, ratio)
        return self._cache[1]

    def speed(self, image, phi):
        s = self.pixel_term(image)
        return s + self.beta * curvature(phi) if self.beta else s.copy()


def kde_loglik(model: KdeModel, beta: float = 0.0) -> LogLikelihood:
    m = LogLikelihood(lambda v: kde_density(model, "fg", v),
                      lambda v: kde_density(model, "bg", v), beta)
    m.name = "kde"
    return m


def gmm_loglik(fg: GmmModel, bg: GmmModel, beta: float = 0.0) -> LogLikelihood:
    m = LogLikelihood(fg.density, bg.density, beta)
    m.name = "gmm"
    return m


def loglik_speed(image, phi, p_in, p_out, beta: float = 0.0) -> np.ndarray:
    return LogLikelihood(p_in, p_out, beta).speed(image, phi)
