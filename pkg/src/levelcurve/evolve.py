"""The shared contour-evolution engine and the speed-model contract."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import DimMismatch, ModelError, ValidationError
from .grid import binarize_levelset, convolve, dirac_eps, gaussian_kernel, gradient_magnitude
from .regional import region_mean

DIRAC, GRAD_MAG = "dirac", "grad_mag"
GAUSSIAN, CLASSIC = "gaussian", "classic"


class SpeedModel:
    """Base class for speed fields.

    Subclasses implement :meth:`speed` and set ``multiplier``. Region
    statistics go through :meth:`region_mean`, which applies the
    empty-region policy: reuse the last value seen for that key, or the
    global image mean on the first iteration.
    """

    name = "model"
    multiplier = DIRAC

    def reset(self) -> None:
        self._memo = {}

    def speed(self, image: np.ndarray, phi: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def energy(self, image: np.ndarray, mask: np.ndarray) -> float:
        raise NotImplementedError(f"{self.name} has no energy functional")

    def region_mean(self, image, mask, key: str):
        memo = self.__dict__.setdefault("_memo", {})
        if np.any(mask):
            memo[key] = region_mean(image, mask)
        elif key not in memo:
            memo[key] = region_mean(image, np.ones(np.shape(mask), dtype=bool))
        return memo[key]

    def remember(self, key: str, compute: Callable, mask):
        """Generic variant of :meth:`region_mean` for any descriptor."""
        memo = self.__dict__.setdefault("_memo", {})
        if np.any(mask):
            memo[key] = compute(mask)
        elif key not in memo:
            memo[key] = compute(np.ones(np.shape(mask), dtype=bool))
        return memo[key]


class ZeroSpeed(SpeedModel):
    """S = 0 everywhere; useful for pipeline checks."""

    name = "zero"

    def speed(self, image, phi):
        return np.zeros(np.shape(phi))


@dataclass(frozen=True)
class EvolveParams:
    """Evolution settings.

    ``scheme="gaussian"`` is the binarize-then-smooth iteration shared by
    every model; ``sigma_prime=None`` disables the smoothing step
    (diagnostic mode). ``scheme="classic"`` is the unregularized reference
    iteration used for the Chan-Vese baseline: the speed is normalized by
    its peak, phi is clipped to [-rho, rho], and convergence additionally
    requires the largest per-pixel change to drop below ``phi_tol``.
    """

    dt: float = 1.0
    eps: float = 1.0
    rho: float = 1.0
    sigma_prime: float | None = 1.5
    t_max_evol: int = 1000
    stable_window: int = 2
    scheme: str = GAUSSIAN
    phi_tol: float = 1e-3

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError(f"dt must be > 0, got {self.dt}")
        if not self.eps > 0:
            raise ValidationError(f"eps must be > 0, got {self.eps}")
        if not self.rho > 0:
            raise ValidationError(f"rho must be > 0, got {self.rho}")
        if self.sigma_prime is not None and not self.sigma_prime > 0:
            raise ValidationError(f"sigma_prime must be > 0, got {self.sigma_prime}")
        if self.t_max_evol < 1:
            raise ValidationError(f"t_max_evol must be >= 1, got {self.t_max_evol}")
        if self.stable_window < 1:
            raise ValidationError(f"stable_window must be >= 1, got {self.stable_window}")
        if self.scheme not in (GAUSSIAN, CLASSIC):
            raise ValidationError(f"unknown scheme {self.scheme!r}")


@dataclass
class SegmentationResult:
    mask: np.ndarray
    phi: np.ndarray
    iterations: int
    converged: bool
    energy_trace: list[float] | None = None
    speed_field_snapshot: np.ndarray | None = None
    metrics: dict = field(default_factory=dict)


def converged(mask_history: Sequence[np.ndarray], stable_window: int) -> bool:
    """True iff the last ``stable_window + 1`` masks agree pixelwise."""
    if len(mask_history) < stable_window + 1:
        return False
    tail = list(mask_history)[-(stable_window + 1):]
    return all(np.array_equal(tail[0], m) for m in tail[1:])


def evolve(image: np.ndarray, phi0: np.ndarray, model: SpeedModel,
           params: EvolveParams | None = None, *, track_energy: bool = False,
           keep_speed: bool = False,
           callback: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
           ) -> SegmentationResult:
    params = params or EvolveParams()
    image = np.asarray(image, dtype=float)
    phi = np.array(phi0, dtype=float)
    if phi.shape != image.shape[:2]:
        raise DimMismatch(f"phi {phi.shape} does not match image {image.shape[:2]}")
    if model.multiplier not in (DIRAC, GRAD_MAG):
        raise ModelError(f"unknown multiplier {model.multiplier!r}")
    model.reset()
    kernel = gaussian_kernel(params.sigma_prime) if params.sigma_prime else None
    history = deque([phi >= 0], maxlen=params.stable_window + 1)
    trace = [] if track_energy else None
    speed = None
    done = False
    it = 0
    while it < params.t_max_evol and not done:
        it += 1
        speed = np.asarray(model.speed(image, phi), dtype=float)
        if speed.shape != phi.shape or not np.all(np.isfinite(speed)):
            raise ModelError(f"{model.name} produced a non-finite or misshaped speed field")
        mult = dirac_eps(phi, params.eps) if model.multiplier == DIRAC else gradient_magnitude(phi)
        if params.scheme == GAUSSIAN:
            phi = binarize_levelset(phi + params.dt * mult * speed, params.rho)
            if kernel is not None:
                phi = convolve(phi, kernel)
            settled = True
        else:
            peak = float(np.abs(speed).max())
            step = params.dt * mult * speed / peak if peak > 0 else np.zeros_like(phi)
            new = np.clip(phi + step, -params.rho, params.rho)
            settled = float(np.abs(new - phi).max()) <= params.phi_tol
            phi = new
        mask = phi >= 0
        history.append(mask)
        if trace is not None:
            trace.append(_safe_energy(model, image, mask))
        if callback is not None:
            callback(it, phi, mask)
        done = settled and converged(history, params.stable_window)
    return SegmentationResult(mask=phi >= 0, phi=phi, iterations=it, converged=done,
                              energy_trace=trace,
                              speed_field_snapshot=speed if keep_speed else None)


def _safe_energy(model: SpeedModel, image, mask) -> float:
    try:
        return float(model.energy(image, mask))
    except (NotImplementedError, ValidationError):
        return float("nan")
