"""Model names, their parameters and defaults, and construction of speed models.

Shared by the harness, the command line and the estimator wrappers so that
every entry point accepts the same parameter names.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evolve import CLASSIC, GAUSSIAN, EvolveParams, SpeedModel
from .exceptions import EmptyTrainingSet, ParamOrder, ValidationError
from .models_global import GSRPF, SBGFRLS, ChanVese, CvParams
from .models_local import LRCV, LrcvParams, gmm_fit, gmm_loglik, kde_fit, kde_loglik
from .models_som import CSOMCV, SOAC, SOMCV, SOMRAC
from .som import SomMap, TrainingSchedule, csom_train, train_som

EVOLVE_KEYS = ("dt", "eps", "rho", "sigma_prime", "t_max_evol", "stable_window", "scheme")
SOM_KEYS = ("map_rows", "map_cols", "eta0", "r0", "t_max_train")

# Per model: its own parameter defaults. None for map sizes means "by channel count".
MODEL_DEFAULTS: dict[str, dict] = {
    "cv": {"lambda_plus": 1.0, "lambda_minus": 1.0, "mu": 0.0, "nu": 0.0},
    "sbgfrls": {"alpha": 20.0},
    "gsrpf": {"lambda_plus": 1.0, "lambda_minus": 1.0},
    "lrcv": {"sigma": 3.0, "lambda_plus": 1.0, "lambda_minus": 1.0},
    "kde": {"beta": 0.0},
    "gmm": {"beta": 0.0, "k": 2},
    "csomcv": {"lambda_plus": 1.0, "lambda_minus": 1.0, "map_rows": 3, "map_cols": 3,
               "eta0": 0.9, "r0": None, "t_max_train": 10000},
    "soac": {"sigma": 0.1, "lambda_plus": 1.0, "lambda_minus": 1.0, "map_rows": 3,
             "map_cols": 1, "eta0": 0.1, "r0": 0.5, "t_max_train": 10000},
    "somcv": {"lambda_plus": 1.0, "lambda_minus": 1.0, "map_rows": None, "map_cols": None,
              "eta0": 0.9, "r0": None, "t_max_train": 10000},
    "somcvs": {"lambda_plus": 1.0, "lambda_minus": 1.0, "map_rows": None, "map_cols": None,
               "eta0": 0.9, "r0": None, "t_max_train": 10000},
    "somrac": {"sigma_star": 0.1, "sigma": 30.0, "lambda_plus": 1.0, "lambda_minus": 1.0,
               "map_rows": 4, "map_cols": 4, "eta0": 0.9, "r0": None, "t_max_train": 10000},
}
MODEL_NAMES = tuple(MODEL_DEFAULTS)
SUPERVISED = frozenset({"kde", "gmm", "csomcv", "soac"})
UNSUPERVISED_SOM = frozenset({"somcv", "somcvs", "somrac"})

_INT_KEYS = frozenset({"k", "map_rows", "map_cols", "t_max_train", "t_max_evol", "stable_window"})
_STR_KEYS = frozenset({"scheme"})


def accepted_keys(model: str) -> tuple[str, ...]:
    check_model(model)
    return tuple(MODEL_DEFAULTS[model]) + EVOLVE_KEYS


def all_keys() -> frozenset[str]:
    keys = set(EVOLVE_KEYS)
    for d in MODEL_DEFAULTS.values():
        keys.update(d)
    return frozenset(keys)


def check_model(model: str) -> None:
    if model not in MODEL_DEFAULTS:
        raise ValidationError(f"unknown model {model!r}; choose from {', '.join(MODEL_NAMES)}")


def coerce(key: str, value):
    """Convert a textual or numeric parameter value to its declared type."""
    if value is None:
        return None
    if key in _STR_KEYS:
        return str(value)
    try:
        if key in _INT_KEYS:
            f = float(value)
            if f != int(f):
                raise ValueError
            return int(f)
        return float(value)
    except (TypeError, ValueError):
        kind = "an integer" if key in _INT_KEYS else "a number"
        raise ValidationError(f"parameter {key} must be {kind}, got {value!r}") from None


@dataclass
class ModelSetup:
    """Everything needed to run one model: resolved parameters plus any maps."""

    name: str
    params: dict
    evolve_params: EvolveParams
    maps: dict[str, SomMap] = field(default_factory=dict)


def resolve(model: str, params: dict | None = None, *, channels: int = 1) -> tuple[dict, EvolveParams]:
    """Merge user parameters over defaults and validate them.

    Unknown keys raise :class:`ValidationError`. The C-V baseline defaults
    to the classic scheme, every other model to the Gaussian one.
    """
    check_model(model)
    params = dict(params or {})
    unknown = sorted(set(params) - set(accepted_keys(model)))
    if unknown:
        raise ValidationError(f"model {model} does not accept: {', '.join(unknown)}")
    merged = dict(MODEL_DEFAULTS[model])
    merged.update({k: coerce(k, v) for k, v in params.items() if k in MODEL_DEFAULTS[model]})
    if model in ("somcv", "somcvs"):
        vector = channels > 1
        if merged["map_rows"] is None:
            merged["map_rows"] = 3 if vector else 5
        if merged["map_cols"] is None:
            merged["map_cols"] = 3 if vector else 1
    ev = {k: coerce(k, params[k]) for k in EVOLVE_KEYS if k in params}
    ev.setdefault("scheme", CLASSIC if model == "cv" else GAUSSIAN)
    evolve_params = EvolveParams(**ev)
    _validate(model, merged)
    return merged, evolve_params


def _validate(model: str, p: dict) -> None:
    for key in ("sigma", "sigma_star", "alpha"):
        if key in p and not p[key] > 0:
            raise ValidationError(f"{key} must be > 0, got {p[key]}")
    for key in ("lambda_plus", "lambda_minus", "mu", "nu", "beta"):
        if key in p and p[key] < 0:
            raise ValidationError(f"{key} must be >= 0, got {p[key]}")
    if "k" in p and p["k"] < 1:
        raise ValidationError(f"k must be >= 1, got {p['k']}")
    if "map_rows" in p and (p["map_rows"] < 1 or p["map_cols"] < 1):
        raise ValidationError("map dimensions must be >= 1")
    if "t_max_train" in p and p["t_max_train"] < 1:
        raise ValidationError("t_max_train must be >= 1")
    if model == "somrac" and p["sigma_star"] >= p["sigma"]:
        raise ParamOrder(f"sigma_star ({p['sigma_star']}) must be smaller than sigma ({p['sigma']})")


def schedule_for(p: dict, seed: int) -> TrainingSchedule:
    return TrainingSchedule.preset(p["map_rows"], p["map_cols"], eta0=p["eta0"], r0=p["r0"],
                                   t_max=p["t_max_train"], seed=seed)


def train_maps(model: str, p: dict, image: np.ndarray, *, seed: int = 0,
               fg_samples=None, bg_samples=None) -> dict[str, SomMap]:
    """Train the map(s) a SOM model needs; empty dict for other models."""
    if model in UNSUPERVISED_SOM:
        data = image.reshape(-1, image.shape[2]) if image.ndim == 3 else image.reshape(-1, 1)
        return {"map": train_som(data, p["map_rows"], p["map_cols"], schedule_for(p, seed))}
    if model in ("csomcv", "soac"):
        fg, bg = _require_samples(model, fg_samples, bg_samples)
        fg_map, bg_map = csom_train(fg, bg, p["map_rows"], p["map_cols"], schedule_for(p, seed))
        return {"fg": fg_map, "bg": bg_map}
    return {}


def _require_samples(model, fg, bg):
    if fg is None or bg is None:
        raise ValidationError(f"model {model} is supervised and needs foreground and background "
                              "training pixels")
    fg, bg = np.asarray(fg, dtype=float), np.asarray(bg, dtype=float)
    if fg.size == 0 or bg.size == 0:
        raise EmptyTrainingSet(f"model {model} received an empty training set")
    return fg, bg


def build(model: str, p: dict, *, maps: dict[str, SomMap] | None = None, seed: int = 0,
          fg_samples=None, bg_samples=None) -> SpeedModel:
    """Instantiate the speed model from resolved parameters."""
    maps = maps or {}
    lp, lm = p.get("lambda_plus", 1.0), p.get("lambda_minus", 1.0)
    if model == "cv":
        return ChanVese(CvParams(lp, lm, p["mu"], p["nu"]))
    if model == "sbgfrls":
        return SBGFRLS(p["alpha"])
    if model == "gsrpf":
        return GSRPF(lp, lm)
    if model == "lrcv":
        return LRCV(LrcvParams(p["sigma"], lp, lm))
    if model == "kde":
        fg, bg = _require_samples(model, fg_samples, bg_samples)
        return kde_loglik(kde_fit(fg, bg), p["beta"])
    if model == "gmm":
        fg, bg = _require_samples(model, fg_samples, bg_samples)
        fg_seed, bg_seed = (int(s.generate_state(1)[0])
                            for s in np.random.SeedSequence(seed).spawn(2))
        return gmm_loglik(gmm_fit(fg, p["k"], fg_seed), gmm_fit(bg, p["k"], bg_seed), p["beta"])
    if model in ("csomcv", "soac"):
        if "fg" not in maps or "bg" not in maps:
            raise ValidationError(f"model {model} needs trained foreground and background maps")
        if model == "csomcv":
            return CSOMCV(maps["fg"], maps["bg"], lp, lm)
        return SOAC(maps["fg"], maps["bg"], p["sigma"], lp, lm)
    if "map" not in maps:
        raise ValidationError(f"model {model} needs a trained map")
    if model in ("somcv", "somcvs"):
        return SOMCV(maps["map"], lp, lm, simplified=model == "somcvs")
    return SOMRAC(maps["map"], p["sigma_star"], p["sigma"], lp, lm)


def prepare(model: str, image: np.ndarray, params: dict | None = None, *, seed: int = 0,
            fg_samples=None, bg_samples=None, maps: dict[str, SomMap] | None = None,
            ) -> tuple[SpeedModel, ModelSetup]:
    """Resolve parameters, train maps when none are supplied, and build the model."""
    image = np.asarray(image, dtype=float)
    channels = image.shape[2] if image.ndim == 3 else 1
    p, ev = resolve(model, params, channels=channels)
    if maps is None:
        maps = train_maps(model, p, image, seed=seed, fg_samples=fg_samples, bg_samples=bg_samples)
    speed = build(model, p, maps=maps, seed=seed, fg_samples=fg_samples, bg_samples=bg_samples)
    return speed, ModelSetup(model, p, ev, maps)
