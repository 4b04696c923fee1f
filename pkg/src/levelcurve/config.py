"""Flat ``key = value`` experiment configs.

Lines starting with ``#`` (after optional whitespace) are comments, as is
anything after a ``#`` on a value line. A value containing ``;`` is a list;
the run set is the Cartesian product of all list-valued keys. Unknown keys
are errors so that typos in a sweep cannot pass silently.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

from . import registry
from .exceptions import IoError, ValidationError
from .grid import Rect
from .synth import PRESETS

NOISE_KINDS = ("none", "gaussian", "salt_pepper")

# keys that describe the experiment itself rather than a model parameter
RUN_KEYS = frozenset({
    "model", "preset", "image", "truth", "noise", "sd", "density", "init", "seed",
    "fg_mask", "bg_mask", "fg_pixels", "bg_pixels", "record_time", "threads",
})
SWEEPABLE = frozenset({"model", "sd", "density", "init", "seed"}) | registry.all_keys()


@dataclass(frozen=True)
class ExperimentConfig:
    """A batch of runs: every combination of the list-valued settings.

    ``params`` maps a model parameter name to its candidate values; each
    model only sweeps over the keys it accepts.
    """

    models: tuple[str, ...]
    preset: str | None = None
    image: str | None = None
    truth: str | None = None
    noise: str = "none"
    sd: tuple[float, ...] = (0.0,)
    density: tuple[float, ...] = (0.0,)
    inits: tuple[Rect, ...] = ()
    seeds: tuple[int, ...] = (0,)
    fg_mask: str | None = None
    bg_mask: str | None = None
    fg_pixels: int | None = None
    bg_pixels: int | None = None
    params: dict[str, tuple] = field(default_factory=dict)
    record_time: bool = False
    threads: int | None = None

    def __post_init__(self):
        if not self.models:
            raise ValidationError("config needs at least one model")
        for m in self.models:
            registry.check_model(m)
        if (self.preset is None) == (self.image is None):
            raise ValidationError("config needs exactly one of 'preset' or 'image'")
        if self.preset is not None and self.preset not in PRESETS:
            raise ValidationError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")
        if self.image is not None and self.truth is None:
            raise ValidationError("'image' requires a 'truth' mask for scoring")
        if self.noise not in NOISE_KINDS:
            raise ValidationError(f"noise must be one of {NOISE_KINDS}, got {self.noise!r}")
        if any(s < 0 for s in self.sd):
            raise ValidationError("sd values must be >= 0")
        if any(not 0 <= d <= 1 for d in self.density):
            raise ValidationError("density values must lie in [0, 1]")
        if not self.inits:
            raise ValidationError("config needs an 'init' rectangle")
        if (self.fg_mask is None) != (self.bg_mask is None):
            raise ValidationError("fg_mask and bg_mask must be given together")
        if (self.fg_pixels is None) != (self.bg_pixels is None):
            raise ValidationError("fg_pixels and bg_pixels must be given together")
        if self.fg_pixels is not None and (self.fg_pixels < 1 or self.bg_pixels < 1):
            raise ValidationError("fg_pixels and bg_pixels must be >= 1")
        if self.fg_mask is not None and self.fg_pixels is not None:
            raise ValidationError("give training masks or pixel counts, not both")
        supervised = [m for m in self.models if m in registry.SUPERVISED]
        if supervised and self.fg_mask is None and self.fg_pixels is None:
            raise ValidationError(f"supervised model(s) {', '.join(supervised)} need training "
                                  "pixels: set fg_mask/bg_mask or fg_pixels/bg_pixels")
        if self.threads is not None and self.threads < 1:
            raise ValidationError("threads must be >= 1")
        for key, values in self.params.items():
            if not any(key in registry.accepted_keys(m) for m in self.models):
                raise ValidationError(f"parameter {key} is not used by any configured model")
            for v in values:
                registry.coerce(key, v)

    @property
    def noise_levels(self) -> tuple[float, ...]:
        if self.noise == "gaussian":
            return self.sd
        if self.noise == "salt_pepper":
            return self.density
        return (0.0,)

    def input_paths(self) -> list[str]:
        return [p for p in (self.image, self.truth, self.fg_mask, self.bg_mask) if p is not None]


def _split(value: str) -> list[str]:
    items = [v.strip() for v in value.split(";")]
    if any(not v for v in items):
        raise ValidationError(f"empty list item in {value!r}")
    return items


def _num(key, text, cast=float):
    try:
        v = float(text)
    except ValueError:
        raise ValidationError(f"{key} must be numeric, got {text!r}") from None
    if cast is int:
        if v != int(v):
            raise ValidationError(f"{key} must be an integer, got {text!r}")
        return int(v)
    return v


def _bool(key, text) -> bool:
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"{key} must be true or false, got {text!r}")


def parse_config(text: str, *, base_dir: str | None = None) -> ExperimentConfig:
    """Parse config text; relative paths are resolved against ``base_dir``."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ValidationError(f"line {lineno}: empty key or value")
        if key not in RUN_KEYS and key not in registry.all_keys():
            raise ValidationError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ValidationError(f"line {lineno}: duplicate key {key!r}")
        if ";" in value and key not in SWEEPABLE:
            raise ValidationError(f"line {lineno}: key {key!r} does not take a list")
        raw[key] = value

    def path(key):
        if key not in raw:
            return None
        p = raw[key]
        return os.path.join(base_dir, p) if base_dir and not os.path.isabs(p) else p

    def count(key):
        return _num(key, raw[key], int) if key in raw else None

    params = {k: tuple(_split(v)) for k, v in raw.items() if k not in RUN_KEYS}
    return ExperimentConfig(
        models=tuple(_split(raw["model"])) if "model" in raw else (),
        preset=raw.get("preset"),
        image=path("image"),
        truth=path("truth"),
        noise=raw.get("noise", "none"),
        sd=tuple(_num("sd", s) for s in _split(raw["sd"])) if "sd" in raw else (0.0,),
        density=(tuple(_num("density", s) for s in _split(raw["density"]))
                 if "density" in raw else (0.0,)),
        inits=tuple(Rect.parse(s) for s in _split(raw["init"])) if "init" in raw else (),
        seeds=tuple(_num("seed", s, int) for s in _split(raw["seed"])) if "seed" in raw else (0,),
        fg_mask=path("fg_mask"),
        bg_mask=path("bg_mask"),
        fg_pixels=count("fg_pixels"),
        bg_pixels=count("bg_pixels"),
        params=params,
        record_time=_bool("record_time", raw["record_time"]) if "record_time" in raw else False,
        threads=count("threads"),
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read config {os.fspath(path)!r}: {exc.strerror or exc}") from exc
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))
