"""Experiment orchestration: generate, (train), evolve, score, report."""
from __future__ import annotations

import csv
import io as _stdio
import itertools
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import registry
from .config import ExperimentConfig
from .evolve import evolve
from .exceptions import IoError, ValidationError
from .grid import Rect, init_levelset_rect
from .io import read_image, read_mask
from .metrics import prf
from .synth import add_gaussian_noise, add_salt_pepper, gen_synthetic, preset

CSV_HEADER = ("model", "image", "seed", "precision", "recall", "fmeasure", "iterations", "wall_ms")
THREADS_ENV = "LEVELCURVE_THREADS"


@dataclass(frozen=True)
class RunSpec:
    model: str
    params: dict
    init: Rect
    seed: int
    noise_level: float
    label_model: str
    label_image: str


@dataclass(frozen=True)
class RunRow:
    model: str
    image: str
    seed: int
    precision: float
    recall: float
    fmeasure: float
    iterations: int
    wall_ms: float

    def cells(self) -> list[str]:
        return [self.model, self.image, str(self.seed), f"{self.precision:.6f}",
                f"{self.recall:.6f}", f"{self.fmeasure:.6f}", str(self.iterations),
                f"{self.wall_ms:.1f}"]


@dataclass
class Report:
    rows: list[RunRow] = field(default_factory=list)
    masks: list[np.ndarray] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = _stdio.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow(r.cells())
        return buf.getvalue()


@dataclass(frozen=True)
class Scene:
    image: np.ndarray
    truth: np.ndarray
    name: str
    fg_mask: np.ndarray | None = None
    bg_mask: np.ndarray | None = None


def load_scene(config: ExperimentConfig) -> Scene:
    """Clean image and truth, plus training masks when given as files."""
    if config.preset is not None:
        image, truth = gen_synthetic(preset(config.preset))
        name = config.preset
    else:
        image, truth = read_image(config.image), read_mask(config.truth)
        name = os.path.splitext(os.path.basename(config.image))[0]
        if truth.shape != image.shape[:2]:
            raise ValidationError(f"truth {truth.shape} does not match image {image.shape[:2]}")
    fg = bg = None
    if config.fg_mask is not None:
        fg, bg = read_mask(config.fg_mask), read_mask(config.bg_mask)
        for m in (fg, bg):
            if m.shape != image.shape[:2]:
                raise ValidationError("training masks must match the image size")
    for rect in config.inits:
        rect.check(image.shape[:2])
    return Scene(image, truth, name, fg, bg)


def _label_level(kind: str, level: float) -> str:
    if kind == "gaussian":
        return f"+sd{level:g}"
    if kind == "salt_pepper":
        return f"+sp{level:g}"
    return ""


def expand(config: ExperimentConfig, scene_name: str) -> list[RunSpec]:
    """All runs of a config, in report order: model, noise, params, init, seed."""
    specs = []
    multi_init = len(config.inits) > 1
    for model in config.models:
        keys = [k for k in config.params if k in registry.accepted_keys(model)]
        for level in config.noise_levels:
            for combo in itertools.product(*(config.params[k] for k in keys)):
                params = dict(zip(keys, combo))
                registry.resolve(model, params)
                tag = ",".join(f"{k}={v}" for k, v in params.items())
                for rect in config.inits:
                    label = model + (f"[{tag}]" if tag else "")
                    if multi_init:
                        label += "@" + ":".join(str(v) for v in rect)
                    for seed in config.seeds:
                        specs.append(RunSpec(model, params, rect, seed, level, label,
                                             scene_name + _label_level(config.noise, level)))
    return specs


def noisy(image: np.ndarray, kind: str, level: float, seed: int) -> np.ndarray:
    if kind == "gaussian":
        return add_gaussian_noise(image, level, seed)
    if kind == "salt_pepper":
        return add_salt_pepper(image, level, seed)
    return np.array(image, dtype=float)


def sample_training(image, truth, fg_count: int, bg_count: int, seed: int):
    """Draw training intensities uniformly without replacement from each true region."""
    rng = np.random.default_rng([seed, 1])
    out = []
    for region, n in ((truth, fg_count), (~truth, bg_count)):
        idx = np.flatnonzero(region)
        if n > idx.size:
            raise ValidationError(f"asked for {n} training pixels but the region holds {idx.size}")
        pick = rng.choice(idx, size=n, replace=False)
        flat = image.reshape(-1, image.shape[2]) if image.ndim == 3 else image.reshape(-1, 1)
        out.append(flat[pick])
    return out[0], out[1]


def _training(config: ExperimentConfig, scene: Scene, image, seed):
    if scene.fg_mask is not None:
        flat = image.reshape(-1, image.shape[2]) if image.ndim == 3 else image.reshape(-1, 1)
        return flat[scene.fg_mask.ravel()], flat[scene.bg_mask.ravel()]
    if config.fg_pixels is not None:
        return sample_training(image, scene.truth, config.fg_pixels, config.bg_pixels, seed)
    return None, None


def execute(spec: RunSpec, scene: Scene, config: ExperimentConfig):
    """Run one configuration; returns the report row and the final mask."""
    image = noisy(scene.image, config.noise, spec.noise_level, spec.seed)
    start = time.perf_counter()
    fg, bg = (_training(config, scene, image, spec.seed)
              if spec.model in registry.SUPERVISED else (None, None))
    model, setup = registry.prepare(spec.model, image, spec.params, seed=spec.seed,
                                    fg_samples=fg, bg_samples=bg)
    phi0 = init_levelset_rect(image.shape[:2], spec.init, setup.evolve_params.rho)
    result = evolve(image, phi0, model, setup.evolve_params)
    elapsed = (time.perf_counter() - start) * 1000.0 if config.record_time else 0.0
    score = prf(result.mask, scene.truth)
    row = RunRow(spec.label_model, spec.label_image, spec.seed, score.precision, score.recall,
                 score.fmeasure, result.iterations, elapsed)
    return row, result.mask


def worker_count(n_runs: int, requested: int | None = None) -> int:
    cap = os.cpu_count() or 1
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            cap = min(cap, max(1, int(env)))
        except ValueError:
            raise ValidationError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if requested is not None:
        cap = min(cap, requested)
    return max(1, min(cap, n_runs))


def run_experiment(config: ExperimentConfig, *, keep_masks: bool = False) -> Report:
    """Run every combination in ``config``; rows come back in config order."""
    scene = load_scene(config)
    specs = expand(config, scene.name)
    workers = worker_count(len(specs), config.threads)
    if workers == 1:
        results = [execute(s, scene, config) for s in specs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda s: execute(s, scene, config), specs))
    report = Report([r for r, _ in results])
    if keep_masks:
        report.masks = [m for _, m in results]
    return report


def write_report(path, report: Report) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(report.to_csv())
    except OSError as exc:
        raise IoError(f"cannot write {os.fspath(path)!r}: {exc.strerror or exc}") from exc


# -- bundled experiment presets ----------------------------------------------------

# GSRPF init: a small rectangle inside the brightest band of fig4_1
FIG4_1_INIT = Rect(81, 30, 19, 20)

EXPERIMENT_PRESETS: dict[str, ExperimentConfig] = {
    "table4_1": ExperimentConfig(models=("gsrpf",), preset="fig4_1", noise="gaussian",
                                 sd=(10.0, 20.0, 30.0, 40.0, 50.0), inits=(FIG4_1_INIT,),
                                 params={"sigma_prime": ("1.4",)}),
}


def experiment_preset(name: str, **overrides) -> ExperimentConfig:
    try:
        cfg = EXPERIMENT_PRESETS[name]
    except KeyError:
        raise ValidationError(f"unknown experiment preset {name!r}; "
                              f"choose from {sorted(EXPERIMENT_PRESETS)}") from None
    return replace(cfg, **overrides) if overrides else cfg
