"""Kohonen self-organizing maps.

Maps are small (at most a few dozen neurons), so BMU queries are exact
linear scans. Training follows the classic on-line rule with exponentially
decaying learning rate and neighbourhood radius.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .exceptions import CorruptHeader, DimMismatch, EmptyTrainingSet, IoError, ValidationError

FOREGROUND, BACKGROUND = 1, 0


@dataclass(frozen=True)
class SomMap:
    """``rows x cols`` grid of neurons, prototypes stored row-major as (n, D)."""

    rows: int
    cols: int
    prototypes: np.ndarray

    def __post_init__(self):
        p = np.array(self.prototypes, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        if self.rows < 1 or self.cols < 1:
            raise ValidationError("map needs at least one neuron")
        if p.shape[0] != self.rows * self.cols:
            raise ValidationError(f"{p.shape[0]} prototypes for a {self.rows}x{self.cols} map")
        if not np.all(np.isfinite(p)):
            raise ValidationError("prototypes must be finite")
        p.setflags(write=False)
        object.__setattr__(self, "prototypes", p)

    @property
    def dim(self) -> int:
        return self.prototypes.shape[1]

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @property
    def coords(self) -> np.ndarray:
        r, c = np.divmod(np.arange(self.size), self.cols)
        return np.stack([r, c], axis=1).astype(float)

    def grid_sqdist(self) -> np.ndarray:
        xy = self.coords
        diff = xy[:, None, :] - xy[None, :, :]
        return (diff ** 2).sum(axis=2)


@dataclass(frozen=True)
class TrainingSchedule:
    eta0: float = 0.9
    r0: float = 1.0
    tau_eta: float = 10000.0
    tau_r: float = 10000.0
    t_max: int = 10000
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.eta0 <= 1:
            raise ValidationError(f"eta0 must lie in (0, 1], got {self.eta0}")
        if not self.r0 > 0:
            raise ValidationError(f"r0 must be > 0, got {self.r0}")
        if not (self.tau_eta > 0 and self.tau_r > 0):
            raise ValidationError("time constants must be > 0")
        if self.t_max < 1:
            raise ValidationError(f"t_max must be >= 1, got {self.t_max}")

    @classmethod
    def preset(cls, rows: int, cols: int, *, eta0: float = 0.9, r0: float | None = None,
               t_max: int = 10000, seed: int = 0) -> "TrainingSchedule":
        """Default hyper-parameters: r0 = max(M, N)/2, tau_eta = t_max,
        tau_r = t_max/ln(r0) (t_max when r0 <= 1)."""
        if r0 is None:
            r0 = max(rows, cols) / 2.0
        tau_r = t_max / math.log(r0) if r0 > 1 else float(t_max)
        return cls(eta0=eta0, r0=r0, tau_eta=float(t_max), tau_r=tau_r, t_max=t_max, seed=seed)

    @classmethod
    def soac(cls, rows: int = 3, cols: int = 1, *, t_max: int = 10000, seed: int = 0):
        return cls.preset(rows, cols, eta0=0.1, r0=0.5, t_max=t_max, seed=seed)

    def learning_rate(self, t):
        return self.eta0 * np.exp(-np.asarray(t, dtype=float) / self.tau_eta)

    def radius(self, t):
        return self.r0 * np.exp(-np.asarray(t, dtype=float) / self.tau_r)


def _as_samples(data, dim: int | None = None) -> np.ndarray:
    x = np.asarray(data, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x[:, None]
    elif x.ndim > 2:
        x = x.reshape(-1, x.shape[-1])
    if dim is not None and x.shape[1] != dim:
        raise DimMismatch(f"input dimension {x.shape[1]} != map dimension {dim}")
    return x


def som_init(rows: int, cols: int, dim: int, intensity_range=(0.0, 255.0), seed: int = 0) -> SomMap:
    lo, hi = (float(v) for v in intensity_range)
    if hi < lo:
        raise ValidationError("intensity range must satisfy low <= high")
    rng = np.random.default_rng(seed)
    return SomMap(rows, cols, lo + (hi - lo) * rng.random((rows * cols, dim)))


def bmu(som: SomMap, inputs) -> np.ndarray | int:
    """Index of the nearest prototype; ties go to the lowest index.

    A 1-D ``inputs`` of length D (or a scalar when D = 1) yields an ``int``;
    an (N, D) array yields N indices.
    """
    single = np.ndim(inputs) == 0 or (np.ndim(inputs) == 1 and som.dim > 1)
    x = _as_samples(np.atleast_1d(inputs) if single else inputs, som.dim)
    if single and x.shape[0] != 1:
        raise DimMismatch(f"input dimension {x.size} != map dimension {som.dim}")
    d = ((x[:, None, :] - som.prototypes[None, :, :]) ** 2).sum(axis=2)
    idx = np.argmin(d, axis=1)
    return int(idx[0]) if single else idx


def bmu_prototypes(som: SomMap, field: np.ndarray) -> np.ndarray:
    """Replace every pixel of ``field`` (H, W) or (H, W, D) by its BMU prototype."""
    arr = np.asarray(field, dtype=float)
    flat = arr.reshape(-1, som.dim)
    out = som.prototypes[bmu(som, flat)]
    return out.reshape(arr.shape)


def som_train(som: SomMap, data, schedule: TrainingSchedule) -> SomMap:
    x = _as_samples(data, som.dim)
    if x.shape[0] == 0:
        raise EmptyTrainingSet("cannot train on an empty set")
    rng = np.random.default_rng(schedule.seed)
    t = np.arange(schedule.t_max)
    picks = rng.integers(0, x.shape[0], size=schedule.t_max)
    eta = schedule.learning_rate(t)
    inv_two_r2 = 1.0 / (2.0 * schedule.radius(t) ** 2)
    g2 = som.grid_sqdist()
    w = som.prototypes.copy()
    for step in range(schedule.t_max):
        s = x[picks[step]]
        b = int(np.argmin(((w - s) ** 2).sum(axis=1)))
        h = np.exp(-g2[b] * inv_two_r2[step])
        w += (eta[step] * h)[:, None] * (s - w)
    return replace(som, prototypes=w)


def train_som(data, rows: int, cols: int, schedule: TrainingSchedule | None = None,
              intensity_range=(0.0, 255.0)) -> SomMap:
    """Seeded init followed by training; init and sampling use separate streams."""
    x = _as_samples(data)
    if x.shape[0] == 0:
        raise EmptyTrainingSet("cannot train on an empty set")
    schedule = schedule or TrainingSchedule.preset(rows, cols)
    init_seed, train_seed = (int(s.generate_state(1)[0])
                             for s in np.random.SeedSequence(schedule.seed).spawn(2))
    som = som_init(rows, cols, x.shape[1], intensity_range, init_seed)
    return som_train(som, x, replace(schedule, seed=train_seed))


def csom_train(fg, bg, rows: int, cols: int, schedule: TrainingSchedule | None = None,
               intensity_range=(0.0, 255.0)) -> tuple[SomMap, SomMap]:
    """One map per class, each on its own RNG stream derived from ``schedule.seed``."""
    fg, bg = _as_samples(fg), _as_samples(bg)
    if fg.shape[0] == 0 or bg.shape[0] == 0:
        raise EmptyTrainingSet("both training sets must be nonempty")
    schedule = schedule or TrainingSchedule.preset(rows, cols)
    seeds = [int(s.generate_state(1)[0])
             for s in np.random.SeedSequence(schedule.seed).spawn(2)]
    return tuple(train_som(d, rows, cols, replace(schedule, seed=s), intensity_range)
                 for d, s in zip((fg, bg), seeds))


def quantization_error(som: SomMap, inputs) -> np.ndarray:
    x = _as_samples(inputs, som.dim)
    d = ((x[:, None, :] - som.prototypes[None, :, :]) ** 2).sum(axis=2)
    return np.sqrt(d.min(axis=1))


def csom_classify(maps: tuple[SomMap, SomMap], inputs):
    """1 (foreground) where the fg map's BMU is at least as close as the bg map's."""
    fg, bg = maps
    if fg.dim != bg.dim:
        raise DimMismatch("maps disagree on dimension")
    single = np.ndim(inputs) == 0 or (np.ndim(inputs) == 1 and fg.dim > 1)
    x = np.atleast_1d(inputs) if single else inputs
    lab = np.where(quantization_error(fg, x) <= quantization_error(bg, x), FOREGROUND, BACKGROUND)
    return int(lab[0]) if single else lab


# -- persistence -------------------------------------------------------------

_MAGIC = "levelcurve-som 1"


def format_maps(maps: dict[str, SomMap]) -> str:
    """Plain-text form; ``repr`` floats make the round trip lossless."""
    lines = [_MAGIC, f"maps {len(maps)}"]
    for name, som in maps.items():
        lines += [f"map {name}", f"rows {som.rows}", f"cols {som.cols}", f"dim {som.dim}"]
        lines += [" ".join(repr(float(v)) for v in row) for row in som.prototypes]
    return "\n".join(lines) + "\n"


def save_maps(path, maps: dict[str, SomMap]) -> None:
    Path(path).write_text(format_maps(maps))


def load_maps(path) -> dict[str, SomMap]:
    try:
        lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    except OSError as exc:
        raise IoError(f"cannot read map file {path}: {exc}") from exc
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    pos = 0

    def take(key):
        nonlocal pos
        if pos >= len(lines):
            raise CorruptHeader(f"map file ends before '{key}'")
        parts = lines[pos].split(None, 1)
        if parts[0] != key or len(parts) != 2:
            raise CorruptHeader(f"expected '{key} ...' at line {lines[pos]!r}")
        pos += 1
        return parts[1]

    if not lines or lines[0] != _MAGIC:
        raise CorruptHeader("not a levelcurve map file")
    pos = 1
    try:
        count = int(take("maps"))
        out = {}
        for _ in range(count):
            name = take("map")
            rows, cols, dim = int(take("rows")), int(take("cols")), int(take("dim"))
            protos = []
            for _ in range(rows * cols):
                if pos >= len(lines):
                    raise CorruptHeader("map file truncated")
                vals = [float(v) for v in lines[pos].split()]
                pos += 1
                if len(vals) != dim:
                    raise CorruptHeader("prototype length does not match dim")
                protos.append(vals)
            out[name] = SomMap(rows, cols, np.array(protos).reshape(rows * cols, dim))
    except ValueError as exc:
        raise CorruptHeader(f"malformed map file: {exc}") from exc
    return out
