"""Otsu and multi-level Otsu thresholds on a 256-bin histogram.

Classes are ``I <= t1``, ``t1 < I <= t2``, ... The objective is the
between-class variance, maximized through cumulative-moment lookup tables.
Ties go to the lexicographically smallest threshold tuple.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .exceptions import ConstantImage, ValidationError

_TIE = 1e-12


class MultiOtsu(NamedTuple):
    thresholds: tuple[int, ...]
    labels: np.ndarray


def histogram(image) -> np.ndarray:
    """Counts of intensities rounded to the nearest integer and clipped to 0..255."""
    levels = np.clip(np.rint(np.asarray(image, dtype=float)), 0, 255).astype(np.int64)
    return np.bincount(levels.ravel(), minlength=256)


def _moments(hist):
    levels = np.flatnonzero(hist)
    counts = hist[levels].astype(float)
    sums = counts * levels
    p = np.concatenate([[0.0], np.cumsum(counts)])
    s = np.concatenate([[0.0], np.cumsum(sums)])
    return levels, p, s


def _class_table(p, s) -> np.ndarray:
    """table[u, v] = S(u..v)^2 / P(u..v) for occupied-level runs u..v (u <= v)."""
    pp = p[None, 1:] - p[:-1, None]
    ss = s[None, 1:] - s[:-1, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(pp > 0, ss * ss / pp, -np.inf)
    return np.where(np.triu(np.ones_like(t, dtype=bool)), t, -np.inf)


def _better(a: float, b: float) -> bool:
    return a > b + _TIE * max(abs(a), abs(b), 1.0)


def multi_otsu(image, t_count: int = 2) -> MultiOtsu:
    if not 1 <= t_count <= 5:
        raise ValidationError(f"t_count must lie in 1..5, got {t_count}")
    hist = histogram(image)
    levels, p, s = _moments(hist)
    n = len(levels)
    if n < 2:
        raise ConstantImage("image has a single intensity level")
    if n <= t_count:
        raise ValidationError(f"{n} distinct levels cannot support {t_count} thresholds")
    table = _class_table(p, s)
    # best[j][u]: best objective splitting levels u..n-1 into j classes
    best = [None, table[:, n - 1].copy()]
    for j in range(2, t_count + 2):
        cur = np.full(n, -np.inf)
        for u in range(n - j + 1):
            cand = table[u, u:n - j + 1] + best[j - 1][u + 1:n - j + 2]
            cur[u] = cand.max()
        best.append(cur)
    cuts, u = [], 0
    for j in range(t_count + 1, 1, -1):
        cand = table[u, u:n - j + 1] + best[j - 1][u + 1:n - j + 2]
        top = cand.max()
        v = u + next(i for i, c in enumerate(cand) if not _better(top, c))
        cuts.append(int(levels[v]))
        u = v + 1
    thresholds = tuple(cuts)
    labels = np.searchsorted(np.asarray(thresholds),
                             np.clip(np.rint(np.asarray(image, dtype=float)), 0, 255), side="left")
    return MultiOtsu(thresholds, labels.astype(np.int64))


def otsu(image) -> int:
    """Single threshold t: foreground candidates are intensities above t."""
    return multi_otsu(image, 1).thresholds[0]


def between_class_objective(hist, thresholds) -> float:
    """Sum over classes of S_k^2 / P_k for the given thresholds (empty classes add 0)."""
    edges = [-1] + [int(t) for t in thresholds] + [255]
    lv = np.arange(256)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (lv > lo) & (lv <= hi)
        pk = float(hist[sel].sum())
        if pk > 0:
            sk = float((hist[sel] * lv[sel]).sum())
            total += sk * sk / pk
    return total


def merge_classes(labels: np.ndarray, selected) -> np.ndarray:
    """Foreground mask made of the chosen label classes."""
    return np.isin(labels, np.asarray(list(selected), dtype=np.int64))
