"""Pixel-classification scores with foreground as the positive class."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .exceptions import DimMismatch


class ConfusionCounts(NamedTuple):
    tp: int
    fp: int
    fn: int
    tn: int


class PRF(NamedTuple):
    precision: float
    recall: float
    fmeasure: float
    degenerate: bool = False


def confusion(mask, truth) -> ConfusionCounts:
    mask, truth = np.asarray(mask, dtype=bool), np.asarray(truth, dtype=bool)
    if mask.shape != truth.shape:
        raise DimMismatch(f"mask {mask.shape} vs truth {truth.shape}")
    tp = int((mask & truth).sum())
    fp = int((mask & ~truth).sum())
    fn = int((~mask & truth).sum())
    return ConfusionCounts(tp, fp, fn, mask.size - tp - fp - fn)


def prf_from_counts(c: ConfusionCounts) -> PRF:
    degenerate = False

    def ratio(a, b):
        nonlocal degenerate
        if b == 0:
            degenerate = True
            return 0.0
        return a / b

    p = ratio(c.tp, c.tp + c.fp)
    r = ratio(c.tp, c.tp + c.fn)
    f = ratio(2.0 * p * r, p + r)
    return PRF(p, r, f, degenerate)


def prf(mask, truth) -> PRF:
    """Precision, recall and F1; zero denominators give 0 and set ``degenerate``."""
    return prf_from_counts(confusion(mask, truth))
