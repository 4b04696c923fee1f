"""Acceptance criteria 1-9.

Each criterion prints one ``criterion N: PASS|FAIL ...`` line; the lines are
also repeated in the pytest terminal summary. Run directly with
``python tests/test_acceptance.py`` to get just the nine lines.
"""
import itertools
import time

import numpy as np
import pytest

from levelcurve.evolve import CLASSIC, EvolveParams, evolve
from levelcurve.grid import Rect, binarize_levelset, gaussian_kernel, init_levelset_rect
from levelcurve.harness import FIG4_1_INIT
from levelcurve.metrics import ConfusionCounts, prf, prf_from_counts
from levelcurve.models_global import GSRPF, SBGFRLS, ChanVese, cv_speed
from levelcurve.models_local import LRCV, LrcvParams, gmm_fit, lrcv_speed
from levelcurve.models_som import SOAC, SOMCV, SOMRAC, csomcv_speed, soac_speed
from levelcurve.otsu import multi_otsu, otsu
from levelcurve.som import SomMap, TrainingSchedule, csom_train, train_som
from levelcurve.synth import add_gaussian_noise, gen_synthetic, preset

RESULTS: dict[int, str] = {}
SEEDS = range(5)  # fixed before any criterion was evaluated
HUGE = 1e7


def report(n, ok, detail, started):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}  ({time.perf_counter() - started:.1f}s)"
    RESULTS[n] = line
    print(line)
    return ok


# -- 1 ---------------------------------------------------------------------------

def criterion_1():
    t0 = time.perf_counter()
    img, truth = gen_synthetic(preset("fig4_1"))
    noisy = add_gaussian_noise(img, 20, seed=0)
    res = evolve(noisy, init_levelset_rect(img.shape, FIG4_1_INIT), GSRPF(),
                 EvolveParams(sigma_prime=1.4))
    s = prf(res.mask, truth)
    ok = s.precision >= 0.95 and s.recall >= 0.90
    return report(1, ok, f"GSRPF fig4_1 SD20: P={s.precision:.3f} R={s.recall:.3f}", t0)


# -- 2 ---------------------------------------------------------------------------

def criterion_2():
    t0 = time.perf_counter()
    img, truth = gen_synthetic(preset("fig4_1"))
    phi0 = init_levelset_rect(img.shape, FIG4_1_INIT)
    gaps = []
    for seed in SEEDS:
        noisy = add_gaussian_noise(img, 30, seed=seed)
        g = prf(evolve(noisy, phi0, GSRPF(), EvolveParams(sigma_prime=1.4)).mask, truth).fmeasure
        best = max(prf(evolve(noisy, phi0, SBGFRLS(a), EvolveParams(sigma_prime=s)).mask,
                       truth).fmeasure
                   for s, a in itertools.product((1.4, 1.6, 1.8, 2.0), (10.0, 50.0)))
        gaps.append(g - best)
    med = float(np.median(gaps))
    return report(2, med >= 0.10, f"median F gap GSRPF - best SBGFRLS over seeds 0-4 = "
                  f"{med:+.3f} (per seed {' '.join(f'{x:+.3f}' for x in gaps)})", t0)


# -- 3 ---------------------------------------------------------------------------

def criterion_3():
    t0 = time.perf_counter()
    img, truth = gen_synthetic(preset("two_tone"))
    phi0 = init_levelset_rect(img.shape, Rect(26, 20, 10, 10))
    g = GSRPF()
    masks = [evolve(img, phi0, g, EvolveParams(sigma_prime=1.5)).mask,
             evolve(img, phi0, SBGFRLS(20.0), EvolveParams(sigma_prime=1.5)).mask,
             evolve(img, phi0, ChanVese(), EvolveParams(scheme=CLASSIC)).mask]
    identical = all(np.array_equal(m, masks[0]) for m in masks[1:])
    medians = bool(g.states) and all(s.m_plus == s.c_plus for s in g.states)
    return report(3, identical and medians,
                  f"masks identical={identical} (equal truth={np.array_equal(masks[0], truth)}), "
                  f"m+ == c+ at all {len(g.states)} iterations={medians}", t0)


# -- 4 ---------------------------------------------------------------------------

def criterion_4():
    t0 = time.perf_counter()
    img, truth = gen_synthetic(preset("two_tone"))
    phi0 = init_levelset_rect(img.shape, Rect(26, 20, 10, 10))
    som = train_som(img.reshape(-1, 1), 5, 1, TrainingSchedule.preset(5, 1, seed=0))
    runs = {"C-V": evolve(img, phi0, ChanVese(), EvolveParams(scheme=CLASSIC)),
            "SOMCV": evolve(img, phi0, SOMCV(som), EvolveParams()),
            "SOMCV_s": evolve(img, phi0, SOMCV(som, simplified=True), EvolveParams())}
    scores = {k: prf(r.mask, truth) for k, r in runs.items()}
    acc = all(s.precision >= 0.99 and s.recall >= 0.99 for s in scores.values())
    fewer = runs["SOMCV"].iterations < runs["C-V"].iterations
    detail = " ".join(f"{k}: P={s.precision:.3f} R={s.recall:.3f} it={runs[k].iterations}"
                      for k, s in scores.items())
    return report(4, acc and fewer, detail, t0)


# -- 5 ---------------------------------------------------------------------------

def criterion_5():
    t0 = time.perf_counter()
    img, truth = gen_synthetic(preset("fig7_3b"))
    phi0 = init_levelset_rect(img.shape, Rect(10, 8, 70, 106))
    worst, diffs = 1.0, []
    for sd in (10, 20, 30):
        for seed in SEEDS:
            noisy = add_gaussian_noise(img, sd, seed=seed)
            som = train_som(noisy.reshape(-1, 1), 5, 1, TrainingSchedule.preset(5, 1, seed=seed))
            f, fs = (prf(evolve(noisy, phi0, SOMCV(som, simplified=s), EvolveParams(sigma_prime=1.5)
                            ).mask, truth).fmeasure for s in (False, True))
            worst = min(worst, f)
            if sd == 30:
                diffs.append(f - fs)
    med = float(np.median(diffs))
    return report(5, worst >= 0.90 and med >= 0.0,
                  f"min SOMCV F over SD 10/20/30 x seeds 0-4 = {worst:.3f}; "
                  f"median SOMCV - SOMCV_s at SD30 = {med:+.4f}", t0)


# -- 6 ---------------------------------------------------------------------------

def criterion_6():
    t0 = time.perf_counter()
    img, truth = gen_synthetic(preset("fig6_1"))
    phi0 = init_levelset_rect(img.shape, Rect(10, 8, 70, 106))
    f_cv = prf(evolve(img, phi0, ChanVese(), EvolveParams(scheme=CLASSIC)).mask, truth).fmeasure
    worst = 1.0
    for seed in SEEDS:
        noisy = add_gaussian_noise(img, 5, seed=seed)
        rng = np.random.default_rng(seed)
        fi = rng.choice(np.flatnonzero(truth), 134, replace=False)
        bi = rng.choice(np.flatnonzero(~truth), 165, replace=False)
        flat = noisy.reshape(-1, 1)
        fg, bg = csom_train(flat[fi], flat[bi], 3, 1, TrainingSchedule.soac(3, 1, seed=seed))
        res = evolve(noisy, phi0, SOAC(fg, bg, sigma=0.1), EvolveParams())
        worst = min(worst, prf(res.mask, truth).fmeasure)
    return report(6, worst >= 0.88 and f_cv < 0.80,
                  f"min SOAC F (SD5, seeds 0-4) = {worst:.4f}; C-V clean F = {f_cv:.4f}", t0)


# -- 7 ---------------------------------------------------------------------------

RAMP_RECTS = (Rect(10, 10, 107, 76), Rect(64, 5, 58, 86), Rect(30, 30, 70, 36))


def criterion_7():
    t0 = time.perf_counter()
    img, truth = gen_synthetic(preset("ramp"))
    som = train_som(img.reshape(-1, 1), 4, 4, TrainingSchedule.preset(4, 4, seed=0))
    rac, lrcv = [], []
    for rect in RAMP_RECTS:
        phi0 = init_levelset_rect(img.shape, rect)
        rac.append(evolve(img, phi0, SOMRAC(som, 0.1, 30.0), EvolveParams()).mask)
        lrcv.append(evolve(img, phi0, LRCV(LrcvParams(sigma=30.0)), EvolveParams()).mask)
    f_rac = [prf(m, truth).fmeasure for m in rac]
    f_lrcv = [prf(m, truth).fmeasure for m in lrcv]
    same = all(np.array_equal(m, rac[0]) for m in rac[1:])
    ok_rac = same and min(f_rac) >= 0.95
    ok_lrcv = min(f_lrcv) < 0.90
    return report(7, ok_rac and ok_lrcv,
                  f"SOM-RAC identical={same} F={' '.join(f'{f:.3f}' for f in f_rac)}; "
                  f"LRCV F={' '.join(f'{f:.3f}' for f in f_lrcv)} (needs one < 0.90)", t0)


# -- 8 ---------------------------------------------------------------------------

def criterion_8():
    t0 = time.perf_counter()
    img, truth = gen_synthetic(preset("two_object"))
    phi0 = init_levelset_rect(img.shape, Rect(10, 10, 80, 80))
    som = train_som(img.reshape(-1, 1), 4, 4, TrainingSchedule.preset(4, 4, seed=0))
    fs = {s: prf(evolve(img, phi0, SOMRAC(som, 0.1, float(s)), EvolveParams()).mask,
                 truth).fmeasure for s in range(20, 55, 5)}
    return report(8, min(fs.values()) >= 0.95,
                  "SOM-RAC F by sigma " + " ".join(f"{s}:{f:.3f}" for s, f in fs.items()), t0)


# -- 9 ---------------------------------------------------------------------------

def _variance_between(hist, ts):
    g = np.arange(256.0)
    n, mu_t = hist.sum(), (hist * g).sum() / hist.sum()
    total = 0.0
    for lo, hi in zip((-1, *ts), (*ts, 255)):
        h = hist[lo + 1:hi + 1]
        if h.sum() == 0:
            return None
        total += h.sum() / n * ((h * g[lo + 1:hi + 1]).sum() / h.sum() - mu_t) ** 2
    return total


def _brute_otsu(image, k):
    hist = np.bincount(np.clip(np.rint(image), 0, 255).astype(int).ravel(), minlength=256)
    cand = range(255) if k == 1 else [int(v) for v in np.flatnonzero(hist) if v < 255]
    best, arg = -1.0, None
    for ts in itertools.combinations(cand, k):
        v = _variance_between(hist.astype(float), ts)
        if v is not None and v > best * (1 + 1e-12) + 1e-12:
            best, arg = v, ts
    return arg


def _prop_cv_descent():
    for name, rect in (("two_tone", Rect(26, 20, 10, 10)), ("fig4_1", Rect(10, 10, 100, 60))):
        img, _ = gen_synthetic(preset(name))
        phi0 = init_levelset_rect(img.shape, rect)
        res = evolve(img, phi0, ChanVese(), EvolveParams(sigma_prime=None), track_energy=True)
        e = [ChanVese().energy(img, phi0 >= 0)] + res.energy_trace
        if any(b > a + 1e-6 * max(e[0], 1.0) for a, b in zip(e, e[1:])):
            return False
    return True


def _prop_otsu():
    rng = np.random.default_rng(0)
    for i in range(50):
        tones = rng.choice(256, size=rng.integers(4, 12), replace=False)
        img = (rng.integers(0, 256, (10, 10)) if i % 2 else rng.choice(tones, (10, 10))).astype(float)
        if (otsu(img),) != _brute_otsu(img, 1) or multi_otsu(img, 2).thresholds != _brute_otsu(img, 2):
            return False
    return True


def _prop_som():
    data = np.random.default_rng(1).uniform(0, 255, 300)
    a = train_som(data, 5, 1, TrainingSchedule.preset(5, 1, seed=7))
    b = train_som(data, 5, 1, TrainingSchedule.preset(5, 1, seed=7))
    det = np.array_equal(a.prototypes, b.prototypes)
    two = train_som(np.array([50.0, 200.0]), 2, 1, TrainingSchedule.preset(2, 1, r0=0.5, seed=0))
    return det and bool(np.all(np.abs(np.sort(two.prototypes.ravel()) - [50, 200]) <= 2))


def _prop_kernel():
    return all(abs(gaussian_kernel(s).taps2d.sum() - 1.0) <= 1e-9 for s in (0.3, 1.0, 1.5, 3.0, 10.0))


def _prop_binarize():
    phi = np.random.default_rng(2).normal(size=(30, 30))
    b = binarize_levelset(phi)
    return np.array_equal(b >= 0, phi >= 0) and set(np.unique(b)) <= {-1.0, 1.0}


def _prop_limits():
    rng = np.random.default_rng(3)
    img = rng.uniform(0, 255, (12, 14))
    phi = np.where(rng.random((12, 14)) < 0.4, 1.0, -1.0)
    maps = (SomMap(3, 1, [30.0, 120.0, 210.0]), SomMap(3, 1, [50.0, 140.0, 230.0]))
    d1 = np.abs(lrcv_speed(img, phi, LrcvParams(HUGE)) - cv_speed(img, phi)).max()
    d2 = np.abs(soac_speed(img, phi, maps, HUGE) - csomcv_speed(img, phi, maps)).max()
    return d1 <= 1e-6 and d2 <= 1e-6


def _prop_em():
    rng = np.random.default_rng(4)
    x = np.concatenate([rng.normal(60, 8, 80), rng.normal(170, 15, 80), rng.normal(230, 4, 40)])
    for k in (1, 2, 3):
        t = np.array(gmm_fit(x, k, seed=k, restarts=1).trace)
        if np.any(np.diff(t) < -1e-9 * np.abs(t[:-1]).clip(1)):
            return False
    return True


def _prop_prf():
    s = prf_from_counts(ConfusionCounts(9, 1, 1, 89))
    eye = np.eye(4, dtype=bool)
    empty = prf(np.zeros((4, 4), bool), eye)
    return (prf(eye, eye)[:3] == (1.0, 1.0, 1.0) and s.precision == 0.9 and s.recall == 0.9
            and abs(s.fmeasure - 0.9) < 1e-15 and empty.degenerate and empty.fmeasure == 0.0)


PROPERTIES = {"cv-energy-descent": _prop_cv_descent, "otsu-brute-force": _prop_otsu,
              "som-determinism+two-clusters": _prop_som, "kernel-sum": _prop_kernel,
              "binarize": _prop_binarize, "large-sigma-limits": _prop_limits,
              "em-monotone": _prop_em, "prf-cases": _prop_prf}


def criterion_9():
    t0 = time.perf_counter()
    outcome = {name: bool(fn()) for name, fn in PROPERTIES.items()}
    failed = [k for k, v in outcome.items() if not v]
    return report(9, not failed, f"{len(outcome) - len(failed)}/{len(outcome)} properties hold"
                  + (f"; failing: {', '.join(failed)}" if failed else ""), t0)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 10)])
def test_criterion(criterion):
    t0 = time.perf_counter()
    ok = criterion()
    assert time.perf_counter() - t0 < 60.0, "criterion exceeded the 60 s budget"
    assert ok, RESULTS[CRITERIA.index(criterion) + 1]


if __name__ == "__main__":
    for c in CRITERIA:
        c()
