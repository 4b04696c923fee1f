import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levelcurve.exceptions import TooFewSamples
from levelcurve.models_global import CvParams, cv_energy, cv_speed
from levelcurve.models_local import (LrcvParams, gmm_fit, kde_density, kde_fit, kde_loglik,
                                     loglik_speed, lrcv_energy, lrcv_speed, mean_nn_distance)

HUGE = 1e7  # weights vary by ~1e-12 across a small image: effectively infinite


def brute_local(image, mask, sigma):
    h, w = image.shape
    ys, xs = np.nonzero(mask)
    out = np.empty((h, w))
    for i in range(h):
        for j in range(w):
            wt = np.exp(-((ys - i) ** 2 + (xs - j) ** 2) / (2 * sigma ** 2))
            out[i, j] = (wt * image[ys, xs]).sum() / wt.sum()
    return out


def toy():
    rng = np.random.default_rng(0)
    x = np.arange(5)[None, :].repeat(5, axis=0)
    image = 40.0 + 30.0 * x + rng.uniform(-5, 5, (5, 5))
    image[1:4, 1:4] += 80.0
    mask = np.zeros((5, 5), bool)
    mask[1:4, 1:4] = True
    return image, mask


class TestLrcv:
    def test_constant_image(self):
        img = np.full((8, 8), 90.0)
        phi = np.where(np.eye(8, dtype=bool), 1.0, -1.0)
        np.testing.assert_allclose(lrcv_speed(img, phi), 0.0, atol=1e-9)
        assert lrcv_energy(img, phi >= 0) == pytest.approx(0.0, abs=1e-9)

    def test_large_sigma_is_cv(self):
        rng = np.random.default_rng(1)
        img = rng.uniform(0, 255, (12, 15))
        mask = rng.random((12, 15)) < 0.4
        phi = np.where(mask, 1.0, -1.0)
        np.testing.assert_allclose(lrcv_speed(img, phi, LrcvParams(HUGE)), cv_speed(img, phi),
                                   atol=1e-6, rtol=0)
        assert lrcv_energy(img, mask, LrcvParams(HUGE)) == pytest.approx(
            cv_energy(img, mask, CvParams()), abs=1e-6)

    def test_toy_speed_oracle(self):
        img, mask = toy()
        c_in, c_out = brute_local(img, mask, 2.0), brute_local(img, ~mask, 2.0)
        oracle = -1.3 * (img - c_in) ** 2 + 0.6 * (img - c_out) ** 2
        got = lrcv_speed(img, np.where(mask, 1.0, -1.0), LrcvParams(2.0, 1.3, 0.6))
        np.testing.assert_allclose(got, oracle, atol=1e-8)

    def test_toy_energy_oracle(self):
        img, mask = toy()
        c_in, c_out = brute_local(img, mask, 2.0), brute_local(img, ~mask, 2.0)
        total = 0.0
        for i in range(5):
            for j in range(5):
                if mask[i, j]:
                    total += 1.3 * (img[i, j] - c_in[i, j]) ** 2
                else:
                    total += 0.6 * (img[i, j] - c_out[i, j]) ** 2
        assert lrcv_energy(img, mask, LrcvParams(2.0, 1.3, 0.6)) == pytest.approx(total, rel=1e-10)


class TestKde:
    def test_bandwidth(self):
        assert mean_nn_distance([0.0, 10.0, 20.0]) == 10.0
        m = kde_fit([0.0, 10.0, 20.0], [5.0, 5.0, 5.0])
        assert m.sigma_fg == 10.0 and m.sigma_bg == 0.5
        with pytest.raises(TooFewSamples):
            kde_fit([1.0], [1.0, 2.0])

    def test_bandwidth_brute_force(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(0, 255, 40)
        nn = [min(abs(a - b) for j, b in enumerate(x) if j != i) for i, a in enumerate(x)]
        assert mean_nn_distance(x) == pytest.approx(np.mean(nn), rel=1e-12)

    def test_hand_sum(self):
        m = kde_fit([0.0, 10.0, 20.0], [0.0, 1.0])
        k = lambda u: math.exp(-u * u / 2) / math.sqrt(2 * math.pi)
        assert kde_density(m, "fg", 0.0) == pytest.approx((k(0) + k(1) + k(2)) / 3, rel=1e-12)

    def test_symmetric_and_unimodal(self):
        m = kde_fit([70.0, 130.0], [100.0, 101.0])
        scan = np.linspace(0, 255, 1021)
        d = kde_density(m, "fg", scan)
        np.testing.assert_allclose(kde_density(m, "fg", 100 - scan), kde_density(m, "fg", 100 + scan),
                                   rtol=1e-12)
        tight = kde_fit(np.full(5, 80.0) + np.arange(5) * 1e-3, [0.0, 1.0])
        scan = np.arange(256.0)
        assert scan[np.argmax(kde_density(tight, "fg", scan))] == 80.0
        assert np.all(d >= 0)

    def test_integral_is_bandwidth(self):
        # the literal kernel is not divided by sigma, so each bump integrates to sigma
        m = kde_fit([60.0, 100.0, 140.0], [0.0, 1.0])
        z = np.linspace(-10 * m.sigma_fg, 265 + 10 * m.sigma_fg, 200001)
        assert np.trapezoid(kde_density(m, "fg", z), z) == pytest.approx(m.sigma_fg, rel=1e-6)

    def test_vector_samples(self):
        rng = np.random.default_rng(3)
        fg = rng.uniform(0, 255, (20, 3))
        m = kde_fit(fg, rng.uniform(0, 255, (20, 3)))
        img = rng.uniform(0, 255, (4, 5, 3))
        d = kde_density(m, "fg", img)
        k = np.exp(-((img[..., None, :] - fg) ** 2).sum(-1) / (2 * m.sigma_fg ** 2))
        np.testing.assert_allclose(d, k.mean(-1) / math.sqrt(2 * math.pi), rtol=1e-10)


class TestGmm:
    def test_separable_clusters(self):
        rng = np.random.default_rng(4)
        x = np.concatenate([rng.normal(50, 3, 100), rng.normal(200, 3, 100)])
        g = gmm_fit(x, 2, seed=0)
        np.testing.assert_allclose(np.sort(g.means.ravel()), [50, 200], atol=5)
        assert g.weights.sum() == pytest.approx(1.0, abs=1e-9)

    def test_k1_closed_form(self):
        x = np.random.default_rng(5).uniform(0, 255, 50)
        g = gmm_fit(x, 1)
        assert g.means[0, 0] == pytest.approx(x.mean(), rel=1e-12)
        assert g.variances[0, 0] == pytest.approx(x.var(), rel=1e-9)

    def test_identical_samples(self):
        g = gmm_fit(np.full(10, 42.0), 2)
        np.testing.assert_allclose(g.means, 42.0)
        np.testing.assert_allclose(g.variances, 1e-2)

    def test_too_few(self):
        with pytest.raises(TooFewSamples):
            gmm_fit([1.0], 2)

    @given(st.integers(0, 10_000), st.integers(1, 3))
    @settings(max_examples=30, deadline=None)
    def test_em_monotone(self, seed, k):
        rng = np.random.default_rng(seed)
        x = np.concatenate([rng.normal(rng.uniform(0, 255), rng.uniform(1, 30), 30)
                            for _ in range(3)])
        g = gmm_fit(x, k, seed=seed, restarts=1)
        t = np.array(g.trace)
        assert np.all(np.diff(t) >= -1e-9 * np.abs(t[:-1]).clip(1))

    def test_deterministic(self):
        x = np.random.default_rng(6).uniform(0, 255, 60)
        a, b = gmm_fit(x, 2, seed=3), gmm_fit(x, 2, seed=3)
        np.testing.assert_array_equal(a.means, b.means)


class TestLogLikelihood:
    def test_equal_densities(self):
        p = lambda v: np.exp(-np.asarray(v) / 50.0)
        img = np.random.default_rng(7).uniform(0, 255, (5, 5))
        assert np.all(loglik_speed(img, np.ones((5, 5)), p, p) == 0)

    def test_oracle_and_antisymmetry(self):
        p_in = lambda v: np.exp(-((np.asarray(v) - 200) ** 2) / 200.0)
        p_out = lambda v: np.exp(-((np.asarray(v) - 50) ** 2) / 800.0)
        img = np.array([[200.0, 50.0, 120.0, 0.0]])
        s = loglik_speed(img, np.ones_like(img), p_in, p_out)
        oracle = [math.log(max(p_in(v), 1e-12)) - math.log(max(p_out(v), 1e-12))
                  for v in img.ravel()]
        np.testing.assert_allclose(s.ravel(), oracle, rtol=1e-12)
        assert s[0, 0] > 0 and s[0, 1] < 0
        np.testing.assert_allclose(loglik_speed(img, np.ones_like(img), p_out, p_in), -s)

    def test_kde_speed_sign_on_training_modes(self):
        m = kde_fit(np.linspace(190, 210, 15), np.linspace(40, 60, 15))
        s = kde_loglik(m).speed(np.array([[200.0, 50.0]]), np.ones((1, 2)))
        assert s[0, 0] > 0 > s[0, 1]
