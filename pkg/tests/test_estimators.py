import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from levelcurve.estimators import ConcurrentSOM, LevelSetSegmenter, SelfOrganizingMap
from levelcurve.evolve import EvolveParams, evolve
from levelcurve.exceptions import DimMismatch, ValidationError
from levelcurve.grid import Rect, init_levelset_rect
from levelcurve.models_global import GSRPF
from levelcurve.synth import gen_synthetic, preset


@pytest.fixture(scope="module")
def two_tone():
    return gen_synthetic(preset("two_tone"))


def test_segmenter_matches_direct_evolve(two_tone):
    img, truth = two_tone
    est = LevelSetSegmenter("gsrpf", init=(26, 20, 10, 10))
    mask = est.fit_predict(img)
    direct = evolve(img, init_levelset_rect(img.shape, Rect(26, 20, 10, 10)), GSRPF(),
                    EvolveParams())
    np.testing.assert_array_equal(mask, direct.mask)
    assert est.n_iter_ == direct.iterations
    assert est.score(img, truth) == 1.0
    np.testing.assert_array_equal(est.transform(img) >= 0, mask)


def test_segmenter_params_and_clone(two_tone):
    img, truth = two_tone
    est = LevelSetSegmenter("sbgfrls", init="26,20,10,10", params={"alpha": 20})
    assert clone(est).get_params() == est.get_params()
    assert est.fit(img).score(img, truth) == 1.0


def test_supervised_segmenter(two_tone):
    img, truth = two_tone
    est = LevelSetSegmenter("csomcv", init=(26, 20, 10, 10))
    with pytest.raises(ValidationError):
        est.fit(img)
    assert est.fit(img, fg_mask=truth, bg_mask=~truth).score(img, truth) == 1.0


def test_segmenter_errors(two_tone):
    img, _ = two_tone
    with pytest.raises(NotFittedError):
        LevelSetSegmenter(init=(1, 1, 2, 2)).predict(img)
    est = LevelSetSegmenter().fit(img)
    with pytest.raises(ValidationError):
        est.predict(img)
    with pytest.raises(DimMismatch):
        LevelSetSegmenter(init=(1, 1, 2, 2)).fit(img).predict(np.zeros((61, 64, 3)))
    with pytest.raises(ValidationError):
        LevelSetSegmenter(init=(1, 1, 2, 2)).fit(np.full((4, 4), np.nan))


def test_som_estimator():
    rng = np.random.default_rng(0)
    x = np.concatenate([rng.normal(40, 2, 200), rng.normal(210, 2, 200)])
    som = SelfOrganizingMap(rows=2, cols=1, r0=0.5, seed=1).fit(x)
    protos = np.sort(som.prototypes_.ravel())
    np.testing.assert_allclose(protos, [40, 210], atol=3)
    idx = som.predict([40.0, 210.0])
    assert idx[0] != idx[1]
    np.testing.assert_allclose(som.transform([40.0]).ravel(), protos[0], atol=1e-12)
    assert som.quantization_error([40.0])[0] == pytest.approx(abs(40 - protos[0]))


def test_concurrent_som():
    rng = np.random.default_rng(1)
    x = np.concatenate([rng.normal(60, 5, 100), rng.normal(190, 5, 100)])
    y = np.r_[np.zeros(100), np.ones(100)]
    clf = ConcurrentSOM(rows=3, cols=1, seed=0).fit(x, y)
    np.testing.assert_array_equal(clf.predict([55.0, 65.0, 185.0, 200.0]), [0, 0, 1, 1])
    assert clf.score(x, y) == 1.0
    with pytest.raises(ValidationError):
        ConcurrentSOM().fit(x, y + 1)
    with pytest.raises(DimMismatch):
        ConcurrentSOM().fit(x, y[:5])
