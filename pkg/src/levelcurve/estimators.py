"""scikit-learn style wrappers and input validation helpers.

Images are treated as single samples: ``fit``/``predict`` take one (H, W)
or (H, W, D) array rather than a sample matrix, which is the only part of
the estimator protocol these wrappers bend.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import registry
from .evolve import evolve
from .exceptions import DimMismatch, ValidationError
from .grid import Rect, init_levelset_rect
from .metrics import prf
from .som import TrainingSchedule, bmu, csom_classify, csom_train, quantization_error, train_som


def check_image(image) -> np.ndarray:
    """Finite float image of shape (H, W) or (H, W, D)."""
    arr = np.asarray(image)
    if arr.ndim not in (2, 3):
        raise ValidationError(f"image must be 2-D or 3-D, got shape {arr.shape}")
    try:
        arr = check_array(arr, dtype=float, allow_nd=True, ensure_min_samples=1)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    return arr


def check_mask(mask, shape) -> np.ndarray:
    m = np.asarray(mask)
    if m.shape != tuple(shape[:2]):
        raise DimMismatch(f"mask shape {m.shape} does not match image {tuple(shape[:2])}")
    return m.astype(bool)


def check_rect(rect, shape) -> Rect:
    r = Rect.parse(rect) if isinstance(rect, str) else Rect(*rect)
    r.check(shape)
    return r


def check_samples(x, dim: int | None = None) -> np.ndarray:
    """Training samples as an (n, D) float matrix; 1-D input means D = 1."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim <= 1:
        arr = arr.reshape(-1, 1)
    try:
        arr = check_array(arr, dtype=float)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    if dim is not None and arr.shape[1] != dim:
        raise DimMismatch(f"samples have dimension {arr.shape[1]}, expected {dim}")
    return arr


def _pixels(image: np.ndarray, mask: np.ndarray) -> np.ndarray:
    flat = image.reshape(-1, image.shape[2]) if image.ndim == 3 else image.reshape(-1, 1)
    return flat[mask.ravel()]


class LevelSetSegmenter(BaseEstimator):
    """Any registered speed model behind fit/predict.

    ``fit`` learns what the model needs from an image: a SOM for the
    unsupervised SOM models, SOMs or densities from ``fg_mask``/``bg_mask``
    for supervised ones, nothing for the rest. ``predict`` evolves ``init``
    on a (possibly different) image and returns the final mask; ``transform``
    returns the final level set function instead.
    """

    def __init__(self, model: str = "gsrpf", init=None, params: dict | None = None, seed: int = 0):
        self.model = model
        self.init = init
        self.params = params
        self.seed = seed

    def fit(self, X, y=None, *, fg_mask=None, bg_mask=None):
        image = check_image(X)
        channels = image.shape[2] if image.ndim == 3 else 1
        p, ev = registry.resolve(self.model, self.params, channels=channels)
        fg = bg = None
        if fg_mask is not None or bg_mask is not None:
            if fg_mask is None or bg_mask is None:
                raise ValidationError("fg_mask and bg_mask must be given together")
            fg = _pixels(image, check_mask(fg_mask, image.shape))
            bg = _pixels(image, check_mask(bg_mask, image.shape))
        self.maps_ = registry.train_maps(self.model, p, image, seed=self.seed,
                                         fg_samples=fg, bg_samples=bg)
        self.fg_samples_, self.bg_samples_ = fg, bg
        self.resolved_params_, self.evolve_params_ = p, ev
        self.n_channels_ = channels
        # build once so a missing training set fails at fit time
        registry.build(self.model, p, maps=self.maps_, seed=self.seed, fg_samples=fg, bg_samples=bg)
        return self

    def _run(self, X):
        check_is_fitted(self, "resolved_params_")
        image = check_image(X)
        if (image.shape[2] if image.ndim == 3 else 1) != self.n_channels_:
            raise DimMismatch("image channel count differs from the one seen in fit")
        if self.init is None:
            raise ValidationError("init rectangle is required")
        rect = check_rect(self.init, image.shape)
        model = registry.build(self.model, self.resolved_params_, maps=self.maps_, seed=self.seed,
                               fg_samples=self.fg_samples_, bg_samples=self.bg_samples_)
        phi0 = init_levelset_rect(image.shape[:2], rect, self.evolve_params_.rho)
        self.result_ = evolve(image, phi0, model, self.evolve_params_)
        self.n_iter_ = self.result_.iterations
        return self.result_

    def predict(self, X) -> np.ndarray:
        return self._run(X).mask

    def transform(self, X) -> np.ndarray:
        return self._run(X).phi

    def fit_predict(self, X, y=None, **fit_params) -> np.ndarray:
        return self.fit(X, **fit_params).predict(X)

    def score(self, X, y) -> float:
        """F-measure of the predicted mask against truth ``y``."""
        return prf(self.predict(X), check_mask(y, np.shape(X))).fmeasure


class SelfOrganizingMap(BaseEstimator):
    """Single Kohonen map; ``predict`` gives BMU indices."""

    def __init__(self, rows: int = 5, cols: int = 1, eta0: float = 0.9, r0: float | None = None,
                 t_max: int = 10000, seed: int = 0, intensity_range=(0.0, 255.0)):
        self.rows = rows
        self.cols = cols
        self.eta0 = eta0
        self.r0 = r0
        self.t_max = t_max
        self.seed = seed
        self.intensity_range = intensity_range

    def _schedule(self) -> TrainingSchedule:
        return TrainingSchedule.preset(self.rows, self.cols, eta0=self.eta0, r0=self.r0,
                                       t_max=self.t_max, seed=self.seed)

    def fit(self, X, y=None):
        x = check_samples(X)
        self.som_ = train_som(x, self.rows, self.cols, self._schedule(), self.intensity_range)
        self.prototypes_ = self.som_.prototypes
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "som_")
        return np.atleast_1d(bmu(self.som_, check_samples(X, self.som_.dim)))

    def transform(self, X) -> np.ndarray:
        """BMU prototype for each sample."""
        return self.prototypes_[self.predict(X)]

    def quantization_error(self, X) -> np.ndarray:
        check_is_fitted(self, "som_")
        return quantization_error(self.som_, check_samples(X, self.som_.dim))


class ConcurrentSOM(ClassifierMixin, BaseEstimator):
    """One map per class; a sample goes to the map with the smaller
    quantization error (ties to the foreground). Labels: 1 fg, 0 bg."""

    def __init__(self, rows: int = 3, cols: int = 3, eta0: float = 0.9, r0: float | None = None,
                 t_max: int = 10000, seed: int = 0, intensity_range=(0.0, 255.0)):
        self.rows = rows
        self.cols = cols
        self.eta0 = eta0
        self.r0 = r0
        self.t_max = t_max
        self.seed = seed
        self.intensity_range = intensity_range

    def fit(self, X, y):
        x = check_samples(X)
        y = np.asarray(y).ravel()
        if y.shape[0] != x.shape[0]:
            raise DimMismatch(f"{x.shape[0]} samples but {y.shape[0]} labels")
        labels = set(np.unique(y).tolist())
        if not labels <= {0, 1}:
            raise ValidationError(f"labels must be 0 (background) or 1 (foreground), got {labels}")
        schedule = TrainingSchedule.preset(self.rows, self.cols, eta0=self.eta0, r0=self.r0,
                                           t_max=self.t_max, seed=self.seed)
        self.fg_map_, self.bg_map_ = csom_train(x[y == 1], x[y == 0], self.rows, self.cols,
                                                schedule, self.intensity_range)
        self.classes_ = np.array([0, 1])
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "fg_map_")
        x = check_samples(X, self.fg_map_.dim)
        return np.atleast_1d(csom_classify((self.fg_map_, self.bg_map_), x))
