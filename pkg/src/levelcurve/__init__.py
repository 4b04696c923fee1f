"""Level-set active contours with global, local, supervised and SOM-driven speed models."""
from .evolve import EvolveParams, SegmentationResult, SpeedModel, ZeroSpeed, evolve
from .exceptions import IoError, LevelCurveError, ValidationError
from .grid import Rect, binarize_levelset, gaussian_kernel, init_levelset_rect
from .harness import experiment_preset, run_experiment
from .config import ExperimentConfig, load_config, parse_config
from .io import read_image, read_mask, write_image, write_mask
from .metrics import prf
from .models_global import GSRPF, SBGFRLS, ChanVese, CvParams
from .models_local import LRCV, LrcvParams, gmm_fit, kde_fit
from .models_som import CSOMCV, SOAC, SOMCV, SOMRAC
from .otsu import multi_otsu, otsu
from .som import SomMap, TrainingSchedule, csom_train, load_maps, save_maps, train_som
from .synth import SynthSpec, gen_synthetic, preset
from .estimators import ConcurrentSOM, LevelSetSegmenter, SelfOrganizingMap

__version__ = "0.1.0"

__all__ = [
    "CSOMCV", "ChanVese", "ConcurrentSOM", "CvParams", "EvolveParams", "ExperimentConfig",
    "GSRPF", "IoError", "LRCV", "LevelCurveError", "LevelSetSegmenter", "LrcvParams", "Rect",
    "SBGFRLS", "SOAC", "SOMCV", "SOMRAC", "SegmentationResult", "SelfOrganizingMap", "SomMap",
    "SpeedModel", "SynthSpec", "TrainingSchedule", "ValidationError", "ZeroSpeed",
    "binarize_levelset", "csom_train", "evolve", "experiment_preset", "gaussian_kernel",
    "gen_synthetic", "gmm_fit", "init_levelset_rect", "kde_fit", "load_config", "load_maps",
    "multi_otsu", "otsu", "parse_config", "preset", "prf", "read_image", "read_mask",
    "run_experiment", "save_maps", "train_som", "write_image", "write_mask",
]
