"""Software aging detection under workload shift.

The pipeline: load a memory series (:mod:`ingest`), split off the trend
(:mod:`decomposition`), label Normal/Aging from trend slopes (:mod:`labeling`),
turn samples into feature rows (:mod:`features`), fit a random forest
(:mod:`forest`), and evaluate it on a stream while a change detector
(:mod:`detectors`) decides when to retrain (:mod:`harness`).
"""

from .decomposition import Decomposition, StlConfig, stl_decompose
from .detectors import ADWIN, DDM, Phase
from .errors import AgewatchError
from .features import FEATURE_NAMES, FeatureMatrix, extract_features
from .forest import ForestConfig, ForestModel, kfold_evaluate, train
from .harness import (MODES, HarnessConfig, MatrixConfig, initial_model, run_matrix,
                      run_prequential)
from .ingest import MemorySeries, load_csv, parse_csv, remove_warmup
from .labeling import LabeledSeries, LabelingConfig, label_by_trend, label_series
from .metrics import ConfusionMatrix, Metrics, derive, score
from .report import RunReport
from .scenarios import (ProfileSpec, ShiftSpec, build_scenario, compose_gradual,
                        compose_recurring, compose_sudden, default_scenarios,
                        generate_profile, preset)

__version__ = "0.1.0"

__all__ = [
    "ADWIN", "AgewatchError", "ConfusionMatrix", "DDM", "Decomposition", "FEATURE_NAMES",
    "FeatureMatrix", "ForestConfig", "MODES", "ForestModel", "HarnessConfig",
    "LabeledSeries", "LabelingConfig", "MatrixConfig", "MemorySeries", "Metrics", "Phase",
    "ProfileSpec", "RunReport", "ShiftSpec", "StlConfig", "build_scenario",
    "compose_gradual", "compose_recurring", "compose_sudden", "default_scenarios", "derive",
    "extract_features", "generate_profile", "initial_model", "kfold_evaluate",
    "label_by_trend", "label_series", "load_csv", "parse_csv", "preset", "remove_warmup",
    "run_matrix", "run_prequential", "score", "stl_decompose", "train",
]
