from .linear import LogisticRegressionProbe, MlpProbe, TrainSettings
from .probes import (
    DEFAULT_GRIDS,
    FitReport,
    ProbeSpec,
    default_grid,
    fit,
    predict,
    score,
    tune_and_eval,
)

__all__ = [
    "LogisticRegressionProbe",
    "MlpProbe",
    "TrainSettings",
    "DEFAULT_GRIDS",
    "FitReport",
    "ProbeSpec",
    "default_grid",
    "fit",
    "predict",
    "score",
    "tune_and_eval",
]
