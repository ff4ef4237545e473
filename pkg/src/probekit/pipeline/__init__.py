from .config import (
    ClassifierSettings,
    DownstreamConfig,
    EncoderConfig,
    ExperimentConfig,
    TaskConfig,
    load_config,
    parse_config,
)
from .matrix import MatrixResult, run_matrix
from .reports import emit_reports
from .results import ResultRow, ResultsStore, grid_from_rows

__all__ = [
    "ClassifierSettings",
    "DownstreamConfig",
    "EncoderConfig",
    "ExperimentConfig",
    "TaskConfig",
    "load_config",
    "parse_config",
    "MatrixResult",
    "run_matrix",
    "emit_reports",
    "ResultRow",
    "ResultsStore",
    "grid_from_rows",
]
