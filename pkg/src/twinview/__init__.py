"""Twin multiview restricted kernel machines.

Core entry points:

- :mod:`twinview.kernels` -- kernels, multiview Gram sums, bordered solver
- :mod:`twinview.tmvrkm` -- the twin model (two bordered systems per fit)
- :mod:`twinview.mvrkm` -- single-system multiview RKM baseline
- :mod:`twinview.dataio` -- CSV ingestion, scaling, PCA second view, splits
- :mod:`twinview.evaluation` -- grid search, benchmarks, sweeps, reports
- :mod:`twinview.stats` -- average ranks, Friedman and Nemenyi statistics
"""

from .errors import (
    ConfigError,
    DegenerateClassError,
    DimensionError,
    IngestError,
    ModelFormatError,
    ReportFormatError,
    SingularSystemError,
    StatsError,
    TuningError,
    TwinviewError,
    UnsupportedCheckError,
    ViewMismatchError,
)
from .kernels import BorderedSystem, KernelSpec, gram, kernel_eval, multiview_gram, solve_bordered
from .mvrkm import MvrkmModel, fit_mvrkm, predict_mvrkm
from .tmvrkm import ClassSplit, TmvrkmModel, TmvrkmParams, fit, predict

__version__ = "0.1.0"

__all__ = [
    "BorderedSystem",
    "ClassSplit",
    "ConfigError",
    "DegenerateClassError",
    "DimensionError",
    "IngestError",
    "KernelSpec",
    "ModelFormatError",
    "MvrkmModel",
    "ReportFormatError",
    "SingularSystemError",
    "StatsError",
    "TmvrkmModel",
    "TmvrkmParams",
    "TuningError",
    "TwinviewError",
    "UnsupportedCheckError",
    "ViewMismatchError",
    "fit",
    "fit_mvrkm",
    "gram",
    "kernel_eval",
    "multiview_gram",
    "predict",
    "predict_mvrkm",
    "solve_bordered",
]
