"""Exception hierarchy shared across the package."""


class TwinviewError(Exception):
    """Base class for every error raised by twinview."""


class ConfigError(TwinviewError, ValueError):
    """Invalid hyperparameter, grid or configuration value."""


class DimensionError(TwinviewError, ValueError):
    """Array shapes that cannot be combined."""


class ViewMismatchError(DimensionError):
    """View count or per-view row/column structure is inconsistent."""


class SingularSystemError(TwinviewError, ArithmeticError):
    """A bordered linear system could not be solved stably."""


class DegenerateClassError(TwinviewError, ValueError):
    """Training data is missing one of the two classes."""


class UnsupportedCheckError(TwinviewError):
    """A diagnostic was requested for a model configuration it cannot handle."""


class IngestError(TwinviewError, ValueError):
    """Input data could not be parsed or contains invalid values."""


class ModelFormatError(IngestError):
    """A serialized model document is malformed or of the wrong type."""


class TuningError(TwinviewError):
    """Every grid configuration failed during model selection."""


class ReportFormatError(TwinviewError, ValueError):
    """A benchmark report file is truncated or has an unknown schema."""


class StatsError(TwinviewError, ValueError):
    """An accuracy table is unusable for rank statistics."""
