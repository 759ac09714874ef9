"""Exception hierarchy shared across the package.

Every error carries a ``category`` used by the CLI to pick its exit code:
``config`` and ``validation`` map to exit 1, ``io`` to exit 2.
"""


class RelexError(Exception):
    category = "config"


class ConfigError(RelexError):
    """Bad configuration value (out-of-range hyperparameter, impossible request)."""

    category = "config"


class DataValidationError(RelexError):
    """Input data violates a format or shape contract."""

    category = "validation"


class DataIOError(RelexError):
    """A file could not be read, parsed, or written; message names the path."""

    category = "io"


class DegenerateVectorError(RelexError):
    """Pre-normalization projection output collapsed to (near) zero norm."""

    category = "validation"


class TrainingDivergedError(RelexError):
    """Loss became non-finite during optimization; message names epoch and batch."""

    category = "validation"


class UndefinedMetricError(RelexError):
    """Metric has no defined value on this input (e.g. no eligible class)."""

    category = "validation"
