"""Exception types shared across the package.

CLI exit codes: ConfigError -> 2, DataError -> 3, NumericError -> 4.
"""


class ConfigError(ValueError):
    """Invalid hyperparameter, loss weight, or run configuration."""


class DataError(ValueError):
    """Corpus parsing, label mapping, or checkpoint compatibility failure."""


class DimensionError(ValueError):
    """Tensor shape mismatch or empty input where a dimension is required."""


class NumericError(ArithmeticError):
    """NaN or other numeric failure that aborts a computation."""


class DegenerateBatchError(ValueError):
    """Batch too small for the contrastive objective (needs N >= 2)."""
