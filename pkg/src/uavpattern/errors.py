"""Exception hierarchy shared across the package."""

import numpy as np


class DegenerateInputError(ValueError):
    """Geometry undefined for the given input (zero vector, coincident poses)."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """Invalid configuration or selector string."""


class DataError(ValueError):
    """Malformed or inconsistent input data."""


class ModelFileError(DataError):
    """Model file cannot be parsed or is inconsistent."""


class ModelVersionError(ModelFileError):
    """Model file carries an unsupported format version."""


class RankDeficiencyError(np.linalg.LinAlgError):
    """Unregularized least squares on a rank-deficient design matrix."""

    def __init__(self, rank, columns):
        self.rank = rank
        self.columns = columns
        super().__init__(
            f"design matrix is rank deficient: rank {rank} < {columns} columns "
            f"({columns - rank} degenerate directions); use kappa > 0"
        )
