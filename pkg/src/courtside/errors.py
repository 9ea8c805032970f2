"""Exception hierarchy shared by the library and the CLI.

Every error carries the process exit code the CLI should use for it:
2 for usage problems, 3 for bad data, 4 for numerical failures.
"""

from __future__ import annotations


class CourtsideError(Exception):
    exit_code = 1


class UsageError(CourtsideError):
    exit_code = 2


class DataError(CourtsideError):
    exit_code = 3


class NumericError(CourtsideError):
    exit_code = 4


# --- tabular -----------------------------------------------------------------


class SchemaError(DataError):
    """Column declarations are inconsistent (duplicate or empty names, ...)."""


class StructuralError(DataError):
    """A CSV row does not have one cell per header column."""

    def __init__(self, message: str, row_index: int | None = None):
        super().__init__(message)
        self.row_index = row_index


class UnimputableColumnError(DataError):
    def __init__(self, column: str):
        super().__init__(f"column {column!r} has no observed values to impute from")
        self.column = column


class ParameterMismatchError(DataError):
    pass


class DegenerateSplitError(DataError):
    pass


class UnsupportedDegreeError(UsageError):
    pass


# --- dimred ------------------------------------------------------------------


class DimensionError(DataError):
    pass


class InvalidDistanceMatrixError(DataError):
    pass


class UndefinedStressError(NumericError):
    pass


class ConnectivityError(DataError):
    def __init__(self, n_components: int):
        super().__init__(
            f"neighbourhood graph is disconnected ({n_components} components); "
            "increase n_neighbors"
        )
        self.n_components = n_components


class DegenerateLabelsError(DataError):
    pass


class ConfigError(UsageError):
    pass


# --- regress -----------------------------------------------------------------


class UnderdeterminedError(DataError):
    pass


class ParameterError(UsageError):
    pass


class DomainError(DataError):
    pass


class DivergenceError(NumericError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"training diverged at epoch {epoch} (loss={loss!r})")
        self.epoch = epoch
        self.loss = loss


class UndefinedMetricError(NumericError):
    pass


# --- stats -------------------------------------------------------------------


class InsufficientDataError(DataError):
    pass


# --- explain -----------------------------------------------------------------


class TooManyFeaturesError(UsageError):
    pass


class KernelWidthError(NumericError):
    pass


# --- pipeline ----------------------------------------------------------------


class RenderError(DataError):
    def __init__(self, key: str, message: str | None = None):
        super().__init__(message or f"plot data is missing key {key!r}")
        self.key = key
