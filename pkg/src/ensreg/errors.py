"""Exception types raised across the package.

Every error that callers are expected to catch derives from EnsregError,
so `except EnsregError` at a boundary (e.g. the benchmark runner) is enough
to contain any domain failure without swallowing real bugs.
"""


class EnsregError(Exception):
    """Base class for all package errors."""


# --- dataset handling ---

class MissingFile(EnsregError):
    pass


class MissingTargetColumn(EnsregError):
    pass


class NonNumericCell(EnsregError):
    """A CSV cell failed to parse as a float.

    Carries the 1-based data row number and the column name.
    """

    def __init__(self, row, column):
        self.row = row
        self.column = column
        super().__init__(f"non-numeric value at row {row}, column {column!r}")


class EmptyDataset(EnsregError):
    pass


class InvalidFraction(EnsregError):
    pass


class TooFewRows(EnsregError):
    pass


class DimensionMismatch(EnsregError):
    pass


class UnknownKind(EnsregError):
    pass


# --- learners ---

class SingularSystem(EnsregError):
    pass


class InvalidHyperparameter(EnsregError):
    pass


# --- metrics ---

class LengthMismatch(EnsregError):
    pass


class EmptyInput(EnsregError):
    pass


class ConstantTarget(EnsregError):
    pass


class ZeroDenominator(EnsregError):
    """A denominator collapsed to exactly zero.

    ``index`` is the offending sample position when one is known,
    otherwise None.
    """

    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


# --- weighting ---

class EmptyPool(EnsregError):
    pass


class SingularMisfitMatrix(EnsregError):
    pass


class EmptyStore(EnsregError):
    pass


# --- significance testing ---

class UnknownMethod(EnsregError):
    pass


class DegenerateMatrix(EnsregError):
    pass


# --- benchmark harness ---

class ConfigError(EnsregError):
    pass


class IoFailure(EnsregError):
    pass
