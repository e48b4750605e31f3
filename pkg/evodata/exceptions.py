"""Errors raised by evodata"""


class EvoDataError(Exception):
    """Base error for the package."""


class TableParseError(EvoDataError, ValueError):
    """The input table is empty, ragged or holds a non-numeric cell."""

    def __init__(self, message: str, row: int | None = None,
                 column: str | None = None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column!r}")
        if location:
            message = f"{', '.join(location)}: {message}"
        super().__init__(message)
        self.row = row
        self.column = column


class SchemaError(EvoDataError, ValueError):
    """Schema and table header disagree, or a schema entry is invalid."""


class DomainError(EvoDataError, ValueError):
    """A raw value lies outside the domain of its fitness function."""


class DegenerateColumnError(EvoDataError, ValueError):
    """A column cannot be normalized (e.g. its maximum is zero)."""


class UnusableDataError(EvoDataError, ValueError):
    """Fewer than two informative genes or organisms remain."""


class DimensionError(EvoDataError, ValueError):
    """Vector or matrix sizes do not match."""


class ConfigurationError(EvoDataError, ValueError):
    """Invalid engine, strategy or run configuration."""


class DegenerateDispersionError(EvoDataError, ArithmeticError):
    """Gene or organism dispersion vanishes; AltSel payoffs are undefined."""


class StepSizeError(EvoDataError, ArithmeticError):
    """The replicator step stays inadmissible after all step halvings."""


class NotConvergedError(EvoDataError, RuntimeError):
    """An operation needs a converged rest point."""


class DegenerateDistributionError(EvoDataError, ArithmeticError):
    """All organism fitness values are zero."""


class FitError(EvoDataError, RuntimeError):
    """Mixing weights could not be fitted."""
