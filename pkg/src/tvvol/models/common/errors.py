"""
Exception hierarchy shared by the models and services.

Validation failures derive from ValueError and numerical failures from
RuntimeError so callers that only know the builtin types keep working.
The CLI maps the two branches onto distinct exit codes.
"""


class TvVolError(Exception):
    """Root of every error raised by tvvol."""


class InvalidArgumentError(TvVolError, ValueError):
    """A precondition on an argument was violated."""


class DataFormatError(InvalidArgumentError):
    """Input data could not be parsed into a series."""


class SchemaError(DataFormatError):
    """A required column is missing from an input file."""


class NumericalError(TvVolError, RuntimeError):
    """A numerical procedure failed."""


class InitializationError(NumericalError):
    """A sampler could not start from the given position."""


class EstimationError(NumericalError):
    """An optimizer failed to produce an estimate."""


class InvariantViolationError(NumericalError):
    """An internal invariant that should be impossible to break was broken."""
