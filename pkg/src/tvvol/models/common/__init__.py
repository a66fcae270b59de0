"""
Common building blocks shared across the model packages.
"""

from .errors import (
    TvVolError,
    InvalidArgumentError,
    DataFormatError,
    SchemaError,
    NumericalError,
    InitializationError,
    EstimationError,
    InvariantViolationError,
)

__all__ = [
    'TvVolError',
    'InvalidArgumentError',
    'DataFormatError',
    'SchemaError',
    'NumericalError',
    'InitializationError',
    'EstimationError',
    'InvariantViolationError',
]
