"""
Volatility package: model definitions, reparameterization and variance recursions.
"""

from .model_spec import MIN_BASIS_SIZE, ModelKind, ModelSpec
from .param_vector import ParamLayout, ParamVector, ParamGradient
from .curves import (
    INTEGRATED_TOLERANCE,
    BasisSet,
    CoefficientCurves,
    softmax_full,
    softmax_weights,
    build_curves,
)
from .recursion import (
    lagged,
    variance_lags,
    arch_component,
    garch_filter,
    variance_recursion,
    constant_variance_recursion,
)

__all__ = [
    'MIN_BASIS_SIZE',
    'ModelKind',
    'ModelSpec',
    'ParamLayout',
    'ParamVector',
    'ParamGradient',
    'INTEGRATED_TOLERANCE',
    'BasisSet',
    'CoefficientCurves',
    'softmax_full',
    'softmax_weights',
    'build_curves',
    'lagged',
    'variance_lags',
    'arch_component',
    'garch_filter',
    'variance_recursion',
    'constant_variance_recursion',
]
