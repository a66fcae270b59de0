"""
Likelihood package: posterior kernel, analytic gradient and its finite-difference check.
"""

from .prior_hyper import PriorHyper
from .posterior import (
    LOG_TWO_PI,
    Potential,
    PosteriorTarget,
    adjoint_recursion,
    softmax_logit_gradient,
    neg_log_posterior,
    gradient,
    data_log_likelihood,
)
from .gradient_check import (
    GradientCheck,
    GradientTrials,
    check_gradient,
    random_case,
    run_gradient_trials,
)

__all__ = [
    'PriorHyper',
    'LOG_TWO_PI',
    'Potential',
    'PosteriorTarget',
    'adjoint_recursion',
    'softmax_logit_gradient',
    'neg_log_posterior',
    'gradient',
    'data_log_likelihood',
    'GradientCheck',
    'GradientTrials',
    'check_gradient',
    'random_case',
    'run_gradient_trials',
]
