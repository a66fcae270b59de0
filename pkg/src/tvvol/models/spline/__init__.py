"""
Spline package: clamped cubic B-spline bases and design matrices.
"""

from .spline_basis import (
    SplineBasis,
    make_basis,
    eval_basis,
    design_matrix,
    auto_interior_knots,
)

__all__ = [
    'SplineBasis',
    'make_basis',
    'eval_basis',
    'design_matrix',
    'auto_interior_knots',
]
