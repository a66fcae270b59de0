"""
Cubic B-spline basis on [0, 1] with equidistant interior knots.

The basis is clamped: the boundary knots 0 and 1 are repeated to full
multiplicity (degree + 1), so the first basis function equals 1 at x = 0
and the last equals 1 at x = 1. Evaluation uses the triangular Cox-de Boor
recursion over the knot span containing each point, which touches only the
degree + 1 functions that can be nonzero there.
"""

import math
from dataclasses import dataclass, field
from typing import ClassVar, Final

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..common.errors import InvalidArgumentError

CUBIC: Final[int] = 3

# Knot schedule anchors: 4 interior knots at n=200, 6 at n=1000.
_SCHEDULE_LOW_N: Final[float] = 200.0
_SCHEDULE_HIGH_N: Final[float] = 1000.0
_SCHEDULE_MIN_KNOTS: Final[int] = 4


@dataclass(frozen=True, eq=False)
class SplineBasis:
    """
    Immutable clamped B-spline basis.

    Attributes:
        num_interior_knots: Number of equidistant knots strictly inside (0, 1)
        degree: Polynomial degree (always 3)
        knots: Full knot vector including the replicated boundary knots
    """
    num_interior_knots: int
    degree: int = CUBIC
    knots: NDArray[np.float64] = field(init=False, repr=False)

    ERROR_NEGATIVE_KNOTS: ClassVar[str] = "Number of interior knots cannot be negative, got {count}"
    ERROR_DEGREE: ClassVar[str] = "Only cubic bases are supported, got degree {degree}"
    ERROR_DOMAIN: ClassVar[str] = "Evaluation points must lie in [0, 1], got range [{low}, {high}]"

    def __post_init__(self) -> None:
        """Validate the knot count and build the knot vector."""
        if self.num_interior_knots < 0:
            raise InvalidArgumentError(self.ERROR_NEGATIVE_KNOTS.format(count=self.num_interior_knots))
        if self.degree != CUBIC:
            raise InvalidArgumentError(self.ERROR_DEGREE.format(degree=self.degree))
        interior = np.linspace(0.0, 1.0, self.num_interior_knots + 2)[1:-1]
        knots = np.concatenate([
            np.zeros(self.degree + 1),
            interior,
            np.ones(self.degree + 1),
        ])
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)

    @property
    def num_basis(self) -> int:
        """Number of basis functions K = interior knots + degree + 1."""
        return self.num_interior_knots + self.degree + 1

    def find_spans(self, x: NDArray[np.float64]) -> NDArray[np.intp]:
        """Index i of the knot span [t_i, t_{i+1}) holding each point; x = 1 maps to the last span."""
        last_span = self.num_basis - 1
        spans = np.searchsorted(self.knots, x, side="right") - 1
        return np.clip(spans, self.degree, last_span)

    def evaluate(self, x: ArrayLike) -> NDArray[np.float64]:
        """
        Evaluate every basis function at each point.

        Args:
            x: Scalar or 1-d array of points in [0, 1]

        Returns:
            Array of shape (len(x), K)

        Raises:
            InvalidArgumentError: If any point lies outside [0, 1]
        """
        points = np.atleast_1d(np.asarray(x, dtype=float))
        if points.size and (points.min() < 0.0 or points.max() > 1.0 or not np.all(np.isfinite(points))):
            raise InvalidArgumentError(
                self.ERROR_DOMAIN.format(low=points.min(), high=points.max())
            )
        spans = self.find_spans(points)
        local = _nonzero_basis_values(spans, points, self.degree, self.knots)

        values = np.zeros((points.size, self.num_basis))
        rows = np.arange(points.size)
        for r in range(self.degree + 1):
            values[rows, spans - self.degree + r] = local[:, r]
        return values


def _nonzero_basis_values(
    spans: NDArray[np.intp],
    x: NDArray[np.float64],
    degree: int,
    knots: NDArray[np.float64],
) -> NDArray[np.float64]:
    """Cox-de Boor triangle for the degree+1 nonzero functions, vectorized over points."""
    count = x.size
    values = np.zeros((count, degree + 1))
    left = np.zeros((count, degree + 1))
    right = np.zeros((count, degree + 1))
    values[:, 0] = 1.0
    for j in range(1, degree + 1):
        left[:, j] = x - knots[spans + 1 - j]
        right[:, j] = knots[spans + j] - x
        saved = np.zeros(count)
        for r in range(j):
            temp = values[:, r] / (right[:, r + 1] + left[:, j - r])
            values[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        values[:, j] = saved
    return values


def make_basis(num_interior_knots: int) -> SplineBasis:
    """Build a clamped cubic basis with the given number of equidistant interior knots."""
    return SplineBasis(num_interior_knots)


def eval_basis(basis: SplineBasis, x: float) -> NDArray[np.float64]:
    """Vector of the K basis values at a single point x in [0, 1]."""
    return basis.evaluate(x)[0]


def design_matrix(basis: SplineBasis, n: int) -> NDArray[np.float64]:
    """
    Basis values at the standardized time points i/n, i = 1..n.

    Args:
        basis: Basis to evaluate
        n: Number of time points (>= 1)

    Returns:
        Array of shape (n, K); row i-1 holds B_j(i/n)
    """
    if n < 1:
        raise InvalidArgumentError(f"Design matrix needs n >= 1, got {n}")
    grid = np.arange(1, n + 1, dtype=float) / n
    matrix = basis.evaluate(grid)
    matrix.setflags(write=False)
    return matrix


def auto_interior_knots(n: int) -> int:
    """
    Interior knot count for a series of length n.

    Interpolates 4, 5 and 6 knots at n = 200, 500 and 1000 on a log scale and
    grows slowly beyond, capped at 6 + 2 * ceil(log10(n / 1000)).
    """
    if n < 1:
        raise InvalidArgumentError(f"Series length must be positive, got {n}")
    span = math.log10(_SCHEDULE_HIGH_N) - math.log10(_SCHEDULE_LOW_N)
    raw = round(_SCHEDULE_MIN_KNOTS + 2.0 * (math.log10(n) - math.log10(_SCHEDULE_LOW_N)) / span)
    upper = max(_SCHEDULE_MIN_KNOTS, 6 + math.ceil(math.log10(n / _SCHEDULE_HIGH_N)) * 2)
    return int(min(max(_SCHEDULE_MIN_KNOTS, raw), upper))
