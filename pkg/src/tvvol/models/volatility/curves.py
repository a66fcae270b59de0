"""
Coefficient curves and the constrained reparameterization.

The sampled coordinates map onto the curves as

    mu(x)  = sum_j exp(beta_j) B_j(x)
    a_k(x) = M_k * sum_j theta_kj B_j(x)
    b_j(x) = M_{p+j} * sum_l eta_jl B_l(x)

where M = softmax(delta)[1:] keeps the total mass strictly below one. For
tviGARCH the last curve is the residual b_q = 1 - sum a_k - sum_{j<q} b_j.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import ClassVar, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..common.errors import InvalidArgumentError, InvariantViolationError
from ..spline import SplineBasis, design_matrix
from .model_spec import ModelKind, ModelSpec, MIN_BASIS_SIZE
from .param_vector import ParamVector

# Slack used when checking the integrated constraint sum a + sum b = 1.
INTEGRATED_TOLERANCE = 1e-12


def softmax_full(delta: ArrayLike) -> NDArray[np.float64]:
    """Softmax over all m+1 logits, slack coordinate included."""
    logits = np.asarray(delta, dtype=float)
    shifted = np.exp(logits - logits.max())
    return shifted / shifted.sum()


def softmax_weights(delta: ArrayLike) -> NDArray[np.float64]:
    """
    Masses M_1..M_m from the m+1 logits delta_0..delta_m.

    Args:
        delta: Finite logits; delta[0] is the slack coordinate

    Returns:
        Array of m positive weights whose sum stays below one
    """
    logits = np.asarray(delta, dtype=float)
    if logits.ndim != 1 or logits.size < 2:
        raise InvalidArgumentError(f"delta needs at least two entries, got shape {logits.shape}")
    if not np.all(np.isfinite(logits)):
        raise InvalidArgumentError("delta must be finite")
    return softmax_full(logits)[1:]


@lru_cache(maxsize=64)
def _cached_design(num_interior_knots: int, horizon: int) -> NDArray[np.float64]:
    return design_matrix(SplineBasis(num_interior_knots), horizon)


@dataclass(frozen=True)
class BasisSet:
    """The three bases used for the mu, a_k and b_j families."""
    mu_basis: SplineBasis
    a_basis: SplineBasis
    b_basis: SplineBasis

    @classmethod
    def from_spec(cls, spec: ModelSpec) -> "BasisSet":
        return cls(
            mu_basis=SplineBasis(spec.k1 - MIN_BASIS_SIZE),
            a_basis=SplineBasis(spec.k2 - MIN_BASIS_SIZE),
            b_basis=SplineBasis(spec.k3 - MIN_BASIS_SIZE),
        )

    def check_against(self, spec: ModelSpec) -> None:
        sizes = (self.mu_basis.num_basis, self.a_basis.num_basis, self.b_basis.num_basis)
        if sizes != (spec.k1, spec.k2, spec.k3):
            raise InvalidArgumentError(
                f"Basis sizes {sizes} do not match {spec.describe()} with k=({spec.k1}, {spec.k2}, {spec.k3})"
            )

    def designs(
        self, n: int, horizon: Optional[int] = None
    ) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
        """
        Design matrices for the first n points of a grid i/horizon.

        A horizon larger than n places the knots on the full time span, which
        lets a fit on a prefix extrapolate its curves to later indices.
        """
        horizon = n if horizon is None else horizon
        if horizon < n:
            raise InvalidArgumentError(f"Horizon {horizon} is shorter than the series length {n}")
        return (
            _cached_design(self.mu_basis.num_interior_knots, horizon)[:n],
            _cached_design(self.a_basis.num_interior_knots, horizon)[:n],
            _cached_design(self.b_basis.num_interior_knots, horizon)[:n],
        )


@dataclass(frozen=True, eq=False)
class CoefficientCurves:
    """
    Coefficient functions evaluated on a time grid.

    Attributes:
        grid: Time points in (0, 1]
        mu: Intercept curve, positive
        a: p x n array of ARCH coefficient curves
        b: q x n array of GARCH coefficient curves (0 x n for tvARCH)
    """
    grid: NDArray[np.float64]
    mu: NDArray[np.float64]
    a: NDArray[np.float64]
    b: NDArray[np.float64] = field(default_factory=lambda: np.zeros((0, 0)))

    ERROR_SHAPE: ClassVar[str] = "Curve {name} has shape {actual}, expected {expected}"

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        n = grid.size
        mu = np.asarray(self.mu, dtype=float)
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.asarray(self.b, dtype=float)
        b = b.reshape(0, n) if b.size == 0 else np.atleast_2d(b)
        for name, value, expected in (("mu", mu, (n,)), ("a", a, (a.shape[0], n)), ("b", b, (b.shape[0], n))):
            if value.shape != expected:
                raise InvalidArgumentError(self.ERROR_SHAPE.format(name=name, actual=value.shape, expected=expected))
        for name, value in (("grid", grid), ("mu", mu), ("a", a), ("b", b)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n(self) -> int:
        return int(self.grid.size)

    @property
    def p(self) -> int:
        return int(self.a.shape[0])

    @property
    def q(self) -> int:
        return int(self.b.shape[0])

    @property
    def names(self) -> list[str]:
        return ["mu"] + [f"a{k}" for k in range(1, self.p + 1)] + [f"b{j}" for j in range(1, self.q + 1)]

    def stacked(self) -> NDArray[np.float64]:
        """All curves as one (1 + p + q) x n array in `names` order."""
        return np.vstack([self.mu[None, :], self.a, self.b])

    @classmethod
    def from_stacked(cls, grid: ArrayLike, stacked: NDArray[np.float64], p: int) -> "CoefficientCurves":
        return cls(grid=np.asarray(grid), mu=stacked[0], a=stacked[1:1 + p], b=stacked[1 + p:])

    @classmethod
    def constant(cls, spec: ModelSpec, mu: float, a: ArrayLike, b: ArrayLike, n: int) -> "CoefficientCurves":
        """Flat curves for a time-constant parameter vector on the grid i/n."""
        a_values = np.asarray(a, dtype=float).reshape(spec.p)
        b_values = np.asarray(b, dtype=float).reshape(spec.q)
        return cls(
            grid=np.arange(1, n + 1, dtype=float) / n,
            mu=np.full(n, float(mu)),
            a=np.repeat(a_values[:, None], n, axis=1),
            b=np.repeat(b_values[:, None], n, axis=1),
        )

    def coefficient_sum(self) -> NDArray[np.float64]:
        """Pointwise sum_k a_k + sum_j b_j."""
        return self.a.sum(axis=0) + self.b.sum(axis=0)

    def constraint_violation(self, kind: ModelKind) -> Optional[str]:
        """Description of the first violated constraint for this kind, or None."""
        if self.n == 0:
            return None
        if not np.all(np.isfinite(self.stacked())):
            return "curves contain non-finite values"
        if self.mu.min() <= 0.0:
            return f"mu must be positive, min is {self.mu.min()}"
        if self.a.size and self.a.min() < 0.0:
            return f"a_k must be nonnegative, min is {self.a.min()}"
        if self.b.size and self.b.min() < 0.0:
            return f"b_j must be nonnegative, min is {self.b.min()}"
        total = self.coefficient_sum()
        if kind is ModelKind.TV_IGARCH:
            gap = float(np.max(np.abs(total - 1.0)))
            if gap > INTEGRATED_TOLERANCE:
                return f"sum of coefficients deviates from 1 by {gap}"
        elif total.max() >= 1.0:
            return f"sum of coefficients reaches {total.max()}"
        return None

    def check_constraints(self, kind: ModelKind) -> None:
        """
        Raises:
            InvariantViolationError: If the curves leave the kind's constraint set
        """
        problem = self.constraint_violation(kind)
        if problem is not None:
            raise InvariantViolationError(f"Constraint violated for {kind.value}: {problem}")


def build_curves(
    spec: ModelSpec,
    params: ParamVector,
    basis_set: Optional[BasisSet],
    n: int,
    horizon: Optional[int] = None,
) -> CoefficientCurves:
    """
    Evaluate the coefficient curves implied by a parameter vector.

    Args:
        spec: Model specification
        params: Parameter vector matching spec
        basis_set: Bases of the three families (built from spec if None)
        n: Number of grid points
        horizon: Time horizon of the grid (defaults to n); points are i/horizon

    Returns:
        CoefficientCurves on the first n points of the grid

    Raises:
        InvalidArgumentError: If params or bases do not match spec
    """
    params.check_against(spec)
    basis_set = BasisSet.from_spec(spec) if basis_set is None else basis_set
    basis_set.check_against(spec)
    horizon = n if horizon is None else horizon
    mu_design, a_design, b_design = basis_set.designs(n, horizon)

    weights = softmax_weights(params.delta)
    mu = mu_design @ np.exp(params.beta)
    a = weights[:spec.p, None] * (params.theta @ a_design.T)
    b_free = weights[spec.p:, None] * (params.eta.reshape(spec.free_b, spec.k3) @ b_design.T)
    if spec.kind is ModelKind.TV_IGARCH:
        residual = 1.0 - a.sum(axis=0) - b_free.sum(axis=0)
        b = np.vstack([b_free, residual[None, :]])
    else:
        b = b_free
    grid = np.arange(1, n + 1, dtype=float) / horizon
    return CoefficientCurves(grid=grid, mu=mu, a=a, b=b)
