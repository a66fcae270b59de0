"""
Frequentist comparators: kernel-weighted local quasi-likelihood and constant MLE.

At a time point t the local estimator minimizes

    sum_i K((t - i/n) / h) * 1/2 ( log sigma_i^2 + X_i^2 / sigma_i^2 )

over a time-constant parameter vector (mu, a_1..a_p, b_1..b_q, sigma0^2),
with sigma_i^2 run through the whole series under those local parameters.
The constant fit is the same objective with equal weights.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Final, Optional, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import minimize

from src.tvvol.models.common import EstimationError, InvalidArgumentError, NumericalError
from src.tvvol.models.series import SeriesData, series_values
from src.tvvol.models.volatility import CoefficientCurves, ModelKind, ModelSpec, constant_variance_recursion
from .chain_pool import map_parallel

logger = logging.getLogger(__name__)

DEFAULT_BANDWIDTHS: Final[tuple[float, ...]] = (0.05, 0.1, 0.15, 0.2, 0.3)
SUM_CAP: Final[float] = 1.0 - 1e-6
MAX_ITERATIONS: Final[int] = 200
TOLERANCE: Final[float] = 1e-8
POSITIVE_FLOOR: Final[float] = 1e-8
PENALTY: Final[float] = 1e12
CV_POINTS: Final[int] = 25
DEFAULT_MAX_GRID_POINTS: Final[int] = 200


class KernelKind(Enum):
    EPANECHNIKOV = "epanechnikov"
    UNIFORM = "uniform"

    @classmethod
    def parse(cls, name: str) -> "KernelKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise InvalidArgumentError(f"Unknown kernel: {name!r} (choose from epanechnikov, uniform)")


def epanechnikov(x: ArrayLike) -> Union[float, NDArray[np.float64]]:
    """0.75 (1 - x^2) on |x| <= 1, zero outside."""
    values = np.asarray(x, dtype=float)
    result = np.where(np.abs(values) <= 1.0, 0.75 * (1.0 - values ** 2), 0.0)
    return float(result) if result.ndim == 0 else result


def uniform_kernel(x: ArrayLike) -> Union[float, NDArray[np.float64]]:
    values = np.asarray(x, dtype=float)
    result = np.where(np.abs(values) <= 1.0, 0.5, 0.0)
    return float(result) if result.ndim == 0 else result


_KERNELS: dict[KernelKind, Callable[[ArrayLike], Union[float, NDArray[np.float64]]]] = {
    KernelKind.EPANECHNIKOV: epanechnikov,
    KernelKind.UNIFORM: uniform_kernel,
}


def kernel_weights(
    t: float,
    n: int,
    bandwidth: float,
    kernel: KernelKind = KernelKind.EPANECHNIKOV,
    past_only: bool = False,
) -> NDArray[np.float64]:
    """
    Weights K((t - i/n) / h) for i = 1..n.

    With past_only, points after t get zero weight.
    """
    grid = np.arange(1, n + 1, dtype=float) / n
    weights = np.asarray(_KERNELS[kernel]((t - grid) / bandwidth), dtype=float)
    if past_only:
        weights[grid > t + 1e-12] = 0.0
    return weights


def project_capped_simplex(values: NDArray[np.float64], cap: float) -> NDArray[np.float64]:
    """Euclidean projection onto {x >= 0, sum x <= cap}."""
    clipped = np.maximum(np.asarray(values, dtype=float), 0.0)
    if clipped.sum() <= cap:
        return clipped
    ordered = np.sort(clipped)[::-1]
    thresholds = (np.cumsum(ordered) - cap) / np.arange(1.0, ordered.size + 1.0)
    active = np.flatnonzero(ordered - thresholds > 0.0)
    shift = thresholds[active[-1]] if active.size else thresholds[-1]
    return np.maximum(clipped - shift, 0.0)


@dataclass(frozen=True)
class LocalParameters:
    """Time-constant parameter vector; b holds all q GARCH coefficients."""
    mu: float
    a: tuple[float, ...]
    b: tuple[float, ...]
    sigma0_sq: float

    def as_column(self) -> NDArray[np.float64]:
        return np.array([self.mu, *self.a, *self.b])


class LocalLikelihood:
    """
    Weighted Gaussian quasi-likelihood over constant parameters.

    Optimizer coordinates are (mu, a_1..a_p, free b_j.., sigma0^2), the
    sigma0^2 entry only for GARCH kinds; for tviGARCH the last b_q is
    1 - sum a - sum of the free b_j.
    """

    def __init__(self, spec: ModelSpec, data: Union[SeriesData, ArrayLike]) -> None:
        self.spec = spec
        self.values = series_values(data)
        self.squares = self.values ** 2
        self.n = int(self.values.size)

    @property
    def dimension(self) -> int:
        return 1 + self.spec.p + self.spec.free_b + (1 if self.spec.has_sigma0 else 0)

    def unpack(self, phi: NDArray[np.float64]) -> LocalParameters:
        spec = self.spec
        a = phi[1:1 + spec.p]
        b_free = phi[1 + spec.p:1 + spec.p + spec.free_b]
        b = list(b_free)
        if spec.kind is ModelKind.TV_IGARCH:
            b.append(max(0.0, 1.0 - float(a.sum()) - float(b_free.sum())))
        sigma0_sq = float(phi[-1]) if spec.has_sigma0 else 0.0
        return LocalParameters(float(phi[0]), tuple(float(v) for v in a), tuple(float(v) for v in b), sigma0_sq)

    def pack(self, params: LocalParameters) -> NDArray[np.float64]:
        free = list(params.b[:self.spec.free_b])
        tail = [params.sigma0_sq] if self.spec.has_sigma0 else []
        return np.array([params.mu, *params.a, *free, *tail], dtype=float)

    def bounds(self) -> list[tuple[Optional[float], Optional[float]]]:
        spec = self.spec
        bounds: list[tuple[Optional[float], Optional[float]]] = [(POSITIVE_FLOOR, None)]
        bounds += [(0.0, 1.0)] * (spec.p + spec.free_b)
        if spec.has_sigma0:
            bounds.append((POSITIVE_FLOOR, None))
        return bounds

    def mass_slack(self, phi: NDArray[np.float64]) -> float:
        """Nonnegative exactly when the lag coefficients are feasible."""
        cap = 1.0 if self.spec.kind is ModelKind.TV_IGARCH else SUM_CAP
        return cap - float(np.sum(phi[1:1 + self.spec.p + self.spec.free_b]))

    def project(self, phi: NDArray[np.float64]) -> NDArray[np.float64]:
        """Map an optimizer result onto the feasible set."""
        spec = self.spec
        projected = np.array(phi, dtype=float, copy=True)
        projected[0] = max(projected[0], POSITIVE_FLOOR)
        lags = slice(1, 1 + spec.p + spec.free_b)
        cap = 1.0 if spec.kind is ModelKind.TV_IGARCH else SUM_CAP
        projected[lags] = project_capped_simplex(projected[lags], cap)
        if spec.has_sigma0:
            projected[-1] = max(projected[-1], POSITIVE_FLOOR)
        return projected

    def variances(self, phi: NDArray[np.float64], length: Optional[int] = None) -> NDArray[np.float64]:
        params = self.unpack(phi)
        values = self.values if length is None else self.values[:length]
        return constant_variance_recursion(params.mu, params.a, params.b, values, params.sigma0_sq)

    def objective(self, phi: NDArray[np.float64], weights: NDArray[np.float64]) -> float:
        """Weighted negative log-likelihood over the scored points with positive weight."""
        support = np.flatnonzero(weights > 0.0)
        support = support[support >= self.spec.likelihood_start]
        if support.size == 0:
            return 0.0
        try:
            variances = self.variances(phi, int(support[-1]) + 1)[support]
        except NumericalError:
            return PENALTY
        terms = np.log(variances) + self.squares[support] / variances
        value = 0.5 * float(weights[support] @ terms)
        return value if math.isfinite(value) else PENALTY


@dataclass(frozen=True)
class PointStatus:
    """Optimizer outcome at one grid point."""
    t: float
    converged: bool
    iterations: int
    objective: float
    message: str


def _minimize(
    likelihood: LocalLikelihood, weights: NDArray[np.float64], start: NDArray[np.float64]
) -> tuple[NDArray[np.float64], bool, int, float, str]:
    scale = float(weights.sum()) or 1.0
    normalized = weights / scale
    result = minimize(
        likelihood.objective,
        start,
        args=(normalized,),
        method="SLSQP",
        bounds=likelihood.bounds(),
        constraints=[{"type": "ineq", "fun": likelihood.mass_slack}],
        options={"maxiter": MAX_ITERATIONS, "ftol": TOLERANCE},
    )
    solution = likelihood.project(np.asarray(result.x, dtype=float))
    value = likelihood.objective(solution, normalized)
    finite = bool(np.all(np.isfinite(solution))) and math.isfinite(value) and value < PENALTY
    # status 8 (positive directional derivative) is SLSQP stalling at the optimum
    converged = finite and (bool(result.success) or int(result.status) == 8)
    return solution, converged, int(result.nit), value, str(result.message)


@dataclass(frozen=True)
class ConstantEstimate:
    """Time-constant MLE."""
    spec: ModelSpec
    params: LocalParameters
    neg_log_likelihood: float
    iterations: int
    message: str

    def curves(self, n: int) -> CoefficientCurves:
        return CoefficientCurves.constant(self.spec, self.params.mu, self.params.a, self.params.b, n)

    def fitted_variances(self, data: Union[SeriesData, ArrayLike]) -> NDArray[np.float64]:
        p = self.params
        return constant_variance_recursion(p.mu, p.a, p.b, data, p.sigma0_sq)


def _starting_points(spec: ModelSpec, variance: float) -> list[LocalParameters]:
    if spec.kind is ModelKind.TV_ARCH:
        return [
            LocalParameters(0.8 * variance, (0.2 / spec.p,) * spec.p, (), 0.0),
            LocalParameters(0.99 * variance, (0.01 / spec.p,) * spec.p, (), 0.0),
        ]
    if spec.kind is ModelKind.TV_IGARCH:
        return [
            LocalParameters(0.05 * variance, (0.1 / spec.p,) * spec.p, (0.9 / spec.q,) * spec.q, variance),
            LocalParameters(0.2 * variance, (0.3 / spec.p,) * spec.p, (0.7 / spec.q,) * spec.q, variance),
        ]
    return [
        LocalParameters(0.1 * variance, (0.1 / spec.p,) * spec.p, (0.8 / spec.q,) * spec.q, variance),
        LocalParameters(0.9 * variance, (0.05 / spec.p,) * spec.p, (0.05 / spec.q,) * spec.q, variance),
    ]


def estimate_constant(spec: ModelSpec, data: Union[SeriesData, ArrayLike]) -> ConstantEstimate:
    """
    Constrained Gaussian MLE with time-constant coefficients.

    Raises:
        InvalidArgumentError: If the series is too short (n <= 10 (p + q + 1))
        EstimationError: If no starting point leads to a finite optimum
    """
    likelihood = LocalLikelihood(spec, data)
    minimum = 10 * (spec.p + spec.q + 1)
    if likelihood.n <= minimum:
        raise InvalidArgumentError(f"Constant fit of {spec.describe()} needs more than {minimum} observations")
    variance = max(float(np.var(likelihood.values)), POSITIVE_FLOOR)
    weights = np.ones(likelihood.n)
    best: Optional[tuple[NDArray[np.float64], bool, int, float, str]] = None
    for start in _starting_points(spec, variance):
        outcome = _minimize(likelihood, weights, likelihood.pack(start))
        if outcome[1] and (best is None or outcome[3] < best[3]):
            best = outcome
        logger.debug("Constant fit start %s: converged=%s value=%.6g (%s)", start, outcome[1], outcome[3], outcome[4])
    if best is None:
        raise EstimationError(
            f"Constant fit of {spec.describe()} failed from every starting point (n={likelihood.n}, var={variance:.4g})"
        )
    solution, _, iterations, value, message = best
    return ConstantEstimate(
        spec=spec,
        params=likelihood.unpack(solution),
        neg_log_likelihood=value * likelihood.n,
        iterations=iterations,
        message=message,
    )


def constant_fit(spec: ModelSpec, data: Union[SeriesData, ArrayLike]) -> CoefficientCurves:
    """Constant MLE returned as flat curves on the grid i/n."""
    estimate = estimate_constant(spec, data)
    return estimate.curves(series_values(data).size)


@dataclass(frozen=True, eq=False)
class KernelFit:
    """
    Local estimates at the evaluation grid.

    Attributes:
        grid: Evaluation points t in (0, 1]
        curves: Coefficient estimates at the grid points
        sigma0_sq: Local initial variances (zeros for tvARCH)
        bandwidth: Kernel bandwidth
        objective_trace: Optimizer status at every grid point
        kernel: Kernel used for the weights
    """
    spec: ModelSpec
    grid: NDArray[np.float64]
    curves: CoefficientCurves
    sigma0_sq: NDArray[np.float64]
    bandwidth: float
    objective_trace: list[PointStatus] = field(default_factory=list)
    kernel: KernelKind = KernelKind.EPANECHNIKOV

    @property
    def num_failed(self) -> int:
        return sum(not status.converged for status in self.objective_trace)

    def on_grid(self, n: int) -> CoefficientCurves:
        """Curves linearly interpolated onto i/n; feasibility is kept under convex combination."""
        target = np.arange(1, n + 1, dtype=float) / n
        stacked = self.curves.stacked()
        rows = np.vstack([np.interp(target, self.grid, row) for row in stacked])
        return CoefficientCurves.from_stacked(target, rows, self.spec.p)

    def initial_variance(self) -> float:
        return float(self.sigma0_sq[0])


def _fit_point(job: tuple[ModelSpec, NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]) -> tuple[NDArray[np.float64], bool, int, float, str]:
    spec, values, weights, start = job
    return _minimize(LocalLikelihood(spec, values), weights, start)


def default_grid(n: int, max_points: int = DEFAULT_MAX_GRID_POINTS) -> NDArray[np.float64]:
    """Evaluation points i/n, thinned evenly to at most max_points and always ending at 1."""
    if n <= max_points:
        return np.arange(1, n + 1, dtype=float) / n
    indices = np.unique(np.round(np.linspace(1, n, max_points)).astype(int))
    return indices.astype(float) / n


def kernel_fit(
    spec: ModelSpec,
    data: Union[SeriesData, ArrayLike],
    bandwidth: float,
    grid: Optional[Sequence[float]] = None,
    kernel: KernelKind = KernelKind.EPANECHNIKOV,
    warm_start: Optional[ConstantEstimate] = None,
    max_workers: int = 1,
) -> KernelFit:
    """
    Kernel-weighted local quasi-likelihood estimates.

    Args:
        spec: Model specification
        data: Returns
        bandwidth: Kernel bandwidth in (0, 1); the uniform kernel also accepts >= 1
        grid: Evaluation points in (0, 1] (default_grid when None)
        kernel: Weighting kernel
        warm_start: Constant fit used as the start at every point
        max_workers: Worker processes for the grid points

    Returns:
        KernelFit; points whose optimizer did not converge carry the value of
        the nearest converged point

    Raises:
        InvalidArgumentError: On a bandwidth or grid outside the allowed range
    """
    likelihood = LocalLikelihood(spec, data)
    upper_ok = bandwidth < 1.0 or kernel is KernelKind.UNIFORM
    if not (bandwidth > 0.0 and upper_ok):
        raise InvalidArgumentError(f"Bandwidth must lie in (0, 1) for the {kernel.value} kernel, got {bandwidth}")
    points = default_grid(likelihood.n) if grid is None else np.asarray(grid, dtype=float)
    if points.size == 0 or points.min() <= 0.0 or points.max() > 1.0:
        raise InvalidArgumentError("Kernel grid must be a nonempty subset of (0, 1]")

    constant = estimate_constant(spec, likelihood.values) if warm_start is None else warm_start
    start = likelihood.pack(constant.params)
    jobs = [
        (spec, likelihood.values, kernel_weights(float(t), likelihood.n, bandwidth, kernel), start)
        for t in points
    ]
    outcomes = map_parallel(_fit_point, jobs, max_workers)

    solutions = np.vstack([outcome[0] for outcome in outcomes])
    trace = [
        PointStatus(float(t), converged, iterations, value, message)
        for t, (_, converged, iterations, value, message) in zip(points, outcomes)
    ]
    converged = np.array([status.converged for status in trace])
    for index in np.flatnonzero(~converged):
        if converged.any():
            donors = np.flatnonzero(converged)
            nearest = donors[np.argmin(np.abs(points[donors] - points[index]))]
            solutions[index] = solutions[nearest]
        else:
            solutions[index] = start
        logger.warning(
            "Kernel fit did not converge at t=%.4f (%s); carrying the nearest converged value",
            points[index], trace[index].message,
        )
        logger.debug("Point t=%.4f: %d iterations", points[index], trace[index].iterations)

    locals_ = [likelihood.unpack(row) for row in solutions]
    curves = CoefficientCurves(
        grid=points,
        mu=np.array([item.mu for item in locals_]),
        a=np.array([item.a for item in locals_]).T.reshape(spec.p, points.size),
        b=np.array([item.b for item in locals_]).T.reshape(spec.q, points.size),
    )
    problem = curves.constraint_violation(spec.kind)
    if problem is not None:
        raise NumericalError(f"Kernel fit left the constraint set: {problem}")
    return KernelFit(
        spec=spec,
        grid=points,
        curves=curves,
        sigma0_sq=np.array([item.sigma0_sq for item in locals_]),
        bandwidth=bandwidth,
        objective_trace=trace,
        kernel=kernel,
    )


def _cv_indices(n: int) -> NDArray[np.intp]:
    """0-based origins of the one-step predictions, spread over the last 80%."""
    first = max(int(0.2 * n), 1)
    return np.unique(np.round(np.linspace(first, n - 2, CV_POINTS)).astype(int))


def cv_score(
    spec: ModelSpec,
    data: Union[SeriesData, ArrayLike],
    bandwidth: float,
    warm_start: Optional[ConstantEstimate] = None,
    kernel: KernelKind = KernelKind.EPANECHNIKOV,
) -> float:
    """
    Leave-future-out score of a bandwidth.

    At each origin s the local fit uses past-only weights around s/n; the
    score is the Gaussian log density of X_{s+1} under the resulting
    one-step variance.
    """
    likelihood = LocalLikelihood(spec, data)
    constant = estimate_constant(spec, likelihood.values) if warm_start is None else warm_start
    start = likelihood.pack(constant.params)
    total = 0.0
    for origin in _cv_indices(likelihood.n):
        t = (origin + 1) / likelihood.n
        weights = kernel_weights(t, likelihood.n, bandwidth, kernel, past_only=True)
        solution, _, _, _, _ = _minimize(likelihood, weights, start)
        variance = float(likelihood.variances(solution, origin + 2)[origin + 1])
        total += -0.5 * (math.log(2.0 * math.pi) + math.log(variance) + likelihood.squares[origin + 1] / variance)
    return total


def select_bandwidth(
    spec: ModelSpec,
    data: Union[SeriesData, ArrayLike],
    candidates: Sequence[float] = DEFAULT_BANDWIDTHS,
    kernel: KernelKind = KernelKind.EPANECHNIKOV,
) -> float:
    """
    Bandwidth with the best leave-future-out one-step predictive score.

    Ties go to the larger bandwidth. Deterministic.

    Raises:
        InvalidArgumentError: If candidates is empty or holds values outside (0, 1)
    """
    values = [float(c) for c in candidates]
    if not values:
        raise InvalidArgumentError("At least one bandwidth candidate is required")
    if any(not 0.0 < c < 1.0 for c in values):
        raise InvalidArgumentError(f"Bandwidth candidates must lie in (0, 1), got {values}")
    if len(values) == 1:
        return values[0]
    warm = estimate_constant(spec, data)
    scores = {c: cv_score(spec, data, c, warm, kernel) for c in sorted(set(values))}
    for candidate, score in scores.items():
        logger.debug("Bandwidth %.3f: CV score %.6g", candidate, score)
    best = max(scores.items(), key=lambda item: (item[1], item[0]))[0]
    logger.info("Selected bandwidth %.3f from %s", best, sorted(scores))
    return best
