"""
Simulation of time-varying ARCH/GARCH/iGARCH paths.

X_i = sigma_i * zeta_i with zeta_i iid N(0, 1) and sigma_i^2 from the
kind-specific recursion evaluated with the true coefficient functions at i/n.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from src.tvvol.models.common import InvalidArgumentError
from src.tvvol.models.series import SeriesData, SeriesSource
from src.tvvol.models.volatility import CoefficientCurves, ModelKind, ModelSpec

logger = logging.getLogger(__name__)

CurveFn = Callable[[NDArray[np.float64]], NDArray[np.float64]]

CONSTRAINT_SLACK = 1e-9
VALIDATION_GRID_SIZE = 10001


@dataclass(frozen=True, eq=False)
class Scenario:
    """
    True coefficient functions and simulation settings.

    Attributes:
        name: Identifier used on the command line and in provenance
        spec: Model kind and lag orders (basis sizes unused)
        mu0: Intercept function on [0, 1]
        a0: One function per ARCH lag
        b0: One function per GARCH lag; for tviGARCH the last one may be omitted
            and is then derived as 1 - sum a - sum of the others
        n: Series length
        seed: RNG seed
        zero_history: Start from sigma_0^2 = 0 instead of the stationary value
    """
    name: str
    spec: ModelSpec
    mu0: CurveFn
    a0: Sequence[CurveFn]
    b0: Sequence[CurveFn] = field(default_factory=tuple)
    n: int = 1000
    seed: int = 0
    zero_history: bool = False

    ERROR_LAGS: ClassVar[str] = "Scenario {name} has {count} {family} functions, {expected} expected"
    ERROR_CONSTRAINT: ClassVar[str] = "Scenario {name} violates its constraints: {problem}"

    def __post_init__(self) -> None:
        object.__setattr__(self, "a0", tuple(self.a0))
        object.__setattr__(self, "b0", tuple(self.b0))
        if len(self.a0) != self.spec.p:
            raise InvalidArgumentError(
                self.ERROR_LAGS.format(name=self.name, count=len(self.a0), family="a", expected=self.spec.p)
            )
        allowed = {self.spec.q} | ({self.spec.q - 1} if self.spec.kind is ModelKind.TV_IGARCH else set())
        if len(self.b0) not in allowed:
            raise InvalidArgumentError(
                self.ERROR_LAGS.format(name=self.name, count=len(self.b0), family="b", expected=self.spec.q)
            )
        if self.n < 1:
            raise InvalidArgumentError(f"Scenario length must be positive, got {self.n}")
        problem = self._constraint_problem(np.linspace(0.0, 1.0, VALIDATION_GRID_SIZE))
        if problem is not None:
            raise InvalidArgumentError(self.ERROR_CONSTRAINT.format(name=self.name, problem=problem))

    def evaluate(self, x: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
        """mu, a (p x len(x)) and b (q x len(x)) at the points x."""
        x = np.asarray(x, dtype=float)
        mu = np.broadcast_to(np.asarray(self.mu0(x), dtype=float), x.shape).copy()
        a = np.vstack([np.broadcast_to(np.asarray(f(x), dtype=float), x.shape) for f in self.a0])
        b_rows = [np.broadcast_to(np.asarray(f(x), dtype=float), x.shape) for f in self.b0]
        if self.spec.kind is ModelKind.TV_IGARCH and len(b_rows) == self.spec.q - 1:
            b_rows.append(1.0 - a.sum(axis=0) - sum(b_rows, np.zeros_like(x)))
        b = np.vstack(b_rows) if b_rows else np.zeros((0, x.size))
        return mu, a, b

    def _constraint_problem(self, x: NDArray[np.float64]) -> Optional[str]:
        mu, a, b = self.evaluate(x)
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            return "non-finite coefficient values"
        if mu.min() <= 0.0:
            return f"mu0 reaches {mu.min():.3g}"
        if min(a.min(), b.min(initial=0.0)) < -CONSTRAINT_SLACK:
            return "negative lag coefficient"
        total = a.sum(axis=0) + b.sum(axis=0)
        if self.spec.kind is ModelKind.TV_IGARCH:
            gap = float(np.max(np.abs(total - 1.0)))
            if gap > CONSTRAINT_SLACK:
                return f"sum of coefficients deviates from 1 by {gap:.3g}"
        elif total.max() >= 1.0:
            return f"sum of coefficients reaches {total.max():.6f}"
        return None

    def true_curves(self, n: Optional[int] = None) -> CoefficientCurves:
        """True coefficient functions on the grid i/n."""
        n = self.n if n is None else n
        grid = np.arange(1, n + 1, dtype=float) / n
        mu, a, b = self.evaluate(grid)
        return CoefficientCurves(grid=grid, mu=mu, a=a, b=b)

    def initial_variance(self) -> float:
        """
        sigma_0^2: mu0(0) / (1 - sum a(0) - sum b(0)) for tvGARCH, mu0(0) for
        tviGARCH, 0 for tvARCH or under the zero-history convention.
        """
        if self.zero_history or not self.spec.has_sigma0:
            return 0.0
        mu, a, b = self.evaluate(np.array([0.0]))
        if self.spec.kind is ModelKind.TV_IGARCH:
            return float(mu[0])
        return float(mu[0] / (1.0 - a[:, 0].sum() - b[:, 0].sum()))


def simulate(scenario: Scenario) -> SeriesData:
    """
    Draw one path of the scenario.

    Returns:
        SeriesData of length scenario.n, source SIMULATED, deterministic given the seed
    """
    n = scenario.n
    rng = np.random.default_rng(scenario.seed)
    shocks = rng.standard_normal(n).tolist()
    grid = np.arange(1, n + 1, dtype=float) / n
    mu, a, b = scenario.evaluate(grid)
    mu_list = mu.tolist()
    a_rows = [row.tolist() for row in a]
    b_rows = [row.tolist() for row in b]
    p, q = len(a_rows), len(b_rows)

    sigma0_sq = scenario.initial_variance()
    # index i + p for squares and i + q for variances hold time i + 1
    squares = [0.0] * (p + n)
    variances = [0.0] * (q - 1) + [sigma0_sq] + [0.0] * n if q else [0.0] * n
    values = []
    for i in range(n):
        value = mu_list[i]
        for k in range(p):
            value += a_rows[k][i] * squares[p + i - k - 1]
        for j in range(q):
            value += b_rows[j][i] * variances[q + i - j - 1]
        if q:
            variances[q + i] = value
        observation = math.sqrt(value) * shocks[i]
        squares[p + i] = observation * observation
        values.append(observation)

    logger.debug("Simulated %s: n=%d, seed=%d, sigma0^2=%.4g", scenario.name, n, scenario.seed, sigma0_sq)
    return SeriesData(
        values=np.asarray(values),
        source=SeriesSource.SIMULATED,
        scale=1.0,
        meta={
            "scenario": scenario.name,
            "seed": str(scenario.seed),
            "n": str(n),
            "initial": "zero" if scenario.zero_history else "stationary",
        },
    )
