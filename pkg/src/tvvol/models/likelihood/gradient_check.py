"""
Finite-difference verification of the analytic gradient.
"""

import logging
from dataclasses import dataclass, field
from typing import Final, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from ..series import SeriesData, SeriesSource
from ..volatility import ModelKind, ModelSpec, ParamVector
from .posterior import PosteriorTarget
from .prior_hyper import PriorHyper

logger = logging.getLogger(__name__)

DEFAULT_STEP: Final[float] = 1e-5
ABSOLUTE_TOLERANCE: Final[float] = 1e-6
RELATIVE_TOLERANCE: Final[float] = 1e-4
CHECK_INTERIOR_KNOTS: Final[int] = 2


@dataclass(frozen=True, eq=False)
class GradientCheck:
    """Analytic and central-difference derivatives for every coordinate of one case."""
    spec: ModelSpec
    coordinate_names: list[str]
    analytic: NDArray[np.float64]
    numeric: NDArray[np.float64]

    @property
    def error(self) -> NDArray[np.float64]:
        return np.abs(self.analytic - self.numeric)

    @property
    def allowed(self) -> NDArray[np.float64]:
        return np.maximum(ABSOLUTE_TOLERANCE, RELATIVE_TOLERANCE * np.abs(self.numeric))

    @property
    def passed(self) -> bool:
        return bool(np.all(self.error <= self.allowed))

    @property
    def worst_ratio(self) -> float:
        """Largest error-to-tolerance ratio; at most 1 when the check passes."""
        return float(np.max(self.error / self.allowed))

    def failures(self) -> list[str]:
        bad = np.flatnonzero(self.error > self.allowed)
        return [self.coordinate_names[i] for i in bad]


def check_gradient(
    target: PosteriorTarget,
    coords: NDArray[np.float64],
    step: float = DEFAULT_STEP,
) -> GradientCheck:
    """Compare PosteriorTarget.evaluate against central differences in every coordinate."""
    coords = np.asarray(coords, dtype=float)
    _, analytic = target.evaluate(coords)
    numeric = np.empty_like(coords)
    for i in range(coords.size):
        forward = coords.copy()
        backward = coords.copy()
        forward[i] += step
        backward[i] -= step
        numeric[i] = (target.value(forward) - target.value(backward)) / (2.0 * step)
    return GradientCheck(
        spec=target.spec,
        coordinate_names=target.layout.column_names(),
        analytic=analytic,
        numeric=numeric,
    )


def random_case(
    kind: ModelKind,
    rng: np.random.Generator,
    n: int = 80,
    interior_knots: int = CHECK_INTERIOR_KNOTS,
) -> tuple[ModelSpec, ParamVector, SeriesData]:
    """
    Random model, interior parameter point and N(0, 1) series for a gradient check.

    Lag orders are drawn from {1, 2}; theta and eta stay inside [0.05, 0.95] so
    the difference stencil never leaves the unit interval.
    """
    p = int(rng.integers(1, 3))
    q = 0 if kind is ModelKind.TV_ARCH else int(rng.integers(1, 3))
    spec = ModelSpec.with_knots(kind, p, q, interior_knots)
    params = ParamVector(
        beta=rng.uniform(-1.0, 1.0, spec.k1),
        theta=rng.uniform(0.05, 0.95, (spec.p, spec.k2)),
        eta=rng.uniform(0.05, 0.95, (spec.free_b, spec.k3)),
        delta=rng.normal(0.0, 1.0, spec.num_weights + 1),
        sigma0_sq=float(np.exp(rng.uniform(-0.5, 0.5))) if spec.has_sigma0 else None,
    )
    data = SeriesData(
        values=rng.standard_normal(n),
        source=SeriesSource.SIMULATED,
        meta={"purpose": "gradient check"},
    )
    return spec, params, data


@dataclass
class GradientTrials:
    """Outcome of a batch of random gradient checks."""
    checks: list[GradientCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def num_failed(self) -> int:
        return sum(not check.passed for check in self.checks)

    @property
    def worst_ratio(self) -> float:
        return max((check.worst_ratio for check in self.checks), default=0.0)

    def summary(self) -> dict[str, object]:
        failing = [
            {"model": check.spec.describe(), "coordinates": check.failures()}
            for check in self.checks if not check.passed
        ]
        return {
            "trials": len(self.checks),
            "failed": self.num_failed,
            "worst_error_ratio": self.worst_ratio,
            "failures": failing,
        }


def run_gradient_trials(
    kinds: Sequence[ModelKind],
    trials: int,
    seed: int,
    n: int = 80,
    hyper: Optional[PriorHyper] = PriorHyper(),
) -> GradientTrials:
    """
    Run `trials` random checks, cycling through `kinds`.

    Deterministic given the seed.
    """
    rng = np.random.default_rng(seed)
    result = GradientTrials()
    for trial in range(trials):
        kind = kinds[trial % len(kinds)]
        spec, params, data = random_case(kind, rng, n)
        target = PosteriorTarget(spec, data, hyper)
        check = check_gradient(target, params.to_coordinates(spec))
        if not check.passed:
            logger.warning("Gradient check failed for %s at %s", spec.describe(), check.failures())
        result.checks.append(check)
    logger.info("Gradient checks: %d/%d passed", trials - result.num_failed, trials)
    return result
