"""
Comparison of fitted models.

In-sample evidence through the harmonic-mean identity, joint predictive
log-likelihood of held-out tails and one-step-ahead point-forecast errors.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import logsumexp

from src.tvvol.models.common import InvalidArgumentError
from src.tvvol.models.likelihood import LOG_TWO_PI, PosteriorTarget, PriorHyper
from src.tvvol.models.sampling import HmcConfig
from src.tvvol.models.series import MIN_SERIES_LENGTH, SeriesData, series_values
from src.tvvol.models.volatility import CoefficientCurves, ModelSpec, ParamLayout, variance_recursion
from .chain_pool import map_parallel, run_chains
from .hmc_sampler import PosteriorSamples
from .inference_summaries import curve_draws, fitted_variances

logger = logging.getLogger(__name__)

MIN_HARMONIC_DRAWS = 100
UNSTABLE_IQR = 50.0
EXTREME_LOG_DENSITY = -50.0
DEFAULT_FORECAST_CUTS = 15
FORECAST_WINDOW = (0.1, 0.9)
REGIMES = ("full", "first", "second")


class KassRaftery(Enum):
    """Evidence categories for 2 log B12"""
    NOT_WORTH = "NotWorth"
    POSITIVE = "Positive"
    STRONG = "Strong"
    VERY_STRONG = "VeryStrong"

    @classmethod
    def classify(cls, two_log_bf: float) -> "KassRaftery":
        magnitude = abs(two_log_bf)
        if magnitude < 2.0:
            return cls.NOT_WORTH
        if magnitude < 6.0:
            return cls.POSITIVE
        if magnitude <= 10.0:
            return cls.STRONG
        return cls.VERY_STRONG


def harmonic_mean_log_evidence(loglikes: ArrayLike) -> float:
    """log N - logsumexp(-l_d): log of the harmonic mean of the likelihoods."""
    values = np.asarray(loglikes, dtype=float).reshape(-1)
    if values.size == 0:
        raise InvalidArgumentError("Harmonic-mean estimate needs at least one draw")
    return float(math.log(values.size) - logsumexp(-values))


def draw_loglikelihoods(samples: PosteriorSamples, data: Union[SeriesData, ArrayLike]) -> NDArray[np.float64]:
    """Data log-likelihood (priors excluded) of every draw."""
    target = PosteriorTarget(samples.spec, data, None, samples.horizon)
    return np.array([target.data_log_likelihood(row) for row in samples.coordinates()])


@dataclass(frozen=True)
class HarmonicEstimate:
    """Harmonic-mean log evidence with its stability diagnostics"""
    log_evidence: float
    draws: int
    iqr: float

    @property
    def unstable(self) -> bool:
        return self.iqr > UNSTABLE_IQR


def log_marginal_harmonic(
    samples: PosteriorSamples,
    spec: ModelSpec,
    data: Union[SeriesData, ArrayLike],
) -> HarmonicEstimate:
    """
    Harmonic-mean estimate of the log marginal likelihood.

    Args:
        samples: Posterior draws on data
        spec: Model of the draws
        data: The fitted series

    Raises:
        InvalidArgumentError: With fewer than 100 draws or mismatched spec
    """
    if spec != samples.spec:
        raise InvalidArgumentError(f"Samples belong to {samples.spec.describe()}, not {spec.describe()}")
    if len(samples) < MIN_HARMONIC_DRAWS:
        raise InvalidArgumentError(f"Harmonic-mean estimate needs {MIN_HARMONIC_DRAWS} draws, got {len(samples)}")
    loglikes = draw_loglikelihoods(samples, data)
    upper, lower = np.percentile(-loglikes, [75, 25])
    estimate = HarmonicEstimate(harmonic_mean_log_evidence(loglikes), len(samples), float(upper - lower))
    if estimate.unstable:
        logger.warning(
            "Harmonic-mean estimate for %s is unstable: IQR of -loglik is %.1f",
            spec.describe(), estimate.iqr,
        )
    return estimate


@dataclass(frozen=True)
class BayesFactor:
    """2 log B12 between two named models"""
    first: str
    second: str
    two_log_bf: float

    @property
    def label(self) -> KassRaftery:
        return KassRaftery.classify(self.two_log_bf)

    @property
    def favoured(self) -> Optional[str]:
        if self.two_log_bf > 0.0:
            return self.first
        if self.two_log_bf < 0.0:
            return self.second
        return None


def bayes_factor(first: str, first_evidence: float, second: str, second_evidence: float) -> BayesFactor:
    return BayesFactor(first, second, 2.0 * (first_evidence - second_evidence))


def predictive_log_density(values: ArrayLike, variances: ArrayLike) -> NDArray[np.float64]:
    """Per-point terms 1/2 (-X^2/s^2 - log s - log 2 pi)."""
    x = np.asarray(values, dtype=float)
    s2 = np.asarray(variances, dtype=float)
    return 0.5 * (-(x ** 2) / s2 - 0.5 * np.log(s2) - LOG_TWO_PI)


@dataclass(frozen=True)
class PredictiveScore:
    holdout: int
    value: float
    extreme_points: tuple[int, ...] = ()


def predictive_score(
    spec: ModelSpec,
    data: Union[SeriesData, ArrayLike],
    m: int,
    samples: PosteriorSamples,
) -> PredictiveScore:
    """
    Joint predictive log-likelihood of the last m points.

    samples must come from a fit on the first n - m points with horizon n.

    Raises:
        InvalidArgumentError: If m is not in (0, n) or the fit horizon is not n
    """
    values = series_values(data)
    n = values.size
    if not 0 < m < n:
        raise InvalidArgumentError(f"Holdout size must be in (0, {n}), got {m}")
    if samples.horizon != n:
        raise InvalidArgumentError(f"Prefix fit has horizon {samples.horizon}, expected {n}")
    variances = fitted_variances(spec, samples, values)
    terms = predictive_log_density(values[n - m:], variances[n - m:])
    extreme = tuple(int(i) + n - m for i in np.flatnonzero(terms < EXTREME_LOG_DENSITY))
    if extreme:
        logger.warning(
            "%s: %d holdout points have log-density below %g (first at index %d)",
            spec.describe(), len(extreme), EXTREME_LOG_DENSITY, extreme[0],
        )
    return PredictiveScore(holdout=m, value=float(np.mean(terms)), extreme_points=extreme)


def predictive_loglik(
    spec: ModelSpec,
    data: Union[SeriesData, ArrayLike],
    m: int,
    samples: PosteriorSamples,
) -> float:
    """Average predictive log-density over the last m points."""
    return predictive_score(spec, data, m, samples).value


def forecast_variances(
    spec: ModelSpec,
    data: Union[SeriesData, ArrayLike],
    samples: PosteriorSamples,
) -> NDArray[np.float64]:
    """
    sigma_n^2 of every draw, from its curves and the first n - 1 observations.

    Raises:
        InvalidArgumentError: If n < p + 2 or the fit horizon is not n
    """
    values = series_values(data)
    n = values.size
    if n < spec.p + 2:
        raise InvalidArgumentError(f"One-step forecast needs at least {spec.p + 2} observations, got {n}")
    if samples.horizon != n:
        raise InvalidArgumentError(f"Fit has horizon {samples.horizon}, expected {n}")
    curves = curve_draws(samples, n)
    stacked = np.stack([curves[name] for name in spec.coefficient_names], axis=1)
    grid = np.arange(1, n + 1, dtype=float) / n
    sigma0 = ParamLayout(spec).sigma0
    forecasts = np.empty(len(samples))
    for row in range(len(samples)):
        initial = float(samples.draws[row, sigma0]) if sigma0 is not None else None
        draw_curves = CoefficientCurves.from_stacked(grid, stacked[row], spec.p)
        forecasts[row] = variance_recursion(spec, draw_curves, values, initial)[-1]
    return forecasts


def one_step_forecast_mse(
    spec: ModelSpec,
    data: Union[SeriesData, ArrayLike],
    samples: PosteriorSamples,
) -> float:
    """Posterior mean of (X_n^2 - sigma_n^2)^2, samples fitted on the first n - 1 points."""
    values = series_values(data)
    return float(np.mean((values[-1] ** 2 - forecast_variances(spec, values, samples)) ** 2))


def forecast_cut_points(n: int, count: int = DEFAULT_FORECAST_CUTS, seed: int = 0) -> list[int]:
    """
    Seeded forecast origins drawn without replacement from the middle 80% of the series.

    A cut c means: fit on the first c - 1 observations, forecast observation c.
    """
    low = max(math.ceil(FORECAST_WINDOW[0] * n), MIN_SERIES_LENGTH + 1)
    high = math.floor(FORECAST_WINDOW[1] * n)
    if high < low:
        raise InvalidArgumentError(f"Series of length {n} is too short for forecast cut points")
    candidates = np.arange(low, high + 1)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(candidates, size=min(count, candidates.size), replace=False)
    return sorted(int(c) for c in chosen)


def split_regimes(data: SeriesData, names: Sequence[str] = REGIMES) -> dict[str, SeriesData]:
    """Full series, its first half and its second half."""
    half = data.n // 2
    available = {"full": data, "first": data.head(half), "second": data.tail(data.n - half)}
    unknown = [name for name in names if name not in available]
    if unknown:
        raise InvalidArgumentError(f"Unknown regime(s) {unknown}; choose from {', '.join(REGIMES)}")
    return {name: available[name] for name in names}


FitJob = tuple[ModelSpec, SeriesData, PriorHyper, HmcConfig, int, int]


def _fit(job: FitJob) -> PosteriorSamples:
    spec, series, hyper, config, chains, horizon = job
    return PosteriorSamples.pooled(run_chains(spec, series, hyper, config, chains, horizon=horizon, max_workers=1))


@dataclass
class ComparisonReport:
    """
    Comparison of several models on one series.

    Attributes:
        models: Model names in command-line order
        regime: Data regime the report covers
        n: Series length
        log_evidence: Harmonic-mean estimate per model
        bayes_factor: First model against the second
        predictive: Holdout size -> model -> average predictive log-likelihood
        extreme_points: Holdout size -> model -> indices scored below -50
        one_step_mse: Model -> forecast MSE averaged over the cut points
        cut_points: Forecast origins used
    """
    models: list[str]
    regime: str
    n: int
    log_evidence: dict[str, HarmonicEstimate] = field(default_factory=dict)
    bayes_factor: Optional[BayesFactor] = None
    predictive: dict[int, dict[str, float]] = field(default_factory=dict)
    extreme_points: dict[int, dict[str, list[int]]] = field(default_factory=dict)
    one_step_mse: dict[str, float] = field(default_factory=dict)
    cut_points: list[int] = field(default_factory=list)

    def to_dict(self) -> dict[str, object]:
        result: dict[str, object] = {
            "models": self.models,
            "regime": self.regime,
            "n": self.n,
            "log_marginal_harmonic": {
                name: {"value": est.log_evidence, "draws": est.draws, "iqr_neg_loglik": est.iqr}
                for name, est in self.log_evidence.items()
            },
            "predictive": {str(m): scores for m, scores in self.predictive.items()},
            "extreme_points": {str(m): flagged for m, flagged in self.extreme_points.items()},
            "one_step_mse": self.one_step_mse,
            "cut_points": self.cut_points,
        }
        if self.bayes_factor is not None:
            result["two_log_bf"] = self.bayes_factor.two_log_bf
            result["kass_raftery_label"] = self.bayes_factor.label.value
            result["favoured"] = self.bayes_factor.favoured
        return result


def compare_models(
    specs: Mapping[str, ModelSpec],
    data: SeriesData,
    hyper: PriorHyper,
    config: HmcConfig,
    holdouts: Sequence[int] = (),
    forecast_cuts: int = 0,
    chains: int = 1,
    regime: str = "full",
    max_workers: Optional[int] = None,
) -> ComparisonReport:
    """
    Fit every model and score it in-sample and out-of-sample.

    Args:
        specs: Model name -> specification (first two feed the Bayes factor)
        data: Series to compare on
        hyper: Prior hyperparameters
        config: Sampler configuration shared by all fits
        holdouts: Holdout sizes m for the predictive log-likelihood
        forecast_cuts: Number of one-step forecast origins (0 skips forecasting)
        chains: Chains per fit
        regime: Label recorded in the report
        max_workers: Cap on parallel fits

    Raises:
        InvalidArgumentError: On an empty model set or a holdout outside (0, n)
    """
    if not specs:
        raise InvalidArgumentError("Nothing to compare")
    n = data.n
    for m in holdouts:
        if not 0 < m < n:
            raise InvalidArgumentError(f"Holdout size must be in (0, {n}), got {m}")
    names = list(specs)
    cuts = forecast_cut_points(n, forecast_cuts, config.seed) if forecast_cuts else []

    jobs: list[FitJob] = []
    keys: list[tuple[str, str, int]] = []
    for name, spec in specs.items():
        jobs.append((spec, data, hyper, config, chains, n))
        keys.append((name, "full", n))
        for m in holdouts:
            jobs.append((spec, data.head(n - m), hyper, config, chains, n))
            keys.append((name, "holdout", m))
        for cut in cuts:
            jobs.append((spec, data.head(cut - 1), hyper, replace(config, seed=config.seed + cut), chains, cut))
            keys.append((name, "cut", cut))
    logger.info("Comparing %s on %s regime (n=%d): %d fits", ", ".join(names), regime, n, len(jobs))
    fits = dict(zip(keys, map_parallel(_fit, jobs, max_workers)))

    report = ComparisonReport(models=names, regime=regime, n=n, cut_points=cuts)
    for name, spec in specs.items():
        report.log_evidence[name] = log_marginal_harmonic(fits[(name, "full", n)], spec, data)
        for m in holdouts:
            score = predictive_score(spec, data, m, fits[(name, "holdout", m)])
            report.predictive.setdefault(m, {})[name] = score.value
            report.extreme_points.setdefault(m, {})[name] = list(score.extreme_points)
        if cuts:
            report.one_step_mse[name] = float(np.mean([
                one_step_forecast_mse(spec, data.head(cut), fits[(name, "cut", cut)]) for cut in cuts
            ]))
    if len(names) >= 2:
        first, second = names[0], names[1]
        report.bayes_factor = bayes_factor(
            first, report.log_evidence[first].log_evidence,
            second, report.log_evidence[second].log_evidence,
        )
    return report


@dataclass(frozen=True)
class ForecastStudy:
    """One-step forecast MSE of one model averaged over seeded cut points"""
    model: str
    cut_points: list[int]
    errors: list[float]

    @property
    def mean_mse(self) -> float:
        return float(np.mean(self.errors))


def forecast_study(
    name: str,
    spec: ModelSpec,
    data: SeriesData,
    hyper: PriorHyper,
    config: HmcConfig,
    cuts: int = DEFAULT_FORECAST_CUTS,
    chains: int = 1,
    max_workers: Optional[int] = None,
) -> ForecastStudy:
    """Refit on every prefix ending before a cut point and score the one-step forecast."""
    points = forecast_cut_points(data.n, cuts, config.seed)
    jobs: list[FitJob] = [
        (spec, data.head(cut - 1), hyper, replace(config, seed=config.seed + cut), chains, cut) for cut in points
    ]
    fits = map_parallel(_fit, jobs, max_workers)
    errors = [one_step_forecast_mse(spec, data.head(cut), fit) for cut, fit in zip(points, fits)]
    logger.info("%s one-step forecast MSE over %d cuts: %.6g", name, len(points), float(np.mean(errors)))
    return ForecastStudy(model=name, cut_points=points, errors=errors)
