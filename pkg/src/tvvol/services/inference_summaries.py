"""
Posterior summaries of a fitted model.

Turns PosteriorSamples into posterior-mean curves with pointwise credible
bands, plug-in fitted variances, AMSE scores and the L2-deviation trace used
to eyeball mixing.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from scipy.stats import kendalltau

from src.tvvol.models.common import InvalidArgumentError
from src.tvvol.models.series import SeriesData, series_values
from src.tvvol.models.volatility import (
    BasisSet,
    CoefficientCurves,
    ModelKind,
    ModelSpec,
    ParamLayout,
    variance_recursion,
)
from .hmc_sampler import PosteriorSamples

logger = logging.getLogger(__name__)

DEFAULT_LEVEL = 0.95
TRACE_THIN = 2


def _row_softmax(logits: NDArray[np.float64]) -> NDArray[np.float64]:
    shifted = np.exp(logits - logits.max(axis=1, keepdims=True))
    return shifted / shifted.sum(axis=1, keepdims=True)


def curve_draws(
    samples: PosteriorSamples, n: Optional[int] = None
) -> dict[str, NDArray[np.float64]]:
    """
    Coefficient curves of every draw on the grid i/horizon, i = 1..n.

    Returns:
        Mapping from coefficient name to an array of shape (draws, n)
    """
    spec = samples.spec
    n = samples.horizon if n is None else n
    layout = ParamLayout(spec)
    draws = samples.draws
    count = len(samples)
    mu_design, a_design, b_design = BasisSet.from_spec(spec).designs(n, max(n, samples.horizon))

    weights = _row_softmax(draws[:, layout.delta])[:, 1:]
    theta = draws[:, layout.theta].reshape(count, spec.p, spec.k2)
    eta = draws[:, layout.eta].reshape(count, spec.free_b, spec.k3)

    curves: dict[str, NDArray[np.float64]] = {"mu": np.exp(draws[:, layout.beta]) @ mu_design.T}
    total = np.zeros((count, n))
    for k in range(spec.p):
        curve = weights[:, k, None] * (theta[:, k, :] @ a_design.T)
        curves[f"a{k + 1}"] = curve
        total += curve
    for j in range(spec.free_b):
        curve = weights[:, spec.p + j, None] * (eta[:, j, :] @ b_design.T)
        curves[f"b{j + 1}"] = curve
        total += curve
    if spec.kind is ModelKind.TV_IGARCH:
        curves[f"b{spec.q}"] = 1.0 - total
    return curves


@dataclass(frozen=True, eq=False)
class CurveSummary:
    """
    Pointwise posterior summary of every coefficient curve.

    Attributes:
        grid: Time points
        names: Coefficient names (mu, a1.., b1..)
        mean: Posterior means, shape (len(names), len(grid))
        lower: Lower band, same shape
        upper: Upper band, same shape
        level: Nominal band level
    """
    grid: NDArray[np.float64]
    names: list[str]
    mean: NDArray[np.float64]
    lower: NDArray[np.float64]
    upper: NDArray[np.float64]
    level: float = DEFAULT_LEVEL
    p: int = 1
    sigma0_sq: Optional[float] = None

    def mean_curves(self) -> CoefficientCurves:
        return CoefficientCurves.from_stacked(self.grid, self.mean, self.p)

    @property
    def level_tag(self) -> str:
        return f"{round(self.level * 100):d}"

    def to_frame(self) -> pd.DataFrame:
        """Long-format table with columns t, coef, mean, lower<level>, upper<level>."""
        frames = [
            pd.DataFrame({
                "t": self.grid,
                "coef": name,
                "mean": self.mean[row],
                f"lower{self.level_tag}": self.lower[row],
                f"upper{self.level_tag}": self.upper[row],
            })
            for row, name in enumerate(self.names)
        ]
        return pd.concat(frames, ignore_index=True)

    def coverage(self, truth: CoefficientCurves) -> dict[str, float]:
        """Fraction of grid points where each true curve lies inside the band."""
        stacked = truth.stacked()
        if stacked.shape != self.mean.shape:
            raise InvalidArgumentError(f"Truth has shape {stacked.shape}, summary {self.mean.shape}")
        inside = (stacked >= self.lower) & (stacked <= self.upper)
        return {name: float(inside[row].mean()) for row, name in enumerate(self.names)}


def summarize_curves(
    spec: ModelSpec,
    samples: PosteriorSamples,
    n: Optional[int] = None,
    level: float = DEFAULT_LEVEL,
) -> CurveSummary:
    """
    Posterior mean and pointwise nearest-rank band of every curve.

    Args:
        spec: Model specification (must match the samples)
        samples: Posterior draws
        n: Number of grid points (defaults to the fitting horizon)
        level: Nominal coverage of the band

    Raises:
        InvalidArgumentError: On empty samples or an invalid level
    """
    if len(samples) == 0:
        raise InvalidArgumentError("Cannot summarize an empty set of draws")
    if spec != samples.spec:
        raise InvalidArgumentError(f"Samples belong to {samples.spec.describe()}, not {spec.describe()}")
    if not 0.0 < level < 1.0:
        raise InvalidArgumentError(f"Band level must be in (0, 1), got {level}")
    curves = curve_draws(samples, n)
    names = spec.coefficient_names
    tail = (1.0 - level) / 2.0
    stacked = np.stack([curves[name] for name in names])  # (coefficients, draws, n)
    lower, upper = np.quantile(stacked, [tail, 1.0 - tail], axis=1, method="inverted_cdf")
    length = stacked.shape[2]
    horizon = max(length, samples.horizon)
    sigma0 = ParamLayout(spec).sigma0
    return CurveSummary(
        grid=np.arange(1, length + 1, dtype=float) / horizon,
        names=names,
        mean=stacked.mean(axis=1),
        lower=lower,
        upper=upper,
        level=level,
        p=spec.p,
        sigma0_sq=float(samples.draws[:, sigma0].mean()) if sigma0 is not None else None,
    )


def fitted_variances(
    spec: ModelSpec,
    source: Union[PosteriorSamples, CurveSummary, CoefficientCurves],
    data: Union[SeriesData, ArrayLike],
    sigma0_sq: Optional[float] = None,
) -> NDArray[np.float64]:
    """
    Plug-in conditional variances from posterior-mean (or given) curves.

    For samples and summaries the posterior-mean sigma0^2 is used unless
    sigma0_sq is passed.
    """
    values = series_values(data)
    if isinstance(source, PosteriorSamples):
        source = summarize_curves(spec, source, values.size)
    if isinstance(source, CurveSummary):
        sigma0_sq = source.sigma0_sq if sigma0_sq is None else sigma0_sq
        curves = source.mean_curves()
    else:
        curves = source
    if curves.n != values.size:
        raise InvalidArgumentError(f"Curves cover {curves.n} points but the series has {values.size}")
    return variance_recursion(spec, curves, values, sigma0_sq)


def amse(data: Union[SeriesData, ArrayLike], fitted: ArrayLike, start: int = 0) -> float:
    """
    Mean of (X_i^2 - sigma_i^2)^2 over positions start..n-1.

    Args:
        data: Returns
        fitted: Fitted variances, same length
        start: 0-based first scored position (p for tvARCH)
    """
    values = series_values(data)
    variances = np.asarray(fitted, dtype=float).reshape(-1)
    if variances.size != values.size:
        raise InvalidArgumentError(f"Fitted variances have length {variances.size}, data {values.size}")
    if not 0 <= start < values.size:
        raise InvalidArgumentError(f"AMSE start {start} outside the series")
    return float(np.mean((values[start:] ** 2 - variances[start:]) ** 2))


def amse_star(values: Sequence[float]) -> float:
    """
    Mean of log AMSE across replications.

    Raises:
        InvalidArgumentError: If any value is not positive
    """
    scores = np.asarray(list(values), dtype=float)
    if scores.size == 0:
        raise InvalidArgumentError("AMSE* needs at least one value")
    if np.any(~(scores > 0.0)):
        raise InvalidArgumentError(f"AMSE values must be positive, got {scores.tolist()}")
    return float(np.mean(np.log(scores)))


def l2_deviation_trace(
    samples: PosteriorSamples,
    spec: Optional[ModelSpec] = None,
    n: Optional[int] = None,
    thin: int = TRACE_THIN,
) -> dict[str, NDArray[np.float64]]:
    """
    Root-mean-square difference of each curve between successive draws.

    Pooled samples are split back into their equal-length chains and only
    draws of the same chain are differenced; the per-chain traces are
    concatenated in pool order and thinned by `thin`.

    Raises:
        InvalidArgumentError: With fewer than two draws per chain
    """
    chains = len(samples.chain_seeds)
    if len(samples) % chains or len(samples) // chains < 2:
        raise InvalidArgumentError(
            f"The L2-deviation trace needs at least two draws per chain, got {len(samples)} draws in {chains} chain(s)"
        )
    if spec is not None and spec != samples.spec:
        raise InvalidArgumentError(f"Samples belong to {samples.spec.describe()}, not {spec.describe()}")
    curves = curve_draws(samples, n)
    return {
        name: np.sqrt(np.mean(
            np.concatenate([np.diff(block, axis=0) for block in np.split(values, chains)]) ** 2, axis=1,
        ))[::thin]
        for name, values in curves.items()
    }


def trend_pvalue(trace: ArrayLike) -> float:
    """Mann-Kendall trend test p-value (1 when the trace is constant or too short)."""
    values = np.asarray(trace, dtype=float)
    if values.size < 3 or np.ptp(values) == 0.0:
        return 1.0
    result = kendalltau(np.arange(values.size), values)
    pvalue = float(result.pvalue)
    return 1.0 if math.isnan(pvalue) else pvalue


def chain_diagnostics(samples: PosteriorSamples, n: Optional[int] = None) -> dict[str, object]:
    """Acceptance, final step size and trend p-values of each curve's L2 trace (last half)."""
    diagnostics: dict[str, object] = {
        "accept_rate": float(samples.accept_rate),
        "final_step_size": samples.final_step_size,
        "draws": len(samples),
        "chains": len(samples.chain_seeds),
    }
    if len(samples) >= 2 * len(samples.chain_seeds):
        traces = l2_deviation_trace(samples, n=n)
        diagnostics["trace_trend_pvalue"] = {
            name: trend_pvalue(trace[trace.size // 2:]) for name, trace in traces.items()
        }
    return diagnostics
