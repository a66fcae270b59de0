"""
Fit orchestration: run one estimation method on a series and write its outputs.

A fit directory holds config.yaml (effective configuration), series.csv,
curves.csv, variances.csv, metrics.json and, for Bayesian fits, draws.npz.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from src.tvvol.models.common import InvalidArgumentError
from src.tvvol.models.series import SeriesData
from src.tvvol.models.volatility import variance_recursion
from . import data_io
from .chain_pool import run_chains
from .hmc_sampler import PosteriorSamples
from .inference_summaries import (
    CurveSummary,
    amse,
    amse_star,
    chain_diagnostics,
    fitted_variances,
    summarize_curves,
)
from .kernel_baseline import estimate_constant, kernel_fit, select_bandwidth
from .scenario_factory import ScenarioFactory

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.yaml"
SERIES_FILE = "series.csv"
CURVES_FILE = "curves.csv"
VARIANCES_FILE = "variances.csv"
METRICS_FILE = "metrics.json"
DRAWS_FILE = "draws.npz"


class FitMethod(Enum):
    BAYES = "bayes"
    KERNEL = "kernel"
    CONSTANT = "constant"

    @classmethod
    def parse(cls, name: str) -> "FitMethod":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise InvalidArgumentError(f"Unknown fit method: {name!r} (choose from bayes, kernel, constant)")


@dataclass
class FitResult:
    """
    Outcome of one fit.

    Point estimates (kernel, constant) carry bands equal to the estimate.
    """
    method: FitMethod
    config: data_io.RunConfig
    series: SeriesData
    summary: CurveSummary
    variances: NDArray[np.float64]
    metrics: dict[str, Any] = field(default_factory=dict)
    samples: Optional[PosteriorSamples] = None


def _point_summary(curves_grid: NDArray[np.float64], names: list[str], stacked: NDArray[np.float64], p: int) -> CurveSummary:
    return CurveSummary(grid=curves_grid, names=names, mean=stacked, lower=stacked, upper=stacked, p=p)


def _base_metrics(method: FitMethod, config: data_io.RunConfig, series: SeriesData, variances: NDArray[np.float64]) -> dict[str, Any]:
    spec = config.model
    return {
        "method": method.value,
        "model": spec.describe(),
        "kind": spec.kind.value,
        "n": series.n,
        "knots": config.knots,
        "basis_sizes": [spec.k1, spec.k2, spec.k3],
        "seed": config.hmc.seed,
        "amse": amse(series, variances, spec.likelihood_start),
        "series_meta": dict(series.meta),
    }


def fit_bayes(config: data_io.RunConfig, series: SeriesData, max_workers: Optional[int] = None) -> FitResult:
    """Posterior sampling with pooled chains, summarized on the series grid."""
    spec = config.model
    chains = run_chains(spec, series, config.hyper, config.hmc, config.chains, max_workers=max_workers)
    samples = PosteriorSamples.pooled(chains)
    summary = summarize_curves(spec, samples, series.n)
    variances = fitted_variances(spec, summary, series)
    metrics = _base_metrics(FitMethod.BAYES, config, series, variances)
    metrics.update(chain_diagnostics(samples))
    metrics["chain_accept_rates"] = [chain.accept_rate for chain in chains]
    metrics["chain_seeds"] = list(samples.chain_seeds)
    return FitResult(FitMethod.BAYES, config, series, summary, variances, metrics, samples)


def fit_kernel(config: data_io.RunConfig, series: SeriesData, max_workers: Optional[int] = None) -> FitResult:
    """Kernel local likelihood; the bandwidth is cross-validated unless configured."""
    spec = config.model
    warm = estimate_constant(spec, series)
    bandwidth = config.bandwidth
    if bandwidth is None:
        bandwidth = select_bandwidth(spec, series, config.candidates, config.kernel)
        logger.info("Selected bandwidth %.3f for %s", bandwidth, spec.describe())
    fit = kernel_fit(spec, series, bandwidth, kernel=config.kernel, warm_start=warm, max_workers=max_workers or 1)
    curves = fit.on_grid(series.n)
    variances = variance_recursion(spec, curves, series, fit.initial_variance() if spec.has_sigma0 else None)
    summary = _point_summary(curves.grid, spec.coefficient_names, curves.stacked(), spec.p)
    metrics = _base_metrics(FitMethod.KERNEL, config, series, variances)
    metrics.update({"bandwidth": bandwidth, "kernel": fit.kernel.value, "failed_points": fit.num_failed})
    return FitResult(FitMethod.KERNEL, config, series, summary, variances, metrics)


def fit_constant(config: data_io.RunConfig, series: SeriesData) -> FitResult:
    spec = config.model
    estimate = estimate_constant(spec, series)
    curves = estimate.curves(series.n)
    variances = estimate.fitted_variances(series)
    summary = _point_summary(curves.grid, spec.coefficient_names, curves.stacked(), spec.p)
    metrics = _base_metrics(FitMethod.CONSTANT, config, series, variances)
    params = estimate.params
    metrics["estimate"] = {"mu": params.mu, "a": list(params.a), "b": list(params.b), "sigma0_sq": params.sigma0_sq}
    metrics["neg_log_likelihood"] = estimate.neg_log_likelihood
    return FitResult(FitMethod.CONSTANT, config, series, summary, variances, metrics)


def run_fit(
    method: Union[FitMethod, str],
    config: data_io.RunConfig,
    series: SeriesData,
    max_workers: Optional[int] = None,
) -> FitResult:
    method = FitMethod.parse(method) if isinstance(method, str) else method
    logger.info("Fitting %s by %s on n=%d", config.model.describe(), method.value, series.n)
    if method is FitMethod.BAYES:
        return fit_bayes(config, series, max_workers)
    if method is FitMethod.KERNEL:
        return fit_kernel(config, series, max_workers)
    return fit_constant(config, series)


def write_fit(result: FitResult, out_dir: Union[str, Path], draws_csv: bool = False) -> Path:
    """Write every output of a fit into out_dir (created if needed)."""
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    data_io.write_config(result.config, target / CONFIG_FILE)
    data_io.write_series_csv(result.series, target / SERIES_FILE)
    data_io.write_curves_csv(result.summary, target / CURVES_FILE)
    data_io.write_variances_csv(result.variances, target / VARIANCES_FILE)
    if result.samples is not None:
        data_io.write_draws(result.samples, target / DRAWS_FILE, as_csv=draws_csv)
    data_io.write_json(result.metrics, target / METRICS_FILE)
    logger.info("Wrote %s fit to %s (AMSE %.6g)", result.method.value, target, result.metrics["amse"])
    return target


def read_metrics(fit_dir: Union[str, Path]) -> dict[str, Any]:
    path = Path(fit_dir) / METRICS_FILE
    if not path.is_file():
        raise InvalidArgumentError(f"{fit_dir} is not a fit directory (no {METRICS_FILE})")
    metrics: dict[str, Any] = json.loads(path.read_text(encoding="utf-8"))
    return metrics


def summarize_fits(fit_dirs: Sequence[Union[str, Path]], level: float = 0.95) -> dict[str, Any]:
    """
    Per-run AMSE, AMSE* per (method, model) group and, for simulated series,
    band coverage of the truth.

    Bayesian fits are re-summarized at the requested band level.
    """
    if not fit_dirs:
        raise InvalidArgumentError("No fit directories given")
    runs: dict[str, Any] = {}
    for fit_dir in fit_dirs:
        metrics = read_metrics(fit_dir)
        entry: dict[str, Any] = {"method": metrics["method"], "model": metrics["model"], "amse": metrics["amse"]}
        draws_path = Path(fit_dir) / DRAWS_FILE
        meta = metrics.get("series_meta", {})
        same_length = meta.get("n") == str(metrics["n"]) and "last_n" not in meta
        if draws_path.is_file() and same_length and meta.get("scenario") in ScenarioFactory.TEMPLATES:
            samples = data_io.load_draws(draws_path)
            n = int(metrics["n"])
            summary = summarize_curves(samples.spec, samples, n, level)
            scenario = ScenarioFactory.create(
                meta["scenario"], n, int(meta["seed"]), zero_history=meta.get("initial") == "zero",
            )
            if scenario.spec.kind is samples.spec.kind and (scenario.spec.p, scenario.spec.q) == (samples.spec.p, samples.spec.q):
                entry["coverage"] = summary.coverage(scenario.true_curves(n))
        runs[str(fit_dir)] = entry
    report: dict[str, Any] = {"runs": runs, "level": level}
    groups: dict[str, list[float]] = {}
    for entry in runs.values():
        groups.setdefault(f"{entry['method']}/{entry['model']}", []).append(entry["amse"])
    report["amse_star"] = {group: amse_star(values) for group, values in sorted(groups.items())}
    report["group_sizes"] = {group: len(values) for group, values in sorted(groups.items())}
    return report
