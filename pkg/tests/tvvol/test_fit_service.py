"""Tests for fit orchestration and fit-directory summaries."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from src.tvvol.models.common import InvalidArgumentError
from src.tvvol.models.series import SeriesData
from src.tvvol.services import data_io
from src.tvvol.services.fit_service import (
    CONFIG_FILE,
    CURVES_FILE,
    DRAWS_FILE,
    METRICS_FILE,
    SERIES_FILE,
    VARIANCES_FILE,
    FitMethod,
    read_metrics,
    run_fit,
    summarize_fits,
    write_fit,
)

SHORT_HMC = {
    "leapfrog_steps": 5, "initial_step_size": 0.01, "total_iters": 160,
    "burn_in": 40, "adapt_window": 20, "seed": 7,
}


def garch_config(n: int, **hmc: object) -> data_io.RunConfig:
    return data_io.build_run_config(None, {"model": {"kind": "garch", "knots": 2}, "hmc": {**SHORT_HMC, **hmc}}, n)


@pytest.mark.unit
def test_fit_method_parse() -> None:
    assert FitMethod.parse(" Kernel ") is FitMethod.KERNEL
    with pytest.raises(InvalidArgumentError):
        FitMethod.parse("mle")


@pytest.mark.unit
def test_constant_fit(garch_series: SeriesData, tmp_path: Path) -> None:
    result = run_fit("constant", garch_config(garch_series.n), garch_series)

    assert result.samples is None
    assert result.variances.shape == (garch_series.n,)
    np.testing.assert_array_equal(result.summary.lower, result.summary.mean)
    assert result.metrics["method"] == "constant"
    assert result.metrics["model"] == "tvGARCH(1,1)"
    assert result.metrics["amse"] > 0.0
    assert set(result.metrics["estimate"]) == {"mu", "a", "b", "sigma0_sq"}

    out = write_fit(result, tmp_path / "constant")
    assert not (out / DRAWS_FILE).exists()
    assert read_metrics(out)["n"] == garch_series.n


@pytest.mark.integration
def test_kernel_fit_with_fixed_bandwidth(garch_series: SeriesData) -> None:
    config = data_io.build_run_config(None, {"model": {"kind": "arch", "knots": 2}, "kernel": {"bandwidth": 0.2}}, garch_series.n)
    result = run_fit(FitMethod.KERNEL, config, garch_series, max_workers=1)

    assert result.metrics["bandwidth"] == 0.2
    assert result.summary.names == ["mu", "a1"]
    assert (result.variances > 0.0).all()
    assert result.metrics["failed_points"] >= 0


@pytest.mark.integration
def test_bayes_fit_writes_every_output(garch_series: SeriesData, tmp_path: Path) -> None:
    result = run_fit("bayes", garch_config(garch_series.n, chains=2), garch_series, max_workers=1)
    out = write_fit(result, tmp_path / "bayes", draws_csv=True)

    for name in (CONFIG_FILE, SERIES_FILE, CURVES_FILE, VARIANCES_FILE, METRICS_FILE, DRAWS_FILE):
        assert (out / name).is_file()
    assert (out / "draws.csv").is_file()
    metrics = json.loads((out / METRICS_FILE).read_text(encoding="utf-8"))
    assert metrics["draws"] == 2 * 120
    assert metrics["chains"] == 2
    assert len(metrics["chain_accept_rates"]) == 2
    assert set(metrics["trace_trend_pvalue"]) == {"mu", "a1", "b1"}
    assert data_io.load_series(out / SERIES_FILE).meta["scenario"] == "garch11"


@pytest.mark.integration
def test_summarize_fits_reports_coverage(garch_series: SeriesData, tmp_path: Path) -> None:
    bayes_dir = write_fit(run_fit("bayes", garch_config(garch_series.n), garch_series, max_workers=1), tmp_path / "b")
    constant_dir = write_fit(run_fit("constant", garch_config(garch_series.n), garch_series), tmp_path / "c")

    report = summarize_fits([bayes_dir, constant_dir], level=0.9)
    runs = report["runs"]

    assert report["level"] == 0.9
    coverage = runs[str(bayes_dir)]["coverage"]
    assert set(coverage) == {"mu", "a1", "b1"}
    assert all(0.0 <= value <= 1.0 for value in coverage.values())
    assert "coverage" not in runs[str(constant_dir)]
    assert report["amse_star"] == {
        "bayes/tvGARCH(1,1)": pytest.approx(math.log(runs[str(bayes_dir)]["amse"])),
        "constant/tvGARCH(1,1)": pytest.approx(math.log(runs[str(constant_dir)]["amse"])),
    }


@pytest.mark.unit
def test_summarize_fits_groups_amse_star_by_method_and_model(tmp_path: Path) -> None:
    fits = [
        ("bayes", "tvGARCH(1,1)", math.e),
        ("bayes", "tvGARCH(1,1)", math.e ** 3),
        ("kernel", "tvGARCH(1,1)", 1.0),
        ("bayes", "tviGARCH(1,1)", math.e ** 2),
    ]
    fit_dirs: list[Path] = []
    for index, (method, model, value) in enumerate(fits):
        fit_dir = tmp_path / f"fit{index}"
        fit_dir.mkdir()
        metrics = {"method": method, "model": model, "amse": value, "n": 200, "series_meta": {}}
        (fit_dir / METRICS_FILE).write_text(json.dumps(metrics), encoding="utf-8")
        fit_dirs.append(fit_dir)

    report = summarize_fits(fit_dirs)

    assert report["amse_star"] == {
        "bayes/tvGARCH(1,1)": pytest.approx(2.0),
        "bayes/tviGARCH(1,1)": pytest.approx(2.0),
        "kernel/tvGARCH(1,1)": pytest.approx(0.0),
    }
    assert report["group_sizes"] == {"bayes/tvGARCH(1,1)": 2, "bayes/tviGARCH(1,1)": 1, "kernel/tvGARCH(1,1)": 1}
    assert all("coverage" not in entry for entry in report["runs"].values())


@pytest.mark.unit
def test_summarize_fits_argument_checks(tmp_path: Path) -> None:
    with pytest.raises(InvalidArgumentError):
        summarize_fits([])
    with pytest.raises(InvalidArgumentError):
        summarize_fits([tmp_path])
