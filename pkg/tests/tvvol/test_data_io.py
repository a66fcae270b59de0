"""Tests for CSV ingestion, run-config assembly and JSON output."""

import json
import math
import zipfile
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
import yaml

from src.tvvol.models.common import DataFormatError, InvalidArgumentError, NumericalError, SchemaError
from src.tvvol.models.sampling import BoundaryMode
from src.tvvol.models.series import SeriesData, SeriesSource
from src.tvvol.models.volatility import ModelKind, ModelSpec, ParamLayout
from src.tvvol.services.data_io import (
    NPZ_TIMESTAMP,
    build_run_config,
    dump_json,
    is_finite_tree,
    load_draws,
    load_prices,
    load_series,
    meta_path,
    require_seed,
    resolve_knots,
    write_config,
    write_draws,
    write_json,
    write_series_csv,
)
from src.tvvol.services.hmc_sampler import PosteriorSamples
from src.tvvol.services.kernel_baseline import KernelKind


def write_prices(path: Path, prices: list[float]) -> Path:
    dates = pd.date_range("2020-01-01", periods=len(prices), freq="D").strftime("%Y-%m-%d")
    pd.DataFrame({"date": dates, "close": prices}).to_csv(path, index=False)
    return path


@pytest.fixture
def prices() -> list[float]:
    return [100.0 * math.exp(0.01 * math.sin(i)) for i in range(40)]


@pytest.mark.unit
def test_load_prices_gives_scaled_log_returns(tmp_path: Path, prices: list[float]) -> None:
    path = write_prices(tmp_path / "prices.csv", prices)
    series = load_prices(path)

    expected = 100.0 * np.diff(np.log(prices))
    assert series.n == 39
    np.testing.assert_allclose(series.values, expected, rtol=1e-12)
    assert series.source is SeriesSource.RAW_PRICES
    assert series.scale == 100.0
    assert series.meta["date_range"] == "2020-01-02..2020-02-09"


@pytest.mark.unit
def test_load_prices_last_n(tmp_path: Path, prices: list[float]) -> None:
    path = write_prices(tmp_path / "prices.csv", prices)
    series = load_prices(path, last_n=25, scale=1.0)

    np.testing.assert_allclose(series.values, np.diff(np.log(prices))[-25:], rtol=1e-12)
    assert series.meta["last_n"] == "25"
    with pytest.raises(InvalidArgumentError):
        load_prices(path, last_n=100)


@pytest.mark.unit
@pytest.mark.parametrize("last_n", [20, 27, 38, 39])
def test_last_n_keeps_the_same_suffix(tmp_path: Path, prices: list[float], garch_series: SeriesData, last_n: int) -> None:
    price_path = write_prices(tmp_path / "prices.csv", prices)
    full = load_prices(price_path).values
    np.testing.assert_array_equal(load_prices(price_path, last_n=last_n).values, full[-last_n:])

    return_path = write_series_csv(garch_series, tmp_path / "returns.csv")
    shorter = load_series(return_path, last_n=last_n).values
    longer = load_series(return_path, last_n=last_n + 50).values
    np.testing.assert_array_equal(shorter, garch_series.values[-last_n:])
    np.testing.assert_array_equal(longer[-last_n:], shorter)


@pytest.mark.unit
def test_load_prices_names_the_bad_row(tmp_path: Path, prices: list[float]) -> None:
    nonpositive = list(prices)
    nonpositive[4] = 0.0
    with pytest.raises(DataFormatError, match="row 5"):
        load_prices(write_prices(tmp_path / "zero.csv", nonpositive))

    frame = pd.DataFrame({"close": [str(p) for p in prices]})
    frame.loc[7, "close"] = "n/a"
    frame.to_csv(tmp_path / "text.csv", index=False)
    with pytest.raises(DataFormatError, match="row 8"):
        load_prices(tmp_path / "text.csv")


@pytest.mark.unit
def test_missing_column_is_schema_error(tmp_path: Path, prices: list[float]) -> None:
    path = write_prices(tmp_path / "prices.csv", prices)
    with pytest.raises(SchemaError):
        load_prices(path, column="adj_close")


@pytest.mark.unit
def test_series_csv_reads_back_exactly(tmp_path: Path, white_noise: SeriesData) -> None:
    tagged = SeriesData(values=white_noise.values, meta={"scenario": "garch11", "seed": "3"})
    path = write_series_csv(tagged, tmp_path / "out" / "series.csv")
    loaded = load_series(path)

    np.testing.assert_array_equal(loaded.values, tagged.values)
    assert meta_path(path).name == "series.meta.json"
    assert loaded.source is SeriesSource.SIMULATED
    assert loaded.meta["scenario"] == "garch11"
    assert loaded.scale == 1.0


@pytest.mark.unit
def test_load_series_detects_price_layout(tmp_path: Path, prices: list[float]) -> None:
    series = load_series(write_prices(tmp_path / "prices.csv", prices))
    assert series.source is SeriesSource.RAW_PRICES


@pytest.mark.unit
def test_resolve_knots() -> None:
    assert resolve_knots("auto", 500) == 5
    assert resolve_knots(None, 1000) == 6
    assert resolve_knots("3", 500) == 3
    with pytest.raises(InvalidArgumentError):
        resolve_knots(-1, 200)
    with pytest.raises(InvalidArgumentError):
        resolve_knots("many", 200)


@pytest.mark.unit
def test_build_run_config_precedence() -> None:
    file_config = {
        "model": {"kind": "igarch", "knots": 2},
        "hmc": {"total_iters": 1500, "burn_in": 1000, "chains": 2, "boundary": "reflect"},
        "hyper": {"c1": 10.0},
        "data": {"last_n": 500},
    }
    overrides = {
        "model": {"knots": None, "p": 1},
        "hmc": {"burn_in": 500, "seed": 9},
        "hyper": {"d1": None},
    }
    config = build_run_config(file_config, overrides, n=800)

    assert config.model == ModelSpec(ModelKind.TV_IGARCH, p=1, q=1, k1=6, k2=6, k3=6)
    assert config.hmc.total_iters == 1500
    assert config.hmc.burn_in == 500
    assert config.hmc.seed == 9
    assert config.hmc.boundary is BoundaryMode.REFLECT
    assert config.chains == 2
    assert config.hyper.c1 == 10.0 and config.hyper.d1 == 2.0
    assert config.last_n == 500
    assert config.knots == 2


@pytest.mark.unit
def test_build_run_config_defaults() -> None:
    config = build_run_config(None, {"model": {"kind": "arch"}}, n=200)

    assert config.model.kind is ModelKind.TV_ARCH
    assert config.model.q == 0
    assert config.model.k1 == 8
    assert config.knots == "auto"
    assert config.scale == 100.0


@pytest.mark.unit
def test_build_run_config_kernel_kind() -> None:
    assert build_run_config(None, None, n=200).kernel is KernelKind.EPANECHNIKOV
    config = build_run_config({"kernel": {"kind": "epanechnikov"}}, {"kernel": {"kind": "uniform", "bandwidth": None}}, n=200)
    assert config.kernel is KernelKind.UNIFORM
    assert config.bandwidth is None
    assert config.to_dto()["kernel"]["kind"] == "uniform"
    with pytest.raises(InvalidArgumentError):
        build_run_config({"kernel": {"kind": "gaussian"}}, None, n=200)


@pytest.mark.unit
@pytest.mark.parametrize(
    "file_config",
    [{"hmc": {"leapfrog": 10}}, {"hyper": {"c3": 1.0}}, {"data": {"window": 3}}, {"kernel": {"width": 0.1}}],
)
def test_build_run_config_rejects_unknown_keys(file_config: dict[str, dict[str, object]]) -> None:
    with pytest.raises(SchemaError):
        build_run_config(file_config, None, n=200)


@pytest.mark.unit
def test_write_config_echoes_effective_settings(tmp_path: Path) -> None:
    config = build_run_config({"hmc": {"seed": 4, "chains": 3}}, None, n=200)
    echoed = yaml.safe_load(write_config(config, tmp_path / "config.yaml").read_text(encoding="utf-8"))

    assert echoed["model"]["kind"] == "garch"
    assert echoed["hmc"]["seed"] == 4
    assert echoed["hmc"]["chains"] == 3
    assert echoed["hmc"]["boundary"] == "clamp"
    assert build_run_config(echoed, None, n=200) == config


@pytest.mark.unit
def test_require_seed() -> None:
    assert require_seed(5, interactive=False) == 5
    assert require_seed(None, interactive=True) == 0
    with pytest.raises(InvalidArgumentError):
        require_seed(None, interactive=False)


@pytest.mark.unit
def test_dump_json_is_sorted_and_plain(tmp_path: Path) -> None:
    payload = {"b": np.float64(1.5), "a": np.arange(3), "kind": ModelKind.TV_ARCH}
    text = dump_json(payload)

    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [0, 1, 2], "b": 1.5, "kind": "arch"}
    assert json.loads(write_json(payload, tmp_path / "x" / "out.json").read_text(encoding="utf-8"))["b"] == 1.5


@pytest.mark.unit
def test_non_finite_output_is_numerical_error() -> None:
    assert is_finite_tree({"a": [1.0, {"b": 2}], "c": "text"})
    assert not is_finite_tree({"a": [1.0, {"b": np.inf}]})
    with pytest.raises(NumericalError):
        dump_json({"value": float("nan")})


@pytest.mark.unit
def test_draws_archive(tmp_path: Path, garch_spec: ModelSpec, rng: np.random.Generator) -> None:
    dimension = ParamLayout(garch_spec).dimension
    samples = PosteriorSamples(
        garch_spec, rng.uniform(0.1, 0.9, (6, dimension)), np.array([0.7, 0.65]), np.array([0.01, 0.011]),
        seed=3, horizon=250, accept_rate=0.66, chain_seeds=(3, 4),
    )
    path = write_draws(samples, tmp_path / "draws.npz", as_csv=True)
    loaded = load_draws(path)

    assert loaded.spec == garch_spec
    np.testing.assert_array_equal(loaded.draws, samples.draws)
    assert (loaded.horizon, loaded.chain_seeds) == (250, (3, 4))
    header = (tmp_path / "draws.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header.split(",") == ParamLayout(garch_spec).column_names()


@pytest.mark.unit
def test_draws_archive_bytes_are_reproducible(tmp_path: Path, garch_spec: ModelSpec, rng: np.random.Generator) -> None:
    dimension = ParamLayout(garch_spec).dimension
    samples = PosteriorSamples(
        garch_spec, rng.uniform(0.1, 0.9, (4, dimension)), np.array([0.7]), np.array([0.01]),
        seed=5, horizon=100, accept_rate=0.7,
    )
    first = write_draws(samples, tmp_path / "first.npz")
    second = write_draws(samples, tmp_path / "second.npz")

    assert first.read_bytes() == second.read_bytes()
    with zipfile.ZipFile(first) as archive:
        assert {info.date_time for info in archive.infolist()} == {NPZ_TIMESTAMP}
        assert sorted(archive.namelist()) == [
            "accept_rate_trace.npy", "chain_seeds.npy", "draws.npy", "meta.npy", "step_size_trace.npy",
        ]
