"""
Pytest configuration and shared fixtures.
"""
import os
import sys
from pathlib import Path

import numpy as np
import pytest

from src.tvvol.models.likelihood import PriorHyper
from src.tvvol.models.sampling import HmcConfig
from src.tvvol.models.series import SeriesData, SeriesSource
from src.tvvol.models.volatility import ModelKind, ModelSpec
from src.tvvol.services.scenario_factory import ScenarioFactory
from src.tvvol.services.simulator import simulate


def pytest_configure(config: pytest.Config) -> None:
    project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
    if project_root not in sys.path:
        sys.path.insert(0, project_root)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def white_noise(rng: np.random.Generator) -> SeriesData:
    """Two hundred standard normal returns."""
    return SeriesData(values=rng.standard_normal(200), source=SeriesSource.RETURNS)


@pytest.fixture
def arch_spec() -> ModelSpec:
    return ModelSpec.with_knots(ModelKind.TV_ARCH, p=1, q=0, interior_knots=2)


@pytest.fixture
def garch_spec() -> ModelSpec:
    return ModelSpec.with_knots(ModelKind.TV_GARCH, p=1, q=1, interior_knots=2)


@pytest.fixture
def igarch_spec() -> ModelSpec:
    return ModelSpec.with_knots(ModelKind.TV_IGARCH, p=1, q=1, interior_knots=2)


@pytest.fixture
def hyper() -> PriorHyper:
    return PriorHyper()


@pytest.fixture
def short_hmc() -> HmcConfig:
    """A short chain: enough draws for summaries, cheap enough for unit tests."""
    return HmcConfig(
        leapfrog_steps=5,
        initial_step_size=0.01,
        total_iters=160,
        burn_in=40,
        adapt_window=20,
        seed=7,
    )


@pytest.fixture
def garch_series() -> SeriesData:
    """Three hundred returns simulated from the tvGARCH(1,1) scenario."""
    return simulate(ScenarioFactory.create("garch11", 300, seed=3))


@pytest.fixture
def config_dir(tmp_path: Path) -> Path:
    directory = tmp_path / "configs"
    directory.mkdir()
    return directory
