"""Tests for seeding and parallel execution of chains."""

import os

import numpy as np
import pytest

from src.tvvol.models.common import InvalidArgumentError
from src.tvvol.models.likelihood import PriorHyper
from src.tvvol.models.sampling import HmcConfig
from src.tvvol.models.series import SeriesData
from src.tvvol.models.volatility import ModelSpec
from src.tvvol.services.chain_pool import THREADS_ENV, chain_seeds, map_parallel, run_chains, worker_limit


def _square(value: int) -> int:
    return value * value


@pytest.mark.unit
def test_single_chain_keeps_configured_seed() -> None:
    assert chain_seeds(42, 1) == [42]


@pytest.mark.unit
def test_spawned_seeds_are_distinct_and_reproducible() -> None:
    seeds = chain_seeds(42, 4)
    assert len(set(seeds)) == 4
    assert seeds == chain_seeds(42, 4)
    assert seeds != chain_seeds(43, 4)
    with pytest.raises(InvalidArgumentError):
        chain_seeds(0, 0)


@pytest.mark.unit
def test_worker_limit_reads_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv(THREADS_ENV, "3")
    assert worker_limit() == 3
    monkeypatch.setenv(THREADS_ENV, "0")
    assert worker_limit() == 1
    monkeypatch.setenv(THREADS_ENV, "many")
    assert worker_limit() == (os.cpu_count() or 1)


@pytest.mark.unit
def test_map_parallel_in_process_keeps_order() -> None:
    assert map_parallel(_square, [3, 1, 2], max_workers=1) == [9, 1, 4]
    assert map_parallel(_square, [], max_workers=4) == []


@pytest.mark.integration
def test_run_chains_uses_one_seed_per_chain(garch_spec: ModelSpec, white_noise: SeriesData, short_hmc: HmcConfig) -> None:
    chains = run_chains(garch_spec, white_noise, PriorHyper(), short_hmc, chains=2, max_workers=1)

    assert [chain.seed for chain in chains] == chain_seeds(short_hmc.seed, 2)
    assert not np.array_equal(chains[0].draws, chains[1].draws)
    assert all(len(chain) == short_hmc.num_draws for chain in chains)
