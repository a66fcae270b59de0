"""
Parallel execution of independent chains.

Chains share read-only data and configuration; each gets its own seed from a
SeedSequence spawned off the configured seed. Worker processes are capped by
the TVVOL_THREADS environment variable.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Callable, Optional, Sequence, TypeVar, Union

import numpy as np
from numpy.typing import ArrayLike

from src.tvvol.models.common import InvalidArgumentError
from src.tvvol.models.likelihood import PriorHyper
from src.tvvol.models.sampling import HmcConfig
from src.tvvol.models.series import SeriesData
from src.tvvol.models.volatility import ModelSpec, ParamVector
from .hmc_sampler import PosteriorSamples, run_chain

logger = logging.getLogger(__name__)

THREADS_ENV = "TVVOL_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def worker_limit() -> int:
    """Maximum number of worker processes (TVVOL_THREADS, else the CPU count)."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            logger.warning("Ignoring non-integer %s=%r", THREADS_ENV, raw)
    return os.cpu_count() or 1


def chain_seeds(seed: int, chains: int) -> list[int]:
    """Per-chain seeds; a single chain keeps the configured seed."""
    if chains < 1:
        raise InvalidArgumentError(f"Number of chains must be >= 1, got {chains}")
    if chains == 1:
        return [seed]
    children = np.random.SeedSequence(seed).spawn(chains)
    return [int(child.generate_state(1, dtype=np.uint32)[0]) for child in children]


def map_parallel(function: Callable[[T], R], items: Sequence[T], max_workers: Optional[int] = None) -> list[R]:
    """
    Apply a picklable function to every item, in order.

    Runs in-process when only one worker is available or needed.
    """
    workers = min(len(items), max_workers or worker_limit())
    if workers <= 1:
        return [function(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(function, items))


def _run_one(job: tuple[ModelSpec, SeriesData, PriorHyper, HmcConfig, Optional[ParamVector], Optional[int]]) -> PosteriorSamples:
    spec, data, hyper, config, init, horizon = job
    return run_chain(spec, data, hyper, config, init, horizon)


def run_chains(
    spec: ModelSpec,
    data: Union[SeriesData, ArrayLike],
    hyper: PriorHyper,
    config: HmcConfig,
    chains: int = 1,
    init: Optional[ParamVector] = None,
    horizon: Optional[int] = None,
    max_workers: Optional[int] = None,
) -> list[PosteriorSamples]:
    """
    Run independent seeded chains, concurrently when workers allow.

    Returns:
        One PosteriorSamples per chain, in seed order
    """
    series = data if isinstance(data, SeriesData) else SeriesData(values=np.asarray(data, dtype=float))
    seeds = chain_seeds(config.seed, chains)
    jobs = [(spec, series, hyper, replace(config, seed=seed), init, horizon) for seed in seeds]
    if chains > 1:
        logger.info("Running %d chains of %s with seeds %s", chains, spec.describe(), seeds)
    return map_parallel(_run_one, jobs, max_workers)
