"""
Hamiltonian Monte Carlo sampler.

This service runs one HMC chain over the flat coordinates of a model
posterior. It handles:
- leapfrog integration with identity mass matrix
- bounded coordinates (theta, eta) by clamping or reflection
- windowed step-size adaptation during burn-in, frozen afterwards
- conversion of retained positions into PosteriorSamples
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.tvvol.models.common import InitializationError, InvalidArgumentError, InvariantViolationError
from src.tvvol.models.likelihood import PosteriorTarget, PriorHyper
from src.tvvol.models.sampling import BoundaryMode, ChainStateMachine, HmcConfig, StepSizeController
from src.tvvol.models.series import SeriesData, series_values
from src.tvvol.models.volatility import ModelSpec, ParamLayout, ParamVector

logger = logging.getLogger(__name__)

PotentialFn = Callable[[NDArray[np.float64]], tuple[float, NDArray[np.float64]]]

# Sample variance used for initialisation never drops below this value.
VARIANCE_FLOOR = 1e-8
_MAX_REFLECTIONS = 100


@dataclass(frozen=True, eq=False)
class Trajectory:
    """End point of a leapfrog trajectory."""
    position: NDArray[np.float64]
    momentum: NDArray[np.float64]
    potential: float
    grad: NDArray[np.float64]

    @property
    def diverged(self) -> bool:
        return not math.isfinite(self.potential)


def reflect_into_unit_interval(
    position: NDArray[np.float64], momentum: NDArray[np.float64], mask: NDArray[np.bool_]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Mirror masked coordinates back into [0, 1], flipping their momentum per bounce."""
    position = position.copy()
    momentum = momentum.copy()
    for _ in range(_MAX_REFLECTIONS):
        below = mask & (position < 0.0)
        above = mask & (position > 1.0)
        if not (below.any() or above.any()):
            break
        position[below] = -position[below]
        position[above] = 2.0 - position[above]
        momentum[below | above] = -momentum[below | above]
    else:
        position[mask] = np.clip(position[mask], 0.0, 1.0)
    return position, momentum


def leapfrog(
    position: NDArray[np.float64],
    momentum: NDArray[np.float64],
    step_size: float,
    n_steps: int,
    potential: PotentialFn,
    start: Optional[tuple[float, NDArray[np.float64]]] = None,
    bounded: Optional[NDArray[np.bool_]] = None,
    boundary: BoundaryMode = BoundaryMode.NONE,
) -> Trajectory:
    """
    Integrate Hamiltonian dynamics with the leapfrog scheme.

    Args:
        position: Start position
        momentum: Start momentum
        step_size: Step size (0 leaves the state unchanged)
        n_steps: Number of full steps
        potential: Function returning (U, grad U)
        start: (U, grad U) at the start position, if already known
        bounded: Mask of coordinates restricted to [0, 1]
        boundary: REFLECT mirrors masked coordinates after each position update

    Returns:
        End state; potential is +inf if the trajectory diverged
    """
    value, grad = start if start is not None else potential(position)
    position = np.array(position, dtype=float, copy=True)
    momentum = np.array(momentum, dtype=float, copy=True) - 0.5 * step_size * grad
    reflect = boundary is BoundaryMode.REFLECT and bounded is not None and bounded.any()
    for step in range(n_steps):
        position = position + step_size * momentum
        if reflect:
            assert bounded is not None
            position, momentum = reflect_into_unit_interval(position, momentum, bounded)
        value, grad = potential(position)
        if not math.isfinite(value):
            return Trajectory(position, momentum, math.inf, grad)
        if step < n_steps - 1:
            momentum = momentum - step_size * grad
    momentum = momentum - 0.5 * step_size * grad
    return Trajectory(position, momentum, value, grad)


def hamiltonian(potential_value: float, momentum: NDArray[np.float64]) -> float:
    return potential_value + 0.5 * float(momentum @ momentum)


@dataclass
class HmcRun:
    """Raw output of a chain on flat coordinates."""
    positions: NDArray[np.float64]
    accept_rate_trace: list[float]
    step_size_trace: list[float]
    accept_rate: float
    final_step_size: float
    energy_errors: list[float] = field(default_factory=list)


def run_hmc(
    potential: PotentialFn,
    initial: NDArray[np.float64],
    config: HmcConfig,
    bounded: Optional[NDArray[np.bool_]] = None,
) -> HmcRun:
    """
    Run one HMC chain on an arbitrary potential.

    Args:
        potential: Function returning (U, grad U); +inf marks an invalid point
        initial: Start position
        config: Sampler configuration (seed included)
        bounded: Mask of coordinates restricted to [0, 1]

    Returns:
        Post-burn-in positions with acceptance and step-size traces

    Raises:
        InitializationError: If the potential is not finite at the start
    """
    rng = np.random.default_rng(config.seed)
    current = np.array(initial, dtype=float, copy=True)
    bounded = np.zeros(current.size, dtype=bool) if bounded is None else np.asarray(bounded, dtype=bool)
    current_value, current_grad = potential(current)
    if not math.isfinite(current_value) or not np.all(np.isfinite(current_grad)):
        raise InitializationError(
            f"Potential is not finite at the initial point (value={current_value}, "
            f"non-finite gradient entries={int(np.sum(~np.isfinite(current_grad)))})"
        )

    phase = ChainStateMachine()
    controller = StepSizeController(
        step_size=config.initial_step_size,
        window=config.adapt_window,
        target_low=config.target_accept_low,
        target_high=config.target_accept_high,
        factor=config.adapt_factor,
    )
    retained = np.empty((config.num_draws, current.size))
    energy_errors: list[float] = []
    accepted_after_burn_in = 0

    for iteration in range(config.total_iters):
        phase.advance(iteration, config.burn_in)
        if phase.retaining:
            controller.freeze()
        momentum = rng.standard_normal(current.size)
        start_energy = hamiltonian(current_value, momentum)
        trajectory = leapfrog(
            current, momentum, controller.step_size, config.leapfrog_steps, potential,
            start=(current_value, current_grad), bounded=bounded, boundary=config.boundary,
        )
        if config.boundary is BoundaryMode.CLAMP and not trajectory.diverged and bounded.any():
            trajectory = _clamp(trajectory, bounded, potential)

        accepted = False
        log_u = math.log1p(-rng.random())
        if not trajectory.diverged:
            energy_error = hamiltonian(trajectory.potential, trajectory.momentum) - start_energy
            if phase.retaining:
                energy_errors.append(energy_error)
            if log_u <= -energy_error:
                accepted = True
                current = trajectory.position
                current_value, current_grad = trajectory.potential, trajectory.grad
        controller.record(accepted)

        if phase.retaining:
            retained[iteration - config.burn_in] = current
            accepted_after_burn_in += int(accepted)

    phase.complete()
    return HmcRun(
        positions=retained,
        accept_rate_trace=controller.accept_rate_trace,
        step_size_trace=controller.step_size_trace,
        accept_rate=accepted_after_burn_in / config.num_draws,
        final_step_size=controller.step_size,
        energy_errors=energy_errors,
    )


def _clamp(trajectory: Trajectory, bounded: NDArray[np.bool_], potential: PotentialFn) -> Trajectory:
    """Map an out-of-range proposal to the nearest boundary; momentum is kept."""
    outside = bounded & ((trajectory.position < 0.0) | (trajectory.position > 1.0))
    if not outside.any():
        return trajectory
    position = trajectory.position.copy()
    position[outside] = np.clip(position[outside], 0.0, 1.0)
    value, grad = potential(position)
    return Trajectory(position, trajectory.momentum, value if math.isfinite(value) else math.inf, grad)


@dataclass(frozen=True, eq=False)
class PosteriorSamples:
    """
    Post-burn-in draws of one chain (or a pool of chains).

    Attributes:
        spec: Model the draws belong to
        draws: One row per draw in dump order (beta, theta, eta, delta, sigma0^2)
        accept_rate_trace: Acceptance rate of every adaptation window
        step_size_trace: Step size after every window
        seed: Seed of the chain
        horizon: Time horizon of the spline grid used during fitting
        accept_rate: Acceptance rate over retained iterations
        chain_seeds: Seeds of the pooled chains (just `seed` for a single chain)
    """
    spec: ModelSpec
    draws: NDArray[np.float64]
    accept_rate_trace: NDArray[np.float64]
    step_size_trace: NDArray[np.float64]
    seed: int
    horizon: int
    accept_rate: float = math.nan
    chain_seeds: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        draws = np.atleast_2d(np.asarray(self.draws, dtype=float))
        expected = ParamLayout(self.spec).dimension
        if draws.size and draws.shape[1] != expected:
            raise InvalidArgumentError(f"Draws have {draws.shape[1]} columns, {expected} expected")
        draws.setflags(write=False)
        object.__setattr__(self, "draws", draws)
        object.__setattr__(self, "accept_rate_trace", np.asarray(self.accept_rate_trace, dtype=float))
        object.__setattr__(self, "step_size_trace", np.asarray(self.step_size_trace, dtype=float))
        if not self.chain_seeds:
            object.__setattr__(self, "chain_seeds", (self.seed,))

    def __len__(self) -> int:
        return int(self.draws.shape[0])

    @property
    def final_step_size(self) -> float:
        return float(self.step_size_trace[-1]) if self.step_size_trace.size else math.nan

    def param(self, index: int) -> ParamVector:
        return ParamVector.from_row(self.spec, self.draws[index])

    def iter_params(self) -> Iterator[ParamVector]:
        for index in range(len(self)):
            yield self.param(index)

    def coordinates(self) -> NDArray[np.float64]:
        """Draws with sigma0^2 on the log scale (sampling coordinates)."""
        coords = np.array(self.draws, copy=True)
        sigma0 = ParamLayout(self.spec).sigma0
        if sigma0 is not None:
            coords[:, sigma0] = np.log(coords[:, sigma0])
        return coords

    def check_bounds(self) -> None:
        """
        Raises:
            InvariantViolationError: If any draw has theta/eta outside [0, 1] or sigma0^2 <= 0
        """
        layout = ParamLayout(self.spec)
        mask = layout.bounded_mask()
        bounded = self.draws[:, mask]
        if bounded.size and (bounded.min() < 0.0 or bounded.max() > 1.0):
            raise InvariantViolationError("A retained draw has theta/eta outside [0, 1]")
        if layout.sigma0 is not None and self.draws[:, layout.sigma0].min(initial=np.inf) <= 0.0:
            raise InvariantViolationError("A retained draw has nonpositive sigma0^2")

    @classmethod
    def pooled(cls, chains: Sequence["PosteriorSamples"]) -> "PosteriorSamples":
        """Concatenate chains for summaries; traces come from the first chain."""
        if not chains:
            raise InvalidArgumentError("Cannot pool an empty list of chains")
        first = chains[0]
        draws = np.vstack([chain.draws for chain in chains])
        rate = float(np.mean([chain.accept_rate for chain in chains]))
        return cls(
            spec=first.spec,
            draws=draws,
            accept_rate_trace=first.accept_rate_trace,
            step_size_trace=first.step_size_trace,
            seed=first.seed,
            horizon=first.horizon,
            accept_rate=rate,
            chain_seeds=tuple(seed for chain in chains for seed in chain.chain_seeds),
        )


def default_init(spec: ModelSpec, data: Union[SeriesData, ArrayLike]) -> ParamVector:
    """
    Deterministic starting point derived from the sample variance.

    beta_j = log(0.5 var(X)), theta = eta = 0.5, delta = 0 and sigma0^2 = var(X),
    with var(X) floored at 1e-8.
    """
    values = series_values(data)
    variance = float(np.var(values))
    if variance < VARIANCE_FLOOR:
        logger.warning("Sample variance %.3e is below %.0e; using the floor for initialisation", variance, VARIANCE_FLOOR)
        variance = VARIANCE_FLOOR
    return ParamVector(
        beta=np.full(spec.k1, math.log(0.5 * variance)),
        theta=np.full((spec.p, spec.k2), 0.5),
        eta=np.full((spec.free_b, spec.k3), 0.5),
        delta=np.zeros(spec.num_weights + 1),
        sigma0_sq=variance if spec.has_sigma0 else None,
    )


def run_chain(
    spec: ModelSpec,
    data: Union[SeriesData, ArrayLike],
    hyper: PriorHyper,
    config: HmcConfig,
    init: Optional[ParamVector] = None,
    horizon: Optional[int] = None,
) -> PosteriorSamples:
    """
    Sample the posterior of one model with HMC.

    Args:
        spec: Model specification
        data: Returns to fit
        hyper: Prior hyperparameters
        config: Sampler configuration
        init: Starting point (default_init when None)
        horizon: Spline time horizon, larger than the series for prefix fits

    Returns:
        PosteriorSamples with total_iters - burn_in draws

    Raises:
        InitializationError: If the potential is not finite at the starting point
    """
    target = PosteriorTarget(spec, data, hyper, horizon)
    start = default_init(spec, data) if init is None else init
    logger.info(
        "Starting %s chain: n=%d, seed=%d, %d iterations (%d burn-in)",
        spec.describe(), target.n, config.seed, config.total_iters, config.burn_in,
    )
    run = run_hmc(
        target.hmc_potential,
        start.to_coordinates(spec),
        config,
        bounded=target.layout.bounded_mask(),
    )
    draws = run.positions.copy()
    if target.layout.sigma0 is not None:
        draws[:, target.layout.sigma0] = np.exp(draws[:, target.layout.sigma0])
    samples = PosteriorSamples(
        spec=spec,
        draws=draws,
        accept_rate_trace=np.asarray(run.accept_rate_trace),
        step_size_trace=np.asarray(run.step_size_trace),
        seed=config.seed,
        horizon=target.horizon,
        accept_rate=run.accept_rate,
    )
    if config.boundary is not BoundaryMode.NONE:
        samples.check_bounds()
    logger.info(
        "Finished %s chain: acceptance %.3f, final step size %.3e",
        spec.describe(), run.accept_rate, run.final_step_size,
    )
    return samples
