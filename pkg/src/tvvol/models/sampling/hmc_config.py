"""
Sampler configuration.
"""

from dataclasses import dataclass
from enum import Enum
from typing import ClassVar, Final

from ..common.errors import InvalidArgumentError

DEFAULT_LEAPFROG_STEPS: Final[int] = 30
DEFAULT_STEP_SIZE: Final[float] = 1e-3
DEFAULT_TOTAL_ITERS: Final[int] = 10000
DEFAULT_BURN_IN: Final[int] = 5000
DEFAULT_ADAPT_WINDOW: Final[int] = 100


class BoundaryMode(Enum):
    """How proposals leaving [0, 1] in theta/eta are handled."""
    CLAMP = "clamp"  # end-of-trajectory position clamped coordinatewise
    REFLECT = "reflect"  # position reflected and momentum flipped at every step
    NONE = "none"

    @classmethod
    def parse(cls, name: str) -> "BoundaryMode":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise InvalidArgumentError(f"Unknown boundary mode: {name!r}")


@dataclass(frozen=True)
class HmcConfig:
    """
    Attributes:
        leapfrog_steps: Leapfrog steps per trajectory
        initial_step_size: Step size at the start of warmup (0 gives a constant chain)
        total_iters: Iterations including burn-in
        burn_in: Iterations discarded; adaptation runs only during these
        adapt_window: Iterations per acceptance window
        target_accept_low: Lower end of the target acceptance range
        target_accept_high: Upper end of the target acceptance range
        adapt_factor: Multiplicative step-size change per out-of-range window
        seed: RNG seed of the chain
        boundary: Handling of bounded coordinates
    """
    leapfrog_steps: int = DEFAULT_LEAPFROG_STEPS
    initial_step_size: float = DEFAULT_STEP_SIZE
    total_iters: int = DEFAULT_TOTAL_ITERS
    burn_in: int = DEFAULT_BURN_IN
    adapt_window: int = DEFAULT_ADAPT_WINDOW
    target_accept_low: float = 0.6
    target_accept_high: float = 0.8
    adapt_factor: float = 1.1
    seed: int = 0
    boundary: BoundaryMode = BoundaryMode.CLAMP

    ERROR_BURN_IN: ClassVar[str] = "burn_in ({burn_in}) must be in [0, total_iters={total})"
    ERROR_TARGETS: ClassVar[str] = "Acceptance targets must satisfy 0 < low < high < 1, got {low}, {high}"

    def __post_init__(self) -> None:
        if isinstance(self.boundary, str):
            object.__setattr__(self, "boundary", BoundaryMode.parse(self.boundary))
        if self.leapfrog_steps < 1:
            raise InvalidArgumentError(f"leapfrog_steps must be >= 1, got {self.leapfrog_steps}")
        if self.initial_step_size < 0.0:
            raise InvalidArgumentError(f"initial_step_size cannot be negative, got {self.initial_step_size}")
        if not 0 <= self.burn_in < self.total_iters:
            raise InvalidArgumentError(self.ERROR_BURN_IN.format(burn_in=self.burn_in, total=self.total_iters))
        if self.adapt_window < 1:
            raise InvalidArgumentError(f"adapt_window must be >= 1, got {self.adapt_window}")
        if not 0.0 < self.target_accept_low < self.target_accept_high < 1.0:
            raise InvalidArgumentError(
                self.ERROR_TARGETS.format(low=self.target_accept_low, high=self.target_accept_high)
            )
        if not self.adapt_factor > 1.0:
            raise InvalidArgumentError(f"adapt_factor must exceed 1, got {self.adapt_factor}")
        if self.seed < 0:
            raise InvalidArgumentError(f"seed must be a nonnegative integer, got {self.seed}")

    @property
    def num_draws(self) -> int:
        return self.total_iters - self.burn_in
