"""Chain phase state machine.

A chain starts in WARMUP, where the step size adapts, moves to SAMPLING once
burn-in ends (adaptation frozen, draws retained) and ends in COMPLETE.
"""

from dataclasses import dataclass, field
from enum import Enum, auto
from typing import ClassVar


class ChainPhase(Enum):
    """Lifecycle of one Markov chain"""
    WARMUP = auto()
    SAMPLING = auto()
    COMPLETE = auto()


@dataclass
class ChainStateMachine:
    """
    Tracks the phase of a chain and validates transitions.

    Ensures that:
    - sampling starts only after warmup
    - draws are retained only while sampling
    - completion is final
    """
    _phase: ChainPhase = field(default_factory=lambda: ChainPhase.WARMUP)

    ERROR_SAMPLE_FROM_WARMUP: ClassVar[str] = "Sampling can only start from WARMUP"
    ERROR_COMPLETE: ClassVar[str] = "Chain is already complete"

    @property
    def phase(self) -> ChainPhase:
        return self._phase

    @property
    def adapting(self) -> bool:
        """Step-size adaptation is allowed only during warmup."""
        return self._phase is ChainPhase.WARMUP

    @property
    def retaining(self) -> bool:
        return self._phase is ChainPhase.SAMPLING

    def start_sampling(self) -> None:
        """WARMUP -> SAMPLING.

        Raises:
            RuntimeError: if the chain is not warming up
        """
        if self._phase is not ChainPhase.WARMUP:
            raise RuntimeError(self.ERROR_SAMPLE_FROM_WARMUP)
        self._phase = ChainPhase.SAMPLING

    def complete(self) -> None:
        """Transition to COMPLETE (idempotent)."""
        self._phase = ChainPhase.COMPLETE

    def advance(self, iteration: int, burn_in: int) -> None:
        """Move to SAMPLING when `iteration` (0-based) reaches the end of burn-in."""
        if self._phase is ChainPhase.COMPLETE:
            raise RuntimeError(self.ERROR_COMPLETE)
        if iteration == burn_in and self._phase is ChainPhase.WARMUP:
            self.start_sampling()
