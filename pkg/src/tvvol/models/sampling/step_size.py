"""Windowed step-size adaptation for the leapfrog integrator."""

import logging
from dataclasses import dataclass, field
from typing import ClassVar

from ..common.errors import InvalidArgumentError

logger = logging.getLogger(__name__)


@dataclass
class StepSizeController:
    """
    Adjusts the leapfrog step size from the acceptance rate of each window.

    At the end of every window of `window` iterations the acceptance rate is
    compared with [target_low, target_high]: below the range the step size is
    divided by `factor`, above it multiplied. Once frozen the step size no
    longer changes, but windows are still recorded for diagnostics.
    """
    step_size: float
    window: int = 100
    target_low: float = 0.6
    target_high: float = 0.8
    factor: float = 1.1

    # Positive step sizes are kept inside these bounds; a zero step stays zero.
    MIN_STEP_SIZE: ClassVar[float] = 1e-8
    MAX_STEP_SIZE: ClassVar[float] = 1.0

    frozen: bool = field(default=False, init=False)
    accept_rate_trace: list[float] = field(default_factory=list, init=False)
    step_size_trace: list[float] = field(default_factory=list, init=False)
    _accepted: int = field(default=0, init=False)
    _seen: int = field(default=0, init=False)

    def __post_init__(self) -> None:
        if self.step_size < 0.0:
            raise InvalidArgumentError(f"Step size cannot be negative, got {self.step_size}")
        if self.window < 1:
            raise InvalidArgumentError(f"Adaptation window must be >= 1, got {self.window}")
        if not 0.0 < self.target_low < self.target_high < 1.0:
            raise InvalidArgumentError(
                f"Acceptance targets must satisfy 0 < low < high < 1, got {self.target_low}, {self.target_high}"
            )
        if not self.factor > 1.0:
            raise InvalidArgumentError(f"Adaptation factor must exceed 1, got {self.factor}")

    def freeze(self) -> None:
        """Stop adapting; the current step size is used from now on."""
        if not self.frozen:
            logger.info("Step size frozen at %.3e", self.step_size)
        self.frozen = True

    def record(self, accepted: bool) -> None:
        """Count one iteration and close the window when it is full."""
        self._seen += 1
        self._accepted += int(accepted)
        if self._seen == self.window:
            self._close_window()

    def _close_window(self) -> None:
        rate = self._accepted / self._seen
        self._accepted = 0
        self._seen = 0
        self.accept_rate_trace.append(rate)
        if not self.frozen and self.step_size > 0.0:
            if rate < self.target_low:
                self.step_size = max(self.MIN_STEP_SIZE, self.step_size / self.factor)
            elif rate > self.target_high:
                self.step_size = min(self.MAX_STEP_SIZE, self.step_size * self.factor)
            logger.debug("Window acceptance %.3f -> step size %.3e", rate, self.step_size)
        self.step_size_trace.append(self.step_size)
