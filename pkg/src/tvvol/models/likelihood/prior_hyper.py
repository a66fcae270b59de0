"""
Prior hyperparameters.
"""

from dataclasses import dataclass
from typing import ClassVar, Final

from ..common.errors import InvalidArgumentError

DEFAULT_LOGIT_VARIANCE: Final[float] = 100.0
DEFAULT_SPLINE_VARIANCE: Final[float] = 100.0
DEFAULT_INITIAL_SHAPE: Final[float] = 2.0


@dataclass(frozen=True)
class PriorHyper:
    """
    Attributes:
        c1: Variance of the Gaussian prior on the softmax logits delta
        c2: Variance of the Gaussian prior on the mu spline coefficients beta
        d1: Shape and scale of the inverse-gamma prior on sigma0^2
    """
    c1: float = DEFAULT_LOGIT_VARIANCE
    c2: float = DEFAULT_SPLINE_VARIANCE
    d1: float = DEFAULT_INITIAL_SHAPE

    ERROR_NOT_POSITIVE: ClassVar[str] = "Prior hyperparameter {name} must be positive, got {value}"

    def __post_init__(self) -> None:
        for name in ("c1", "c2", "d1"):
            value = getattr(self, name)
            if not value > 0.0:
                raise InvalidArgumentError(self.ERROR_NOT_POSITIVE.format(name=name, value=value))
