"""
Scenario factory for the built-in simulation designs.

Provides the three standard time-varying designs (one per model kind) plus
flat-coefficient scenarios for checks against time-constant truth. All
coefficient functions are module-level so scenarios can be shipped to worker
processes.
"""

from dataclasses import dataclass
from functools import partial
from typing import ClassVar, Dict, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from src.tvvol.models.common import InvalidArgumentError
from src.tvvol.models.volatility import ModelKind, ModelSpec
from .simulator import CurveFn, Scenario


def arch1_mu(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return 10.0 * np.exp(-((x - 0.5) ** 2) / 0.1)


def arch1_a(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return 0.4 * (x - 0.15) ** 2 + 0.1


def garch11_mu(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return 1.0 - 0.8 * np.sin(np.pi * x / 2.0)


def garch11_a(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return 0.5 - (x - 0.3) ** 2


def garch11_b(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return 0.4 - 0.5 * (x - 0.4) ** 2


def igarch11_mu(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.exp(-((x - 0.5) ** 2) / 0.1)


def igarch11_a(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return 0.4 * (x - 1.0) ** 2 + 0.1


def flat(value: float, x: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.full(np.shape(x), value, dtype=float)


@dataclass(frozen=True)
class ScenarioTemplate:
    """True coefficient functions of a built-in design"""
    kind: ModelKind
    mu0: CurveFn
    a0: tuple[CurveFn, ...]
    b0: tuple[CurveFn, ...]
    description: str


class ScenarioFactory:
    """Factory service for creating simulation scenarios"""

    TEMPLATES: ClassVar[Dict[str, ScenarioTemplate]] = {
        "arch1": ScenarioTemplate(
            kind=ModelKind.TV_ARCH,
            mu0=arch1_mu,
            a0=(arch1_a,),
            b0=(),
            description="tvARCH(1): mu0(x)=10exp(-(x-0.5)^2/0.1), a0(x)=0.4(x-0.15)^2+0.1",
        ),
        "garch11": ScenarioTemplate(
            kind=ModelKind.TV_GARCH,
            mu0=garch11_mu,
            a0=(garch11_a,),
            b0=(garch11_b,),
            description="tvGARCH(1,1): mu0(x)=1-0.8sin(pi x/2), a0(x)=0.5-(x-0.3)^2, b0(x)=0.4-0.5(x-0.4)^2",
        ),
        "igarch11": ScenarioTemplate(
            kind=ModelKind.TV_IGARCH,
            mu0=igarch11_mu,
            a0=(igarch11_a,),
            b0=(),  # b0 = 1 - a0
            description="tviGARCH(1,1): mu0(x)=exp(-(x-0.5)^2/0.1), a0(x)=0.4(x-1)^2+0.1, b0=1-a0",
        ),
    }

    @classmethod
    def names(cls) -> list[str]:
        return sorted(cls.TEMPLATES)

    @classmethod
    def create(cls, name: str, n: int, seed: int, *, zero_history: bool = False) -> Scenario:
        """
        Build a built-in scenario.

        Args:
            name: One of `names()`
            n: Series length
            seed: RNG seed
            zero_history: Start the variance recursion from zero

        Raises:
            InvalidArgumentError: If the scenario name is not recognized
        """
        try:
            template = cls.TEMPLATES[name]
        except KeyError:
            raise InvalidArgumentError(f"Unknown scenario: {name!r} (choose from {', '.join(cls.names())})")
        q = 0 if template.kind is ModelKind.TV_ARCH else 1
        return Scenario(
            name=name,
            spec=ModelSpec(template.kind, p=len(template.a0), q=q),
            mu0=template.mu0,
            a0=template.a0,
            b0=template.b0,
            n=n,
            seed=seed,
            zero_history=zero_history,
        )

    @classmethod
    def create_arch1(cls, n: int, seed: int, **kwargs: bool) -> Scenario:
        return cls.create("arch1", n, seed, **kwargs)

    @classmethod
    def create_garch11(cls, n: int, seed: int, **kwargs: bool) -> Scenario:
        return cls.create("garch11", n, seed, **kwargs)

    @classmethod
    def create_igarch11(cls, n: int, seed: int, **kwargs: bool) -> Scenario:
        return cls.create("igarch11", n, seed, **kwargs)

    @classmethod
    def constant(
        cls,
        kind: ModelKind,
        mu: float,
        a: Sequence[float],
        b: Sequence[float] = (),
        *,
        n: int,
        seed: int,
        name: Optional[str] = None,
    ) -> Scenario:
        """Scenario with flat coefficient functions (white noise when a and b are zero)."""
        return Scenario(
            name=name or f"constant-{kind.value}",
            spec=ModelSpec(kind, p=len(a), q=len(b)),
            mu0=partial(flat, float(mu)),
            a0=tuple(partial(flat, float(value)) for value in a),
            b0=tuple(partial(flat, float(value)) for value in b),
            n=n,
            seed=seed,
        )
