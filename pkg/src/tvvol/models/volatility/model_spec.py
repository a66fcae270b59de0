"""
Model specification: which conditional-variance model is fitted and at what resolution.
"""

from dataclasses import dataclass
from enum import Enum
from typing import ClassVar

from ..common.errors import InvalidArgumentError

MIN_BASIS_SIZE = 4


class ModelKind(Enum):
    """
    The three time-varying conditional heteroscedastic models.

    Values double as the names used on the command line and in output files.
    """
    TV_ARCH = "arch"
    TV_GARCH = "garch"
    TV_IGARCH = "igarch"

    @classmethod
    def parse(cls, name: str) -> "ModelKind":
        """Resolve a CLI/config name ("arch", "garch", "igarch") to a kind."""
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise InvalidArgumentError(f"Unknown model kind: {name!r}")

    @property
    def has_variance_lags(self) -> bool:
        """True for the GARCH-type kinds, which carry sigma0^2 and b_j curves."""
        return self is not ModelKind.TV_ARCH


@dataclass(frozen=True)
class ModelSpec:
    """
    Lag orders and spline resolution of a model.

    Attributes:
        kind: Model family
        p: ARCH lag order (>= 1)
        q: GARCH lag order (0 for TV_ARCH, >= 1 otherwise)
        k1: Basis size of the intercept curve mu
        k2: Basis size of each a_k curve
        k3: Basis size of each free b_j curve
    """
    kind: ModelKind
    p: int = 1
    q: int = 0
    k1: int = 8
    k2: int = 8
    k3: int = 8

    ERROR_P: ClassVar[str] = "ARCH order p must be >= 1, got {p}"
    ERROR_ARCH_Q: ClassVar[str] = "tvARCH models take q = 0, got {q}"
    ERROR_GARCH_Q: ClassVar[str] = "{kind} models need q >= 1, got {q}"
    ERROR_BASIS: ClassVar[str] = "Basis sizes must be >= 4, got k1={k1}, k2={k2}, k3={k3}"

    def __post_init__(self) -> None:
        """Validate lag orders and basis sizes against the model kind."""
        if self.p < 1:
            raise InvalidArgumentError(self.ERROR_P.format(p=self.p))
        if self.kind is ModelKind.TV_ARCH and self.q != 0:
            raise InvalidArgumentError(self.ERROR_ARCH_Q.format(q=self.q))
        if self.kind.has_variance_lags and self.q < 1:
            raise InvalidArgumentError(self.ERROR_GARCH_Q.format(kind=self.kind.value, q=self.q))
        if min(self.k1, self.k2, self.k3) < MIN_BASIS_SIZE:
            raise InvalidArgumentError(self.ERROR_BASIS.format(k1=self.k1, k2=self.k2, k3=self.k3))

    @classmethod
    def with_knots(cls, kind: ModelKind, p: int, q: int, interior_knots: int) -> "ModelSpec":
        """Spec with one shared knot count for all coefficient families (K = knots + 4)."""
        size = interior_knots + MIN_BASIS_SIZE
        return cls(kind=kind, p=p, q=q, k1=size, k2=size, k3=size)

    @property
    def free_b(self) -> int:
        """Number of b_j curves carrying their own eta weights (q, or q-1 for tviGARCH)."""
        if self.kind is ModelKind.TV_IGARCH:
            return self.q - 1
        return self.q

    @property
    def num_weights(self) -> int:
        """Number m of softmax masses M_1..M_m (slack coordinate excluded)."""
        return self.p + self.free_b

    @property
    def has_sigma0(self) -> bool:
        """Whether the initial conditional variance is a model parameter."""
        return self.kind.has_variance_lags

    @property
    def likelihood_start(self) -> int:
        """0-based index of the first observation scored by the likelihood."""
        return self.p if self.kind is ModelKind.TV_ARCH else 0

    @property
    def coefficient_names(self) -> list[str]:
        """Names of the coefficient curves in output order: mu, a1..ap, b1..bq."""
        names = ["mu"] + [f"a{k}" for k in range(1, self.p + 1)]
        return names + [f"b{j}" for j in range(1, self.q + 1)]

    def describe(self) -> str:
        """Short human-readable label such as 'tvGARCH(1,1)'."""
        labels = {
            ModelKind.TV_ARCH: f"tvARCH({self.p})",
            ModelKind.TV_GARCH: f"tvGARCH({self.p},{self.q})",
            ModelKind.TV_IGARCH: f"tviGARCH({self.p},{self.q})",
        }
        return labels[self.kind]
