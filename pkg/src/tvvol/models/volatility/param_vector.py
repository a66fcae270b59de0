"""
Sampling coordinates of a time-varying model.

A ParamVector holds the spline coefficients (beta, theta, eta), the softmax
logits delta (slack coordinate first) and, for GARCH kinds, the initial
conditional variance. ParamLayout maps these blocks onto one flat vector in
the fixed order beta, theta (row-major), eta (row-major), delta, sigma0^2;
the sampler moves sigma0^2 on the log scale.
"""

from dataclasses import dataclass
from typing import ClassVar, Optional

import numpy as np
from numpy.typing import NDArray

from ..common.errors import InvalidArgumentError
from .model_spec import ModelSpec


@dataclass(frozen=True)
class ParamLayout:
    """Slices of each parameter block inside a flat coordinate vector."""
    spec: ModelSpec

    @property
    def beta(self) -> slice:
        return slice(0, self.spec.k1)

    @property
    def theta(self) -> slice:
        start = self.beta.stop
        return slice(start, start + self.spec.p * self.spec.k2)

    @property
    def eta(self) -> slice:
        start = self.theta.stop
        return slice(start, start + self.spec.free_b * self.spec.k3)

    @property
    def delta(self) -> slice:
        start = self.eta.stop
        return slice(start, start + self.spec.num_weights + 1)

    @property
    def sigma0(self) -> Optional[int]:
        """Index of the sigma0^2 coordinate, or None for tvARCH."""
        return self.delta.stop if self.spec.has_sigma0 else None

    @property
    def dimension(self) -> int:
        return self.delta.stop + (1 if self.spec.has_sigma0 else 0)

    def bounded_mask(self) -> NDArray[np.bool_]:
        """True for coordinates restricted to [0, 1] (theta and eta)."""
        mask = np.zeros(self.dimension, dtype=bool)
        mask[self.theta] = True
        mask[self.eta] = True
        return mask

    def column_names(self) -> list[str]:
        """Column labels of a draws dump in coordinate order."""
        spec = self.spec
        names = [f"beta_{j}" for j in range(1, spec.k1 + 1)]
        names += [f"theta_{k}_{j}" for k in range(1, spec.p + 1) for j in range(1, spec.k2 + 1)]
        names += [f"eta_{k}_{j}" for k in range(1, spec.free_b + 1) for j in range(1, spec.k3 + 1)]
        names += [f"delta_{l}" for l in range(spec.num_weights + 1)]
        if spec.has_sigma0:
            names.append("sigma0_sq")
        return names


@dataclass(frozen=True, eq=False)
class ParamVector:
    """
    One point of the parameter space.

    Attributes:
        beta: K1 log-scale spline coefficients of mu
        theta: p x K2 spline weights of the a_k curves, each in [0, 1]
        eta: q' x K3 spline weights of the free b_j curves, each in [0, 1]
        delta: m + 1 softmax logits, delta[0] being the slack coordinate
        sigma0_sq: Initial conditional variance (GARCH kinds only)
    """
    beta: NDArray[np.float64]
    theta: NDArray[np.float64]
    eta: NDArray[np.float64]
    delta: NDArray[np.float64]
    sigma0_sq: Optional[float] = None

    ERROR_UNIT_INTERVAL: ClassVar[str] = "{name} entries must lie in [0, 1]"
    ERROR_SIGMA0: ClassVar[str] = "sigma0_sq must be positive, got {value}"
    ERROR_NON_FINITE: ClassVar[str] = "{name} contains non-finite values"
    ERROR_SHAPE: ClassVar[str] = "{name} has shape {actual}, expected {expected} for {model}"

    def __post_init__(self) -> None:
        """Coerce blocks to float arrays and validate their ranges."""
        for name in ("beta", "theta", "eta", "delta"):
            block = np.array(getattr(self, name), dtype=float)
            if name in ("theta", "eta") and block.ndim == 1:
                block = block.reshape(1, -1) if block.size else block.reshape(0, 0)
            block.setflags(write=False)
            object.__setattr__(self, name, block)
            if not np.all(np.isfinite(block)):
                raise InvalidArgumentError(self.ERROR_NON_FINITE.format(name=name))
        for name in ("theta", "eta"):
            block = getattr(self, name)
            if block.size and (block.min() < 0.0 or block.max() > 1.0):
                raise InvalidArgumentError(self.ERROR_UNIT_INTERVAL.format(name=name))
        if self.sigma0_sq is not None and not self.sigma0_sq > 0.0:
            raise InvalidArgumentError(self.ERROR_SIGMA0.format(value=self.sigma0_sq))

    def check_against(self, spec: ModelSpec) -> None:
        """
        Verify that block shapes match the model specification.

        Raises:
            InvalidArgumentError: On any dimension mismatch
        """
        expected = {
            "beta": (spec.k1,),
            "theta": (spec.p, spec.k2),
            "eta": (spec.free_b, spec.k3) if spec.free_b else (0,),
            "delta": (spec.num_weights + 1,),
        }
        for name, shape in expected.items():
            block = getattr(self, name)
            actual = block.shape if block.size else (0,)
            if actual != shape and not (block.size == 0 and int(np.prod(shape)) == 0):
                raise InvalidArgumentError(
                    self.ERROR_SHAPE.format(name=name, actual=block.shape, expected=shape, model=spec.describe())
                )
        if spec.has_sigma0 != (self.sigma0_sq is not None):
            raise InvalidArgumentError(
                f"sigma0_sq must be {'given' if spec.has_sigma0 else 'absent'} for {spec.describe()}"
            )

    def to_coordinates(self, spec: ModelSpec) -> NDArray[np.float64]:
        """Flat sampling vector; sigma0^2 enters on the log scale."""
        self.check_against(spec)
        blocks = [self.beta.ravel(), self.theta.ravel(), self.eta.ravel(), self.delta.ravel()]
        if self.sigma0_sq is not None:
            blocks.append(np.array([np.log(self.sigma0_sq)]))
        return np.concatenate(blocks)

    def to_row(self, spec: ModelSpec) -> NDArray[np.float64]:
        """Flat vector in dump order with sigma0^2 on its natural scale."""
        row = self.to_coordinates(spec)
        if self.sigma0_sq is not None:
            row[-1] = self.sigma0_sq
        return row

    @classmethod
    def from_coordinates(cls, spec: ModelSpec, coords: NDArray[np.float64]) -> "ParamVector":
        """Rebuild a ParamVector from a flat sampling vector (log sigma0^2)."""
        layout = ParamLayout(spec)
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (layout.dimension,):
            raise InvalidArgumentError(
                f"Coordinate vector has shape {coords.shape}, expected ({layout.dimension},)"
            )
        sigma0_sq = None
        if layout.sigma0 is not None:
            sigma0_sq = float(np.exp(coords[layout.sigma0]))
        return cls(
            beta=coords[layout.beta].copy(),
            theta=coords[layout.theta].reshape(spec.p, spec.k2),
            eta=coords[layout.eta].reshape(spec.free_b, spec.k3),
            delta=coords[layout.delta].copy(),
            sigma0_sq=sigma0_sq,
        )

    @classmethod
    def from_row(cls, spec: ModelSpec, row: NDArray[np.float64]) -> "ParamVector":
        """Rebuild a ParamVector from a dump-order row (sigma0^2 on natural scale)."""
        coords = np.array(row, dtype=float)
        layout = ParamLayout(spec)
        if layout.sigma0 is not None:
            coords[layout.sigma0] = np.log(coords[layout.sigma0])
        return cls.from_coordinates(spec, coords)


@dataclass(frozen=True, eq=False)
class ParamGradient:
    """Gradient blocks mirroring ParamVector; the sigma0 entry is w.r.t. log sigma0^2."""
    beta: NDArray[np.float64]
    theta: NDArray[np.float64]
    eta: NDArray[np.float64]
    delta: NDArray[np.float64]
    log_sigma0_sq: Optional[float] = None

    @classmethod
    def from_flat(cls, spec: ModelSpec, flat: NDArray[np.float64]) -> "ParamGradient":
        layout = ParamLayout(spec)
        return cls(
            beta=flat[layout.beta].copy(),
            theta=flat[layout.theta].reshape(spec.p, spec.k2),
            eta=flat[layout.eta].reshape(spec.free_b, spec.k3),
            delta=flat[layout.delta].copy(),
            log_sigma0_sq=None if layout.sigma0 is None else float(flat[layout.sigma0]),
        )

    def to_flat(self) -> NDArray[np.float64]:
        blocks = [self.beta.ravel(), self.theta.ravel(), self.eta.ravel(), self.delta.ravel()]
        if self.log_sigma0_sq is not None:
            blocks.append(np.array([self.log_sigma0_sq]))
        return np.concatenate(blocks)
