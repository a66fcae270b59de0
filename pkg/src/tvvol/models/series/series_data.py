"""
Return series with provenance.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import ClassVar, Mapping, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..common.errors import InvalidArgumentError

MIN_SERIES_LENGTH = 20


class SeriesSource(Enum):
    """Where a series came from."""
    RAW_PRICES = "prices"
    RETURNS = "returns"
    SIMULATED = "simulated"


@dataclass(frozen=True, eq=False)
class SeriesData:
    """
    Immutable series of (possibly scaled) returns.

    Attributes:
        values: Return values X_1..X_n
        source: Provenance kind
        scale: Multiplier already applied to the values (100 for percent log-returns)
        meta: Free-form provenance strings (file, column, seed, scenario)
    """
    values: NDArray[np.float64]
    source: SeriesSource = SeriesSource.RETURNS
    scale: float = 1.0
    meta: Mapping[str, str] = field(default_factory=dict)

    ERROR_TOO_SHORT: ClassVar[str] = "Series needs at least {minimum} observations, got {n}"
    ERROR_NON_FINITE: ClassVar[str] = "Series contains non-finite values at positions {positions}"
    ERROR_SCALE: ClassVar[str] = "Scale must be positive, got {scale}"

    def __post_init__(self) -> None:
        """Freeze the values array and validate length, finiteness and scale."""
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size < MIN_SERIES_LENGTH:
            raise InvalidArgumentError(self.ERROR_TOO_SHORT.format(minimum=MIN_SERIES_LENGTH, n=values.size))
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise InvalidArgumentError(self.ERROR_NON_FINITE.format(positions=bad[:5].tolist()))
        if not self.scale > 0.0:
            raise InvalidArgumentError(self.ERROR_SCALE.format(scale=self.scale))
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def n(self) -> int:
        return int(self.values.size)

    def head(self, length: int) -> "SeriesData":
        """First `length` observations, provenance kept."""
        if not 0 < length <= self.n:
            raise InvalidArgumentError(f"Prefix length must be in [1, {self.n}], got {length}")
        meta = {**self.meta, "prefix": str(length)}
        return replace(self, values=self.values[:length], meta=meta)

    def tail(self, length: int) -> "SeriesData":
        """Most recent `length` observations."""
        if not 0 < length <= self.n:
            raise InvalidArgumentError(f"Suffix length must be in [1, {self.n}], got {length}")
        meta = {**self.meta, "last_n": str(length)}
        return replace(self, values=self.values[self.n - length:], meta=meta)

    def segment(self, start: int, stop: int) -> "SeriesData":
        """Observations start..stop-1 (0-based), e.g. one half of the series."""
        if not 0 <= start < stop <= self.n:
            raise InvalidArgumentError(f"Invalid segment [{start}, {stop}) for a series of length {self.n}")
        meta = {**self.meta, "segment": f"{start}:{stop}"}
        return replace(self, values=self.values[start:stop], meta=meta)

    def sample_variance(self) -> float:
        return float(np.var(self.values))


def series_values(data: "SeriesData | ArrayLike") -> NDArray[np.float64]:
    """Values of a SeriesData or any array-like as a float array."""
    if isinstance(data, SeriesData):
        return data.values
    return np.asarray(data, dtype=float).reshape(-1)


def make_series(
    values: ArrayLike,
    source: SeriesSource = SeriesSource.RETURNS,
    scale: float = 1.0,
    meta: Optional[Mapping[str, str]] = None,
) -> SeriesData:
    return SeriesData(values=np.asarray(values, dtype=float), source=source, scale=scale, meta=meta or {})
