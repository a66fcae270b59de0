"""
Conditional-variance recursions.

    sigma_t^2 = mu(t/n) + sum_k a_k(t/n) X_{t-k}^2 + sum_j b_j(t/n) sigma_{t-j}^2

Pre-sample convention: X_t = 0 for t <= 0, sigma_0^2 is the initial variance
(GARCH kinds) and sigma_t^2 = 0 for t < 0. Arrays are 0-based, so position i
holds time i + 1.
"""

import logging
from typing import Optional, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.signal import lfilter

from ..common.errors import InvalidArgumentError, InvariantViolationError
from ..series import SeriesData, series_values
from .curves import CoefficientCurves
from .model_spec import ModelSpec

logger = logging.getLogger(__name__)


def lagged(values: NDArray[np.float64], lag: int) -> NDArray[np.float64]:
    """values shifted forward by `lag` positions with zeros in front."""
    if lag <= 0:
        return values.copy()
    out = np.zeros_like(values)
    if lag < values.size:
        out[lag:] = values[:-lag]
    return out


def variance_lags(variances: NDArray[np.float64], sigma0_sq: float, lag: int) -> NDArray[np.float64]:
    """sigma_{t-lag}^2 for every t, using sigma_0^2 and zeros before it."""
    out = lagged(variances, lag)
    if lag <= variances.size:
        out[lag - 1] = sigma0_sq
    return out


def arch_component(mu: NDArray[np.float64], a: NDArray[np.float64], squares: NDArray[np.float64]) -> NDArray[np.float64]:
    """mu + sum_k a_k X_{t-k}^2 for every t."""
    total = np.array(mu, dtype=float, copy=True)
    for k in range(a.shape[0]):
        total += a[k] * lagged(squares, k + 1)
    return total


def garch_filter(
    drive: NDArray[np.float64], b: NDArray[np.float64], sigma0_sq: float
) -> NDArray[np.float64]:
    """
    Run sigma_t^2 = drive_t + sum_j b_j(t) sigma_{t-j}^2 forward in time.

    The loop stays on Python floats; it is sequential in t.
    """
    q = b.shape[0]
    n = drive.size
    if q == 0:
        return np.array(drive, dtype=float, copy=True)
    drive_list = drive.tolist()
    b_rows = [row.tolist() for row in b]
    # history[q - 1 + t] holds sigma_t^2 for t = 1 - q .. n
    history = [0.0] * (q - 1) + [float(sigma0_sq)] + [0.0] * n
    for i in range(n):
        value = drive_list[i]
        for j in range(q):
            value += b_rows[j][i] * history[q + i - j - 1]
        history[q + i] = value
    return np.asarray(history[q:], dtype=float)


def _check_positive(variances: NDArray[np.float64]) -> NDArray[np.float64]:
    if not np.all(np.isfinite(variances)) or variances.min(initial=np.inf) <= 0.0:
        position = int(np.argmin(np.where(np.isfinite(variances), variances, -np.inf)))
        raise InvariantViolationError(
            f"Non-positive conditional variance {variances[position]} at t={position + 1}"
        )
    return variances


def variance_recursion(
    spec: ModelSpec,
    curves: CoefficientCurves,
    data: Union[SeriesData, ArrayLike],
    sigma0_sq: Optional[float] = None,
) -> NDArray[np.float64]:
    """
    Conditional variances sigma_1^2..sigma_n^2 implied by curves and data.

    Args:
        spec: Model specification
        curves: Coefficient curves on the n-point grid of the data
        data: Returns X_1..X_n
        sigma0_sq: Initial variance, required for GARCH kinds

    Returns:
        Array of n positive variances

    Raises:
        InvalidArgumentError: On length mismatch or missing sigma0_sq
        InvariantViolationError: If a nonpositive variance appears
    """
    values = series_values(data)
    n = values.size
    if n < spec.p + 1:
        raise InvalidArgumentError(f"{spec.describe()} needs at least {spec.p + 1} observations, got {n}")
    if curves.n != n:
        raise InvalidArgumentError(f"Curves cover {curves.n} points but the series has {n}")
    if curves.p != spec.p or curves.q != spec.q:
        raise InvalidArgumentError(f"Curves have p={curves.p}, q={curves.q}; {spec.describe()} expected")
    if spec.has_sigma0 and (sigma0_sq is None or not sigma0_sq > 0.0):
        raise InvalidArgumentError(f"{spec.describe()} needs a positive sigma0_sq, got {sigma0_sq}")

    drive = arch_component(curves.mu, curves.a, values ** 2)
    variances = garch_filter(drive, curves.b, sigma0_sq or 0.0)
    return _check_positive(variances)


def constant_variance_recursion(
    mu: float,
    a: ArrayLike,
    b: ArrayLike,
    data: Union[SeriesData, ArrayLike],
    sigma0_sq: float = 0.0,
) -> NDArray[np.float64]:
    """
    Variance recursion with time-constant coefficients.

    Solved as a linear filter, with the sigma_0^2 contribution folded into the
    first q inputs.
    """
    values = series_values(data)
    a_values = np.atleast_1d(np.asarray(a, dtype=float))
    b_values = np.atleast_1d(np.asarray(b, dtype=float))
    drive = arch_component(np.full(values.size, float(mu)), a_values[:, None] * np.ones(values.size), values ** 2)
    if b_values.size == 0:
        return _check_positive(drive)
    for j, coefficient in enumerate(b_values[: values.size]):
        drive[j] += coefficient * sigma0_sq
    denominator = np.concatenate([[1.0], -b_values])
    return _check_positive(np.asarray(lfilter([1.0], denominator, drive), dtype=float))
