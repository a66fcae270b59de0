"""
Negative log posterior of the time-varying models and its exact gradient.

The data term is the Gaussian conditional likelihood

    D = 1/2 * sum_{i in S} ( log sigma_i^2 + X_i^2 / sigma_i^2 )

scored from i = p + 1 for tvARCH and from i = 1 for the GARCH kinds. Priors
are N(0, c2) on beta, N(0, c1) on delta, uniform on theta and eta, and
inverse-gamma(d1, d1) on sigma0^2.

The gradient is accumulated backwards through the variance recursion: with
g_t = dD/dsigma_t^2 taken directly, the total sensitivities are

    lambda_t = g_t + sum_j b_j(t + j) lambda_{t + j},   lambda_0 = sum_j b_j(j) lambda_j

and every coefficient curve picks up lambda_t times its regressor.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..common.errors import InvalidArgumentError, NumericalError
from ..series import SeriesData, series_values
from ..volatility import (
    BasisSet,
    ModelKind,
    ModelSpec,
    ParamGradient,
    ParamLayout,
    ParamVector,
    arch_component,
    garch_filter,
    lagged,
    softmax_full,
    variance_lags,
)
from .prior_hyper import PriorHyper

logger = logging.getLogger(__name__)

LOG_TWO_PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class Potential:
    """Negative log posterior value and its gradient (sigma0 entry w.r.t. log sigma0^2)."""
    value: float
    grad: ParamGradient


@dataclass(frozen=True, eq=False)
class _ForwardPass:
    """Intermediate quantities of one likelihood evaluation."""
    probabilities: NDArray[np.float64]
    exp_beta: NDArray[np.float64]
    shape_a: NDArray[np.float64]
    shape_b: NDArray[np.float64]
    b: NDArray[np.float64]
    variances: NDArray[np.float64]
    sigma0_sq: float


def adjoint_recursion(
    direct: NDArray[np.float64], b: NDArray[np.float64]
) -> tuple[NDArray[np.float64], float]:
    """
    Total sensitivities of the data term to each sigma_t^2 and to sigma_0^2.

    Args:
        direct: dD/dsigma_t^2 holding the other variances fixed
        b: q x n GARCH coefficient curves

    Returns:
        (lambda_1..lambda_n, lambda_0)
    """
    q, n = b.shape[0], direct.size
    if q == 0:
        return np.array(direct, dtype=float, copy=True), 0.0
    sensitivities = direct.tolist()
    b_rows = [row.tolist() for row in b]
    for i in range(n - 1, -1, -1):
        value = sensitivities[i]
        for j in range(1, q + 1):
            if i + j < n:
                value += b_rows[j - 1][i + j] * sensitivities[i + j]
        sensitivities[i] = value
    initial = sum(b_rows[j - 1][j - 1] * sensitivities[j - 1] for j in range(1, q + 1) if j <= n)
    return np.asarray(sensitivities, dtype=float), float(initial)


def softmax_logit_gradient(
    probabilities: NDArray[np.float64], mass_gradient: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Chain a gradient w.r.t. the m+1 softmax outputs back to the logits."""
    return probabilities * (mass_gradient - probabilities @ mass_gradient)


class PosteriorTarget:
    """
    Posterior of one model on one series, evaluated on flat coordinates.

    Coordinates follow ParamLayout with sigma0^2 on the log scale. Design
    matrices are built once per target; evaluations are pure.

    Args:
        spec: Model specification
        data: Returns X_1..X_n
        hyper: Prior hyperparameters; None switches all prior terms off
        horizon: Time horizon of the spline grid (defaults to n)
    """

    def __init__(
        self,
        spec: ModelSpec,
        data: Union[SeriesData, ArrayLike],
        hyper: Optional[PriorHyper] = PriorHyper(),
        horizon: Optional[int] = None,
    ) -> None:
        values = series_values(data)
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("Series contains non-finite values")
        if values.size < spec.p + 1:
            raise InvalidArgumentError(f"{spec.describe()} needs at least {spec.p + 1} observations")
        self.spec = spec
        self.hyper = hyper
        self.layout = ParamLayout(spec)
        self.squares = values ** 2
        self.n = int(values.size)
        self.horizon = self.n if horizon is None else int(horizon)
        self.mu_design, self.a_design, self.b_design = BasisSet.from_spec(spec).designs(self.n, self.horizon)
        self.scored = slice(spec.likelihood_start, self.n)

    @property
    def num_scored(self) -> int:
        return self.n - self.spec.likelihood_start

    def _forward(self, coords: NDArray[np.float64]) -> _ForwardPass:
        spec, layout = self.spec, self.layout
        probabilities = softmax_full(coords[layout.delta])
        weights = probabilities[1:]
        exp_beta = np.exp(coords[layout.beta])
        shape_a = coords[layout.theta].reshape(spec.p, spec.k2) @ self.a_design.T
        shape_b = coords[layout.eta].reshape(spec.free_b, spec.k3) @ self.b_design.T
        a = weights[:spec.p, None] * shape_a
        b = weights[spec.p:, None] * shape_b
        if spec.kind is ModelKind.TV_IGARCH:
            b = np.vstack([b, (1.0 - a.sum(axis=0) - b.sum(axis=0))[None, :]])
        sigma0_sq = float(np.exp(coords[layout.sigma0])) if layout.sigma0 is not None else 0.0
        drive = arch_component(self.mu_design @ exp_beta, a, self.squares)
        variances = garch_filter(drive, b, sigma0_sq)
        if not np.all(np.isfinite(variances)) or variances.min() <= 0.0:
            raise NumericalError(f"Non-positive or non-finite conditional variance under {spec.describe()}")
        return _ForwardPass(probabilities, exp_beta, shape_a, shape_b, b, variances, sigma0_sq)

    def _data_term(self, state: _ForwardPass) -> float:
        variances = state.variances[self.scored]
        return 0.5 * float(np.sum(np.log(variances) + self.squares[self.scored] / variances))

    def _prior_term(self, coords: NDArray[np.float64], state: _ForwardPass) -> float:
        if self.hyper is None:
            return 0.0
        layout, hyper = self.layout, self.hyper
        value = float(np.sum(coords[layout.beta] ** 2)) / (2.0 * hyper.c2)
        value += float(np.sum(coords[layout.delta] ** 2)) / (2.0 * hyper.c1)
        if layout.sigma0 is not None:
            value += (hyper.d1 + 1.0) * float(coords[layout.sigma0]) + hyper.d1 / state.sigma0_sq
        return value

    def data_term(self, coords: NDArray[np.float64]) -> float:
        return self._data_term(self._forward(np.asarray(coords, dtype=float)))

    def data_log_likelihood(self, coords: NDArray[np.float64]) -> float:
        """Gaussian log-likelihood of the scored observations, priors excluded."""
        return -self.data_term(coords) - 0.5 * self.num_scored * LOG_TWO_PI

    def value(self, coords: NDArray[np.float64]) -> float:
        coords = np.asarray(coords, dtype=float)
        state = self._forward(coords)
        return self._data_term(state) + self._prior_term(coords, state)

    def evaluate(self, coords: NDArray[np.float64]) -> tuple[float, NDArray[np.float64]]:
        """
        Negative log posterior and its gradient at a flat coordinate vector.

        Raises:
            NumericalError: If the variance recursion leaves the positive reals
        """
        spec, layout = self.spec, self.layout
        coords = np.asarray(coords, dtype=float)
        state = self._forward(coords)
        variances = state.variances

        direct = np.zeros(self.n)
        scored = self.scored
        direct[scored] = (1.0 - self.squares[scored] / variances[scored]) / (2.0 * variances[scored])
        sensitivities, initial = adjoint_recursion(direct, state.b)

        d_a = np.vstack([sensitivities * lagged(self.squares, k) for k in range(1, spec.p + 1)])
        d_b = np.vstack([sensitivities * variance_lags(variances, state.sigma0_sq, j) for j in range(1, spec.q + 1)]) \
            if spec.q else np.zeros((0, self.n))
        if spec.kind is ModelKind.TV_IGARCH:
            d_a = d_a - d_b[-1]
            d_b_free = d_b[:-1] - d_b[-1]
        else:
            d_b_free = d_b

        weights = state.probabilities[1:]
        grad = np.zeros(layout.dimension)
        grad[layout.beta] = (self.mu_design.T @ sensitivities) * state.exp_beta
        grad[layout.theta] = (weights[:spec.p, None] * (d_a @ self.a_design)).ravel()
        grad[layout.eta] = (weights[spec.p:, None] * (d_b_free @ self.b_design)).ravel()
        mass_gradient = np.concatenate([
            [0.0],
            np.sum(d_a * state.shape_a, axis=1),
            np.sum(d_b_free * state.shape_b, axis=1),
        ])
        grad[layout.delta] = softmax_logit_gradient(state.probabilities, mass_gradient)
        if layout.sigma0 is not None:
            grad[layout.sigma0] = initial * state.sigma0_sq

        if self.hyper is not None:
            hyper = self.hyper
            grad[layout.beta] += coords[layout.beta] / hyper.c2
            grad[layout.delta] += coords[layout.delta] / hyper.c1
            if layout.sigma0 is not None:
                grad[layout.sigma0] += (hyper.d1 + 1.0) - hyper.d1 / state.sigma0_sq

        return self._data_term(state) + self._prior_term(coords, state), grad

    def hmc_potential(self, coords: NDArray[np.float64]) -> tuple[float, NDArray[np.float64]]:
        """
        Potential energy for sampling on log sigma0^2.

        Adds the change-of-variables term -log sigma0^2. Numerical failures map
        to an infinite potential so the sampler rejects the proposal.
        """
        try:
            value, grad = self.evaluate(coords)
        except NumericalError as error:
            logger.debug("Potential evaluation failed: %s", error)
            return math.inf, np.full(self.layout.dimension, np.nan)
        if self.layout.sigma0 is not None:
            value -= float(coords[self.layout.sigma0])
            grad[self.layout.sigma0] -= 1.0
        if not math.isfinite(value) or not np.all(np.isfinite(grad)):
            return math.inf, grad
        return value, grad


def neg_log_posterior(
    spec: ModelSpec,
    params: ParamVector,
    data: Union[SeriesData, ArrayLike],
    hyper: Optional[PriorHyper] = PriorHyper(),
) -> float:
    """
    Negative log posterior kernel (additive constants dropped).

    Args:
        spec: Model specification
        params: Parameter vector
        data: Returns
        hyper: Prior hyperparameters, or None for the data term alone

    Raises:
        InvalidArgumentError: On non-finite data or mismatched dimensions
    """
    return PosteriorTarget(spec, data, hyper).value(params.to_coordinates(spec))


def gradient(
    spec: ModelSpec,
    params: ParamVector,
    data: Union[SeriesData, ArrayLike],
    hyper: Optional[PriorHyper] = PriorHyper(),
) -> Potential:
    """Value and analytic gradient of neg_log_posterior."""
    value, grad = PosteriorTarget(spec, data, hyper).evaluate(params.to_coordinates(spec))
    return Potential(value=value, grad=ParamGradient.from_flat(spec, grad))


def data_log_likelihood(
    spec: ModelSpec,
    params: ParamVector,
    data: Union[SeriesData, ArrayLike],
    horizon: Optional[int] = None,
) -> float:
    return PosteriorTarget(spec, data, None, horizon).data_log_likelihood(params.to_coordinates(spec))
