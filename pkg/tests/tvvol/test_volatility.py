"""Tests for model specs, parameter vectors, coefficient curves and the variance recursion."""

import numpy as np
import pytest

from src.tvvol.models.common import InvalidArgumentError, InvariantViolationError
from src.tvvol.models.series import SeriesData
from src.tvvol.models.volatility import (
    BasisSet,
    CoefficientCurves,
    ModelKind,
    ModelSpec,
    ParamLayout,
    ParamVector,
    build_curves,
    constant_variance_recursion,
    softmax_weights,
    variance_recursion,
)


def _random_params(spec: ModelSpec, rng: np.random.Generator) -> ParamVector:
    return ParamVector(
        beta=rng.normal(0.0, 1.0, spec.k1),
        theta=rng.uniform(0.0, 1.0, (spec.p, spec.k2)),
        eta=rng.uniform(0.0, 1.0, (spec.free_b, spec.k3)),
        delta=rng.normal(0.0, 2.0, spec.num_weights + 1),
        sigma0_sq=1.5 if spec.has_sigma0 else None,
    )


@pytest.mark.unit
def test_model_kind_parse() -> None:
    assert ModelKind.parse(" GARCH ") is ModelKind.TV_GARCH
    with pytest.raises(InvalidArgumentError):
        ModelKind.parse("egarch")


@pytest.mark.unit
@pytest.mark.parametrize(
    "kind,p,q",
    [(ModelKind.TV_ARCH, 1, 1), (ModelKind.TV_GARCH, 1, 0), (ModelKind.TV_IGARCH, 1, 0), (ModelKind.TV_ARCH, 0, 0)],
)
def test_model_spec_rejects_bad_orders(kind: ModelKind, p: int, q: int) -> None:
    with pytest.raises(InvalidArgumentError):
        ModelSpec(kind, p=p, q=q)


@pytest.mark.unit
def test_model_spec_rejects_small_basis() -> None:
    with pytest.raises(InvalidArgumentError):
        ModelSpec(ModelKind.TV_GARCH, p=1, q=1, k1=3)


@pytest.mark.unit
def test_model_spec_derived_sizes() -> None:
    igarch = ModelSpec.with_knots(ModelKind.TV_IGARCH, 2, 2, 3)
    assert (igarch.k1, igarch.k2, igarch.k3) == (7, 7, 7)
    assert igarch.free_b == 1
    assert igarch.num_weights == 3
    assert igarch.coefficient_names == ["mu", "a1", "a2", "b1", "b2"]
    assert igarch.describe() == "tviGARCH(2,2)"

    arch = ModelSpec(ModelKind.TV_ARCH, p=2)
    assert arch.likelihood_start == 2
    assert not arch.has_sigma0


@pytest.mark.unit
def test_layout_round_trips_coordinates(garch_spec: ModelSpec, rng: np.random.Generator) -> None:
    params = _random_params(garch_spec, rng)
    layout = ParamLayout(garch_spec)
    coords = params.to_coordinates(garch_spec)

    assert coords.shape == (layout.dimension,)
    assert coords[layout.sigma0] == pytest.approx(np.log(1.5))
    assert layout.bounded_mask().sum() == garch_spec.p * garch_spec.k2 + garch_spec.free_b * garch_spec.k3
    assert len(layout.column_names()) == layout.dimension

    rebuilt = ParamVector.from_coordinates(garch_spec, coords)
    np.testing.assert_allclose(rebuilt.theta, params.theta)
    assert rebuilt.sigma0_sq == pytest.approx(1.5)


@pytest.mark.unit
def test_param_vector_validates_ranges() -> None:
    with pytest.raises(InvalidArgumentError):
        ParamVector(beta=np.zeros(6), theta=np.full((1, 6), 1.2), eta=np.zeros((0, 6)), delta=np.zeros(2))
    with pytest.raises(InvalidArgumentError):
        ParamVector(beta=np.zeros(6), theta=np.full((1, 6), 0.5), eta=np.zeros((0, 6)), delta=np.zeros(2), sigma0_sq=0.0)
    with pytest.raises(InvalidArgumentError):
        ParamVector(beta=np.full(6, np.nan), theta=np.full((1, 6), 0.5), eta=np.zeros((0, 6)), delta=np.zeros(2))


@pytest.mark.unit
def test_param_vector_shape_mismatch(garch_spec: ModelSpec, arch_spec: ModelSpec, rng: np.random.Generator) -> None:
    params = _random_params(arch_spec, rng)
    with pytest.raises(InvalidArgumentError):
        params.check_against(garch_spec)


@pytest.mark.unit
def test_softmax_weights_stay_below_one() -> None:
    weights = softmax_weights([-5.0, 3.0, 3.0])
    assert weights.sum() < 1.0
    assert (weights > 0.0).all()
    with pytest.raises(InvalidArgumentError):
        softmax_weights([1.0])


@pytest.mark.unit
@pytest.mark.parametrize("fixture_name", ["arch_spec", "garch_spec"])
def test_curves_satisfy_constraints(fixture_name: str, request: pytest.FixtureRequest, rng: np.random.Generator) -> None:
    spec: ModelSpec = request.getfixturevalue(fixture_name)
    for _ in range(50):
        curves = build_curves(spec, _random_params(spec, rng), None, 120)
        assert curves.constraint_violation(spec.kind) is None
        assert curves.coefficient_sum().max() < 1.0


@pytest.mark.unit
def test_igarch_curves_sum_to_one(igarch_spec: ModelSpec, rng: np.random.Generator) -> None:
    for _ in range(50):
        curves = build_curves(igarch_spec, _random_params(igarch_spec, rng), None, 120)
        np.testing.assert_allclose(curves.coefficient_sum(), 1.0, atol=1e-12)
        assert curves.b.min() >= 0.0
        curves.check_constraints(ModelKind.TV_IGARCH)


@pytest.mark.unit
def test_curves_on_longer_horizon_are_a_prefix(garch_spec: ModelSpec, rng: np.random.Generator) -> None:
    params = _random_params(garch_spec, rng)
    full = build_curves(garch_spec, params, BasisSet.from_spec(garch_spec), 100)
    prefix = build_curves(garch_spec, params, None, 60, horizon=100)

    np.testing.assert_allclose(prefix.stacked(), full.stacked()[:, :60])
    assert prefix.grid[-1] == pytest.approx(0.6)
    with pytest.raises(InvalidArgumentError):
        BasisSet.from_spec(garch_spec).designs(100, horizon=50)


@pytest.mark.unit
def test_constraint_violation_messages(garch_spec: ModelSpec) -> None:
    over = CoefficientCurves.constant(garch_spec, 1.0, [0.6], [0.5], 30)
    negative = CoefficientCurves.constant(garch_spec, -1.0, [0.1], [0.1], 30)

    assert "sum" in str(over.constraint_violation(ModelKind.TV_GARCH))
    assert "mu" in str(negative.constraint_violation(ModelKind.TV_GARCH))
    with pytest.raises(InvariantViolationError):
        over.check_constraints(ModelKind.TV_GARCH)


@pytest.mark.unit
def test_variance_recursion_by_hand(garch_spec: ModelSpec) -> None:
    data = np.array([1.0, -2.0, 0.5] + [0.0] * 20)
    curves = CoefficientCurves.constant(garch_spec, 0.1, [0.2], [0.5], data.size)
    variances = variance_recursion(garch_spec, curves, data, sigma0_sq=2.0)

    sigma1 = 0.1 + 0.2 * 0.0 + 0.5 * 2.0
    sigma2 = 0.1 + 0.2 * 1.0 + 0.5 * sigma1
    sigma3 = 0.1 + 0.2 * 4.0 + 0.5 * sigma2
    np.testing.assert_allclose(variances[:3], [sigma1, sigma2, sigma3])


@pytest.mark.unit
def test_arch_recursion_uses_zero_presample(arch_spec: ModelSpec) -> None:
    data = np.arange(1.0, 26.0)
    curves = CoefficientCurves.constant(arch_spec, 0.3, [0.4], [], data.size)
    variances = variance_recursion(arch_spec, curves, data)

    assert variances[0] == pytest.approx(0.3)
    assert variances[4] == pytest.approx(0.3 + 0.4 * 16.0)


@pytest.mark.unit
def test_constant_recursion_matches_general(garch_spec: ModelSpec, white_noise: SeriesData) -> None:
    curves = CoefficientCurves.constant(garch_spec, 0.2, [0.15], [0.7], 200)
    general = variance_recursion(garch_spec, curves, white_noise, sigma0_sq=1.3)
    filtered = constant_variance_recursion(0.2, [0.15], [0.7], white_noise, sigma0_sq=1.3)
    np.testing.assert_allclose(filtered, general, rtol=1e-12)


@pytest.mark.unit
def test_variance_recursion_argument_checks(garch_spec: ModelSpec) -> None:
    data = np.ones(30)
    curves = CoefficientCurves.constant(garch_spec, 0.1, [0.1], [0.1], 30)
    with pytest.raises(InvalidArgumentError):
        variance_recursion(garch_spec, curves, data)
    with pytest.raises(InvalidArgumentError):
        variance_recursion(garch_spec, curves, np.ones(31), sigma0_sq=1.0)
    with pytest.raises(InvariantViolationError):
        bad = CoefficientCurves.constant(garch_spec, -5.0, [0.1], [0.1], 30)
        variance_recursion(garch_spec, bad, data, sigma0_sq=1.0)
