"""Tests for the clamped cubic B-spline basis."""

import numpy as np
import pytest
from scipy.interpolate import BSpline

from src.tvvol.models.common import InvalidArgumentError
from src.tvvol.models.spline import SplineBasis, auto_interior_knots, design_matrix, eval_basis


@pytest.mark.unit
@pytest.mark.parametrize("knots", [0, 1, 4, 6, 10])
def test_basis_size_is_knots_plus_four(knots: int) -> None:
    basis = SplineBasis(knots)
    assert basis.num_basis == knots + 4
    assert basis.knots.size == knots + 8


@pytest.mark.unit
@pytest.mark.parametrize("knots", [0, 3, 6])
def test_partition_of_unity_and_nonnegativity(knots: int) -> None:
    x = np.linspace(0.0, 1.0, 501)
    values = SplineBasis(knots).evaluate(x)

    assert values.shape == (501, knots + 4)
    assert values.min() >= 0.0
    np.testing.assert_allclose(values.sum(axis=1), 1.0, atol=1e-12)


@pytest.mark.unit
def test_clamped_endpoints() -> None:
    basis = SplineBasis(4)
    at_zero = eval_basis(basis, 0.0)
    at_one = eval_basis(basis, 1.0)

    assert at_zero[0] == pytest.approx(1.0)
    assert at_one[-1] == pytest.approx(1.0)
    assert np.count_nonzero(at_zero) == 1
    assert np.count_nonzero(at_one) == 1


@pytest.mark.unit
@pytest.mark.parametrize("knots", [2, 5])
def test_matches_reference_bspline(knots: int) -> None:
    basis = SplineBasis(knots)
    x = np.linspace(0.0, 0.995, 97)
    ours = basis.evaluate(x)

    for j in range(basis.num_basis):
        coefficients = np.zeros(basis.num_basis)
        coefficients[j] = 1.0
        reference = BSpline(basis.knots, coefficients, 3)(x)
        np.testing.assert_allclose(ours[:, j], reference, atol=1e-12)


@pytest.mark.unit
def test_at_most_four_nonzero_per_point() -> None:
    values = SplineBasis(8).evaluate(np.linspace(0.0, 1.0, 333))
    assert (np.count_nonzero(values > 0.0, axis=1) <= 4).all()


@pytest.mark.unit
def test_design_matrix_uses_grid_i_over_n() -> None:
    basis = SplineBasis(3)
    matrix = design_matrix(basis, 50)

    assert matrix.shape == (50, 7)
    np.testing.assert_allclose(matrix[9], basis.evaluate(10 / 50)[0])
    np.testing.assert_allclose(matrix[-1], eval_basis(basis, 1.0))
    assert not matrix.flags.writeable


@pytest.mark.unit
def test_rejects_points_outside_unit_interval() -> None:
    with pytest.raises(InvalidArgumentError):
        SplineBasis(2).evaluate(np.array([0.5, 1.2]))
    with pytest.raises(InvalidArgumentError):
        SplineBasis(2).evaluate(-0.01)


@pytest.mark.unit
def test_rejects_negative_knot_count() -> None:
    with pytest.raises(InvalidArgumentError):
        SplineBasis(-1)


@pytest.mark.unit
def test_design_matrix_needs_positive_length() -> None:
    with pytest.raises(InvalidArgumentError):
        design_matrix(SplineBasis(2), 0)


@pytest.mark.unit
@pytest.mark.parametrize("n,expected", [(50, 4), (200, 4), (500, 5), (1000, 6)])
def test_auto_interior_knots_schedule(n: int, expected: int) -> None:
    assert auto_interior_knots(n) == expected


@pytest.mark.unit
def test_auto_interior_knots_grows_slowly() -> None:
    counts = [auto_interior_knots(n) for n in (1000, 5000, 20000, 100000)]
    assert counts == sorted(counts)
    assert counts[-1] <= 10
