import numpy as np
import pytest

from common.errors import DimensionMismatch, SingularMatrix
from common.matrix import matrix_from_dense
from common.oracle import direct_solve, quadratic_form, residual_inf


def test_direct_solve_two_by_two(two_by_two):
    np.testing.assert_allclose(direct_solve(two_by_two, [3.0, 3.0]), [1.0, 1.0], atol=1e-14)


def test_direct_solve_needs_pivoting():
    # tiny leading pivot forces a row swap
    A = matrix_from_dense([[1e-20, 1.0], [1.0, 1.0]])
    np.testing.assert_allclose(direct_solve(A, [1.0, 2.0]), [1.0, 1.0], atol=1e-12)


def test_singular_matrix():
    with pytest.raises(SingularMatrix):
        direct_solve(matrix_from_dense([[1.0, 1.0], [1.0, 1.0]]), [1.0, 1.0])


def test_dimension_mismatch(two_by_two):
    with pytest.raises(DimensionMismatch):
        direct_solve(two_by_two, [1.0, 2.0, 3.0])


def test_quadratic_form_is_minimized_at_solution(R3):
    b = np.ones(3)
    x = direct_solve(R3, b)
    q = quadratic_form(R3, b, x)
    rng = np.random.default_rng(3)
    for _ in range(20):
        assert quadratic_form(R3, b, x + 1e-3 * rng.standard_normal(3)) > q


def test_residual(two_by_two):
    assert residual_inf(two_by_two, [3.0, 3.0], [1.0, 1.0]) == 0.0
    assert residual_inf(two_by_two, [3.0, 3.0], [0.0, 0.0]) == 3.0
    assert residual_inf(two_by_two, [3.0, 3.0], [np.nan, 0.0]) == float("inf")
