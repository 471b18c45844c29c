import networkx as nx
import numpy as np
import pytest

from common.diagnostics import (GUARANTEED_VERDICT, NO_GUARANTEE_VERDICT, component_trees, diagnose,
                                estimate_spectral_radius_abs_shift, is_strictly_diagonally_dominant,
                                is_tree, power_iteration, spectral_radius_abs_shift)
from common.matrix import build_graph, matrix_from_dense
from tests.conftest import identity


def _brute_force_rho(A) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(np.abs(np.eye(A.n) - A.to_dense())))))


@pytest.mark.parametrize("name, expected", [("R3", 0.9008), ("R4", 0.8747)])
def test_fixture_spectral_radii(request, name, expected):
    A = request.getfixturevalue(name)
    rho = spectral_radius_abs_shift(A)
    assert abs(rho - expected) <= 5e-5
    assert abs(rho - _brute_force_rho(A)) <= 1e-9


def test_fixtures_are_not_diagonally_dominant(R3, R4):
    assert not is_strictly_diagonally_dominant(R3)
    assert not is_strictly_diagonally_dominant(R4)


def test_dominance_requires_strict_inequality():
    assert is_strictly_diagonally_dominant(matrix_from_dense([[3.0, 1.0], [1.0, 2.0]]))
    assert not is_strictly_diagonally_dominant(matrix_from_dense([[1.0, 1.0], [1.0, 2.0]]))


def test_identity_radius_is_zero():
    assert spectral_radius_abs_shift(identity(5)) == 0.0


def test_bipartite_pair_still_converges(divergent_2x2):
    # |I - A| = [[0, 2], [2, 0]] has eigenvalues +2 and -2
    result = estimate_spectral_radius_abs_shift(divergent_2x2)
    assert result.converged
    assert result.value == pytest.approx(2.0, abs=1e-12)


def test_power_iteration_reports_cap():
    M = np.diag([1.0, 0.999999])
    result = power_iteration(lambda v: M @ v, 2, max_iters=3, tol=0.0)
    assert not result.converged
    assert result.iterations == 3


def test_signed_operator_needs_a_generic_start():
    M = np.array([[0.2, -0.7], [-0.7, 0.2]])
    ones = power_iteration(lambda v: M @ v, 2)
    assert ones.value == pytest.approx(0.5, abs=1e-10)
    generic = power_iteration(lambda v: M @ v, 2, start=[1.0, 0.25])
    assert generic.converged
    assert generic.value == pytest.approx(0.9, abs=1e-8)


def test_random_radii_match_eigensolve():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = int(rng.integers(2, 5))
        upper = np.triu(rng.uniform(-1, 1, size=(n, n)), 1)
        A = matrix_from_dense(np.eye(n) * 2.0 + upper + upper.T)
        assert spectral_radius_abs_shift(A) == pytest.approx(_brute_force_rho(A), abs=1e-8)


def test_tree_detection():
    chain = matrix_from_dense([[4, 1, 0], [1, 4, 1], [0, 1, 4]])
    cycle = matrix_from_dense([[4, 1, 1], [1, 4, 1], [1, 1, 4]])
    assert is_tree(build_graph(chain))
    assert not is_tree(build_graph(cycle))
    assert is_tree(build_graph(identity(3)))


def test_component_report_orders_by_smallest_node():
    dense = np.eye(6) * 4.0
    for i, j in [(0, 1), (2, 3), (3, 4), (4, 2)]:
        dense[i, j] = dense[j, i] = 1.0
    g = build_graph(matrix_from_dense(dense))
    assert component_trees(g) == (True, False, True)
    assert not is_tree(g)


def test_tree_flag_agrees_with_networkx():
    rng = np.random.default_rng(5)
    for _ in range(20):
        graph = nx.gnp_random_graph(8, 0.3, seed=int(rng.integers(1 << 30)))
        dense = np.eye(8) * 10.0
        for i, j in graph.edges():
            dense[i, j] = dense[j, i] = 1.0
        assert is_tree(build_graph(matrix_from_dense(dense))) == nx.is_forest(graph)


def test_diagnose_R3(R3):
    report = diagnose(R3)
    assert not report.strictly_diagonally_dominant
    assert report.spectral_radius_estimate == pytest.approx(0.9008, abs=5e-5)
    assert not report.is_tree
    assert report.convergence_guaranteed
    assert report.verdict == GUARANTEED_VERDICT


def test_diagnose_dominant_chain():
    report = diagnose(matrix_from_dense([[4, 1, 0], [1, 4, 1], [0, 1, 4]]))
    assert report.strictly_diagonally_dominant
    assert report.is_tree
    assert report.verdict == GUARANTEED_VERDICT


def test_diagnose_no_guarantee(divergent_2x2):
    report = diagnose(divergent_2x2)
    assert not report.strictly_diagonally_dominant
    assert report.spectral_radius_estimate == pytest.approx(2.0, abs=1e-9)
    assert report.verdict == NO_GUARANTEE_VERDICT
