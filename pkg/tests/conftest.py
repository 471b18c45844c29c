import numpy as np
import pytest

from cdma.fixtures import load_fixture
from common.matrix import SymmetricSparseMatrix, build_matrix, matrix_from_dense

# Reference iteration counts for the bench at 1e-6 (None: no convergence)
REFERENCE_COUNTS = {
    "jacobi": (111, 24),
    "gs": (26, 26),
    "gabp-parallel": (23, 24),
    "sor": (17, 14),
    "gabp-serial": (16, 13),
    "jacobi+steffensen": (59, None),
    "gabp-parallel+steffensen": (13, 13),
    "gabp-serial+steffensen": (9, 7),
}

# Counts this implementation produces under the max-change stopping test at 1e-6.
# Accelerated GaBP cells are bounded by their plain rows instead of pinned.
MEASURED_COUNTS = {
    "jacobi": (122, 24),
    "gs": (29, 26),
    "gabp-parallel": (28, 27),
    "sor": (19, 14),
    "gabp-serial": (19, 15),
    "jacobi+steffensen": (129, 12),
}

# Cells where the measured count lies within 2 of the reference one
REPRODUCED_CELLS = (("jacobi", "R4"), ("gs", "R4"), ("sor", "R4"), ("gabp-serial", "R4"))


@pytest.fixture(scope="session")
def R3() -> SymmetricSparseMatrix:
    return load_fixture("R3").R


@pytest.fixture(scope="session")
def R4() -> SymmetricSparseMatrix:
    return load_fixture("R4").R


@pytest.fixture
def two_by_two() -> SymmetricSparseMatrix:
    return matrix_from_dense([[2.0, 1.0], [1.0, 2.0]])


@pytest.fixture
def divergent_2x2() -> SymmetricSparseMatrix:
    return matrix_from_dense([[1.0, 2.0], [2.0, 1.0]])


def identity(n: int) -> SymmetricSparseMatrix:
    return build_matrix(n, [(i, i, 1.0) for i in range(n)])


def random_dominant(rng: np.random.Generator, n: int, density: float = 0.5) -> SymmetricSparseMatrix:
    """Random symmetric strictly diagonally dominant matrix with positive diagonal."""
    upper = np.triu(rng.uniform(-1.0, 1.0, size=(n, n)) * (rng.random((n, n)) < density), 1)
    off = upper + upper.T
    dense = off + np.diag(np.abs(off).sum(axis=1) + rng.uniform(0.5, 1.5, size=n))
    return matrix_from_dense(dense)


def random_walk_summable(rng: np.random.Generator, n: int, density: float = 0.5,
                         target: float = 0.8) -> SymmetricSparseMatrix:
    """Random unit-diagonal matrix with rho(|I - A|) = target < 1, not necessarily dominant."""
    upper = np.triu(rng.uniform(-1.0, 1.0, size=(n, n)) * (rng.random((n, n)) < density), 1)
    off = upper + upper.T
    rho = np.max(np.abs(np.linalg.eigvalsh(np.abs(off)))) if np.any(off) else 0.0
    scale = target / rho if rho > 0 else 0.0
    return matrix_from_dense(np.eye(n) - scale * off)


def random_tree(rng: np.random.Generator, n: int, dominant: bool = True) -> SymmetricSparseMatrix:
    """Random tree-structured symmetric matrix (each node k > 0 attaches to a random earlier node)."""
    dense = np.zeros((n, n))
    for k in range(1, n):
        parent = int(rng.integers(0, k))
        value = rng.uniform(0.2, 1.0) * rng.choice([-1.0, 1.0])
        dense[k, parent] = dense[parent, k] = value
    diag = np.abs(dense).sum(axis=1) + rng.uniform(0.5, 1.5, size=n) if dominant else rng.uniform(1.0, 2.0, size=n)
    return matrix_from_dense(dense + np.diag(diag))
