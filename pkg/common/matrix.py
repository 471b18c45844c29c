"""
Symmetric sparse matrix storage and the graph topology it induces.

The matrix is kept as an adjacency map of rows, because message passing walks the
neighbourhood N(i) of every node. An off-diagonal entry is an edge exactly when its
stored value is non-zero; no tolerance is applied.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Tuple
import logging as L

import numpy as np
import numpy.typing as npt
from scipy import sparse

from common.errors import AsymmetricInput, DimensionMismatch, IndexOutOfRange, MissingDiagonal

DenseVector = npt.NDArray[np.float64]
Triplet = Tuple[int, int, float]


class SymmetricSparseMatrix:
    """
    The data matrix A of a symmetric linear system A x = b.

    Every off-diagonal value is stored in both rows, so reading (i, j) and (j, i)
    returns the same Python float. Instances are treated as immutable once built;
    use build_matrix to construct one.

    Attributes:
        n (int): Dimension of the matrix
    """

    def __init__(self, n: int, rows: Dict[int, Dict[int, float]]) -> None:
        self.n = n
        self._rows = rows
        self._csr = None

    def get(self, i: int, j: int) -> float:
        """Return A_ij, zero when the entry is not stored."""
        return self._rows[i].get(j, 0.0)

    def diagonal(self) -> DenseVector:
        """Return the diagonal as a vector."""
        return np.array([self._rows[i][i] for i in range(self.n)], dtype=np.float64)

    def row(self, i: int) -> Dict[int, float]:
        """Return a copy of the stored entries of row i, diagonal included."""
        return dict(self._rows[i])

    def off_diagonal(self, i: int) -> Iterator[Tuple[int, float]]:
        """Yield (k, A_ik) for every stored k != i in ascending k."""
        for k in sorted(self._rows[i]):
            if k != i:
                yield k, self._rows[i][k]

    def entries(self) -> Iterator[Triplet]:
        """Yield the upper triangle (i <= j) as triplets, row by row."""
        for i in range(self.n):
            for j in sorted(self._rows[i]):
                if j >= i:
                    yield i, j, self._rows[i][j]

    @property
    def nnz(self) -> int:
        """Number of stored entries counting both triangles."""
        return sum(len(r) for r in self._rows.values())

    def to_dense(self) -> npt.NDArray[np.float64]:
        """Return A as a dense array."""
        dense = np.zeros((self.n, self.n), dtype=np.float64)
        for i, r in self._rows.items():
            for j, value in r.items():
                dense[i, j] = value
        return dense

    def to_csr(self) -> sparse.csr_matrix:
        """Return A as a scipy CSR matrix for fast products (built once, then cached)."""
        if self._csr is None:
            rows, cols, values = [], [], []
            for i, r in self._rows.items():
                for j, value in r.items():
                    rows.append(i)
                    cols.append(j)
                    values.append(value)
            self._csr = sparse.csr_matrix((values, (rows, cols)), shape=(self.n, self.n))
        return self._csr

    def matvec(self, x: DenseVector) -> DenseVector:
        """Return A @ x."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise DimensionMismatch(f"Vector of length {x.shape[0]} does not match dimension {self.n}")
        return self.to_csr() @ x

    def __repr__(self) -> str:
        return f"SymmetricSparseMatrix(n={self.n}, nnz={self.nnz})"


@dataclass(frozen=True)
class GraphTopology:
    """
    Neighbourhoods of the pairwise graph induced by the non-zero pattern of A.

    Attributes:
        neighbors (tuple): neighbors[i] is the ascending tuple N(i)
    """
    neighbors: Tuple[Tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.neighbors)

    def edges(self) -> List[Tuple[int, int]]:
        """Return the undirected edges as (i, j) with i < j."""
        return [(i, j) for i, nbrs in enumerate(self.neighbors) for j in nbrs if i < j]

    def directed_edges(self) -> List[Tuple[int, int]]:
        """Return every directed edge i->j, grouped by source in ascending order."""
        return [(i, j) for i, nbrs in enumerate(self.neighbors) for j in nbrs]


def build_matrix(n: int, triplets: Iterable[Triplet]) -> SymmetricSparseMatrix:
    """
    Build a symmetric matrix from (i, j, value) triplets.

    Either triangle may be supplied. A pair given twice must carry exactly the same
    value. Zero off-diagonal values are accepted but not stored, since they are not
    edges. Every diagonal entry must be present and non-zero.

    Args:
        n (int): Dimension of the matrix, at least 1
        triplets (iterable): (i, j, value) entries with indices in [0, n)

    Returns:
        SymmetricSparseMatrix: The validated matrix

    Raises:
        IndexOutOfRange: If an index is outside [0, n)
        AsymmetricInput: If two triplets for the same pair disagree
        MissingDiagonal: If some A_ii is absent or zero
    """
    if n < 1:
        raise DimensionMismatch(f"Matrix dimension must be at least 1, got {n}")

    seen: Dict[Tuple[int, int], float] = {}
    for i, j, value in triplets:
        i, j, value = int(i), int(j), float(value)
        if not (0 <= i < n and 0 <= j < n):
            raise IndexOutOfRange(i, j, n)
        key = (min(i, j), max(i, j))
        if key in seen and seen[key] != value:
            raise AsymmetricInput(i, j)
        seen[key] = value

    rows: Dict[int, Dict[int, float]] = {i: {} for i in range(n)}
    for (i, j), value in seen.items():
        if i != j and value == 0.0:
            continue
        rows[i][j] = value
        rows[j][i] = value

    for i in range(n):
        if rows[i].get(i, 0.0) == 0.0:
            raise MissingDiagonal(i)

    L.debug(f"Built symmetric matrix n={n} with {len(seen)} distinct entries")
    return SymmetricSparseMatrix(n, rows)


def matrix_from_dense(dense: npt.ArrayLike) -> SymmetricSparseMatrix:
    """Build a matrix from a dense square array, reading its upper triangle and checking symmetry."""
    dense = np.asarray(dense, dtype=np.float64)
    if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
        raise DimensionMismatch(f"Expected a square array, got shape {dense.shape}")
    n = dense.shape[0]
    triplets = [(i, j, dense[i, j]) for i in range(n) for j in range(n) if i == j or dense[i, j] != 0.0]
    return build_matrix(n, triplets)


def build_graph(A: SymmetricSparseMatrix) -> GraphTopology:
    """
    Extract the neighbourhoods N(i) = {k != i : A_ki != 0}.

    Args:
        A (SymmetricSparseMatrix): The data matrix

    Returns:
        GraphTopology: Ascending neighbour tuples per node
    """
    return GraphTopology(tuple(tuple(k for k, _ in A.off_diagonal(i)) for i in range(A.n)))


def check_vector(A: SymmetricSparseMatrix, b: npt.ArrayLike, name: str = "b") -> DenseVector:
    """Return b as a float vector, raising DimensionMismatch if its length is not A.n."""
    vec = np.asarray(b, dtype=np.float64)
    if vec.ndim != 1 or vec.shape[0] != A.n:
        raise DimensionMismatch(f"Vector {name} has shape {vec.shape}, expected ({A.n},)")
    return vec
