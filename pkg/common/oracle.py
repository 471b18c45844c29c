"""Direct-solve oracle and the quadratic form whose stationary point is the solution."""

import warnings
import logging as L

import numpy as np
import numpy.typing as npt
from scipy import linalg

from common.errors import SingularMatrix
from common.matrix import DenseVector, SymmetricSparseMatrix, check_vector

PIVOT_TOLERANCE = 1e-12


def quadratic_form(A: SymmetricSparseMatrix, b: npt.ArrayLike, x: npt.ArrayLike) -> float:
    """
    Evaluate q(x) = x^T A x / 2 - b^T x.

    Args:
        A (SymmetricSparseMatrix): The data matrix
        b (array-like): Observation vector
        x (array-like): Point of evaluation

    Returns:
        float: The value of the quadratic form

    Raises:
        DimensionMismatch: If b or x does not have length A.n
    """
    b = check_vector(A, b, "b")
    x = check_vector(A, x, "x")
    return float(x @ A.matvec(x) / 2.0 - b @ x)


def direct_solve(A: SymmetricSparseMatrix, b: npt.ArrayLike) -> DenseVector:
    """
    Solve A x = b by LU factorization with partial pivoting.

    This is the ground truth every iterative method is compared against.

    Args:
        A (SymmetricSparseMatrix): The data matrix
        b (array-like): Observation vector

    Returns:
        DenseVector: The solution x* = A^-1 b

    Raises:
        SingularMatrix: If a pivot magnitude falls below 1e-12
        DimensionMismatch: If b does not have length A.n
    """
    b = check_vector(A, b, "b")
    with warnings.catch_warnings():
        # exact zero pivots are reported below through SingularMatrix
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(A.to_dense(), check_finite=True)
    pivots = np.abs(np.diag(lu))
    if pivots.min() < PIVOT_TOLERANCE:
        smallest = int(np.argmin(pivots))
        L.error(f"Singular matrix: pivot {smallest} has magnitude {pivots[smallest]:.3e}")
        raise SingularMatrix(f"Pivot {smallest} has magnitude {pivots[smallest]:.3e} < {PIVOT_TOLERANCE}")
    return linalg.lu_solve((lu, piv), b)


def residual_inf(A: SymmetricSparseMatrix, b: npt.ArrayLike, x: npt.ArrayLike) -> float:
    """Return ||A x - b||_inf, or inf when x is not finite."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        return float("inf")
    return float(np.max(np.abs(A.matvec(x) - np.asarray(b, dtype=np.float64)), initial=0.0))
