"""
Classical stationary iterations used as baselines: Jacobi, Gauss-Seidel and SOR.

All three start from x_i = b_i / A_ii and stop when the largest component change
between consecutive iterates is at most epsilon. Gauss-Seidel is the serial sweep of
the Jacobi update and SOR relaxes each Gauss-Seidel update with weight omega; the
Jacobi variant of GaBP (zero message precisions, no exclusion of the recipient) lands
on the Jacobi iterates.
"""

from typing import Callable, List, Optional, Tuple
import logging as L

import numpy as np
import numpy.typing as npt
from scipy import sparse

from common.config import ClassicalConfig, ClassicalMethod, Schedule, SolverConfig, SolverMode
from common.diagnostics import power_iteration
from common.errors import OmegaUndefined, ZeroDiagonal
from common.matrix import DenseVector, SymmetricSparseMatrix, check_vector
from common.oracle import residual_inf
from common.results import SolveResult, SolveStatus

StepFunction = Callable[[DenseVector], DenseVector]

JACOBI_RADIUS_ITERS = 10_000
JACOBI_RADIUS_TOL = 1e-10
JACOBI_RADIUS_SEED = 0


def _diagonal(A: SymmetricSparseMatrix) -> DenseVector:
    d = A.diagonal()
    zero = np.flatnonzero(d == 0.0)
    if zero.size:
        raise ZeroDiagonal(int(zero[0]))
    return d


def jacobi_step(A: SymmetricSparseMatrix, b: npt.ArrayLike) -> StepFunction:
    """Return x -> D^-1 (b - (A - D) x), the synchronous Jacobi update."""
    b = check_vector(A, b)
    d = _diagonal(A)
    off = (A.to_csr() - sparse.diags(d)).tocsr()
    off.eliminate_zeros()

    def step(x: DenseVector) -> DenseVector:
        return (b - off @ x) / d

    return step


def sor_step(A: SymmetricSparseMatrix, b: npt.ArrayLike, omega: float) -> StepFunction:
    """
    Return one in-place SOR sweep in ascending index order.

    x_i <- (1 - omega) x_i + omega (b_i - sum_{k<i} A_ik x_k^new - sum_{k>i} A_ik x_k^old) / A_ii;
    omega = 1 is the Gauss-Seidel sweep.
    """
    b = check_vector(A, b)
    d = _diagonal(A)
    rows: List[List[Tuple[int, float]]] = [list(A.off_diagonal(i)) for i in range(A.n)]

    def step(x: DenseVector) -> DenseVector:
        x = x.copy()
        for i, row in enumerate(rows):
            s = b[i]
            for k, a in row:
                s -= a * x[k]
            x[i] = (1.0 - omega) * x[i] + omega * (s / d[i])
        return x

    return step


def iterate_fixed_point(step: StepFunction, x0: DenseVector, epsilon: float, max_iters: int,
                        record_trajectory: bool = False) -> Tuple[DenseVector, int, SolveStatus, Optional[List[DenseVector]]]:
    """
    Iterate x <- step(x) until the largest component change is at most epsilon.

    Returns:
        tuple: (last finite iterate, completed iterations, status, trajectory or None)
    """
    x = x0.copy()
    trajectory: List[DenseVector] = []
    for iteration in range(1, max_iters + 1):
        x_new = step(x)
        if not np.all(np.isfinite(x_new)):
            L.error(f"Iteration {iteration} produced non-finite values")
            return x, iteration - 1, SolveStatus.DIVERGED, trajectory if record_trajectory else None
        if record_trajectory:
            trajectory.append(x_new.copy())
        change = np.max(np.abs(x_new - x), initial=0.0)
        x = x_new
        if change <= epsilon:
            return x, iteration, SolveStatus.CONVERGED, trajectory if record_trajectory else None
    L.warning(f"No convergence within {max_iters} iterations")
    return x, max_iters, SolveStatus.MAX_ITERS_EXCEEDED, trajectory if record_trajectory else None


def _solve(A: SymmetricSparseMatrix, b: npt.ArrayLike, step: StepFunction, config: ClassicalConfig,
           method: str, **metadata) -> SolveResult:
    b = check_vector(A, b)
    x0 = b / _diagonal(A)
    L.info(f"{method} solve n={A.n}")
    x, iterations, status, trajectory = iterate_fixed_point(step, x0, config.epsilon, config.max_iters,
                                                            config.record_trajectory)
    return SolveResult(
        x=x,
        iterations=iterations,
        converged=status == SolveStatus.CONVERGED,
        residual_inf=residual_inf(A, b, x),
        status=status,
        trajectory=trajectory,
        initial=x0,
        method=method,
        metadata={"sweep_order": "ascending", "accounting": "iterations", **metadata},
    )


def solve_jacobi(A: SymmetricSparseMatrix, b: npt.ArrayLike, config: Optional[ClassicalConfig] = None) -> SolveResult:
    """
    Solve A x = b with the Jacobi iteration mu_i = A_ii^-1 (b_i - sum_{k != i} A_ki mu_k).

    Args:
        A (SymmetricSparseMatrix): The data matrix
        b (array-like): Observation vector
        config (ClassicalConfig, optional): Tolerance, cap and trajectory flag

    Returns:
        SolveResult: Iterate, count and status; converged=False past max_iters
    """
    config = config or ClassicalConfig(method=ClassicalMethod.JACOBI)
    return _solve(A, b, jacobi_step(A, b), config, "jacobi")


def solve_gauss_seidel(A: SymmetricSparseMatrix, b: npt.ArrayLike,
                       config: Optional[ClassicalConfig] = None) -> SolveResult:
    """Solve A x = b with in-place Gauss-Seidel sweeps in ascending index order."""
    config = config or ClassicalConfig(method=ClassicalMethod.GAUSS_SEIDEL)
    return _solve(A, b, sor_step(A, b, 1.0), config, "gs")


def jacobi_spectral_radius(A: SymmetricSparseMatrix, max_iters: int = JACOBI_RADIUS_ITERS,
                           tol: float = JACOBI_RADIUS_TOL) -> float:
    """
    Estimate the spectral radius of the Jacobi iteration matrix D^-1 (D - A).

    The iteration matrix has signed entries, so its dominant eigenvector can be orthogonal
    to the all-ones vector (R4 is such a case); the power iteration starts from a
    fixed-seed Gaussian vector instead.
    """
    d = _diagonal(A)
    csr = A.to_csr()
    start = np.random.default_rng(JACOBI_RADIUS_SEED).standard_normal(A.n)
    return power_iteration(lambda x: x - (csr @ x) / d, A.n, max_iters, tol, start=start).value


def optimal_sor_omega(A: SymmetricSparseMatrix) -> float:
    """
    Return the classical optimal relaxation weight omega* = 2 / (1 + sqrt(1 - rho_J^2)).

    Raises:
        OmegaUndefined: If rho_J >= 1
    """
    rho = jacobi_spectral_radius(A)
    if rho >= 1.0:
        raise OmegaUndefined(rho)
    omega = 2.0 / (1.0 + np.sqrt(1.0 - rho * rho))
    L.info(f"Optimal SOR weight {omega:.6f} from Jacobi spectral radius {rho:.6f}")
    return float(omega)


def solve_sor(A: SymmetricSparseMatrix, b: npt.ArrayLike, omega: Optional[float] = None,
              config: Optional[ClassicalConfig] = None) -> SolveResult:
    """
    Solve A x = b with successive over-relaxation.

    Args:
        A (SymmetricSparseMatrix): The data matrix
        b (array-like): Observation vector
        omega (float, optional): Weight in (0, 2); falls back to config.omega, then to
            the optimal weight
        config (ClassicalConfig, optional): Tolerance, cap and trajectory flag

    Raises:
        OmegaUndefined: If the optimal weight is requested but does not exist
        ValueError: If omega is outside (0, 2)
    """
    config = config or ClassicalConfig(method=ClassicalMethod.SOR)
    if omega is None:
        omega = config.omega if config.omega is not None else optimal_sor_omega(A)
    if not 0.0 < omega < 2.0:
        raise ValueError(f"omega must lie in (0, 2), got {omega}")
    return _solve(A, b, sor_step(A, b, omega), config, "sor", omega=omega)


def solve_gabp_jacobi_mode(A: SymmetricSparseMatrix, b: npt.ArrayLike,
                           config: Optional[ClassicalConfig] = None) -> SolveResult:
    """
    Run the GaBP machinery with message precisions pinned to zero and no exclusion of
    the recipient; its node means are the Jacobi iterates.
    """
    from solvers.gabp_solver import solve_gabp

    config = config or ClassicalConfig(method=ClassicalMethod.JACOBI)
    gabp_config = SolverConfig(epsilon=config.epsilon, max_iters=config.max_iters, schedule=Schedule.PARALLEL,
                               mode=SolverMode.JACOBI_VARIANT, record_trajectory=config.record_trajectory)
    result = solve_gabp(A, b, gabp_config)
    result.method = "gabp-jacobi-mode"
    return result


def solve_classical(A: SymmetricSparseMatrix, b: npt.ArrayLike, config: ClassicalConfig) -> SolveResult:
    """Dispatch on config.method."""
    if config.method == ClassicalMethod.JACOBI:
        return solve_jacobi(A, b, config)
    if config.method == ClassicalMethod.GAUSS_SEIDEL:
        return solve_gauss_seidel(A, b, config)
    return solve_sor(A, b, config=config)
