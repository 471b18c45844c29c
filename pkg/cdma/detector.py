"""The decorrelating multiuser detector: decisions sign(R^-1 y)."""

from typing import Optional
import logging as L

import numpy as np
import numpy.typing as npt

from common.config import Schedule, SolverConfig
from common.errors import Diverged
from common.matrix import SymmetricSparseMatrix, check_vector
from common.oracle import direct_solve
from solvers.gabp_solver import solve_gabp

SOLVERS = ("gabp", "direct")


def signum(x: npt.ArrayLike) -> npt.NDArray[np.int8]:
    """Elementwise sign with sign(0) = +1."""
    return np.where(np.asarray(x) >= 0.0, 1, -1).astype(np.int8)


def decorrelate(R: SymmetricSparseMatrix, y: npt.ArrayLike, solver: str = "gabp",
                config: Optional[SolverConfig] = None) -> npt.NDArray[np.int8]:
    """
    Detect the transmitted bits of every user.

    Args:
        R (SymmetricSparseMatrix): Code cross-correlation matrix
        y (array-like): Matched-filter outputs, one per user
        solver (str): "gabp" (serial GaBP unless config says otherwise) or "direct"
        config (SolverConfig, optional): Settings of the GaBP solve

    Returns:
        ndarray: +/-1 decision per user

    Raises:
        Diverged: If GaBP does not converge
        ValueError: If solver is unknown
    """
    y = check_vector(R, y, "y")
    if solver == "direct":
        return signum(direct_solve(R, y))
    if solver != "gabp":
        raise ValueError(f"Unknown detector solver {solver}; expected one of {SOLVERS}")

    result = solve_gabp(R, y, config or SolverConfig(schedule=Schedule.SERIAL))
    if not result.converged:
        L.error(f"Decorrelator solve ended with status {result.status.value}")
        raise Diverged(f"GaBP did not converge ({result.status.value} after {result.iterations} rounds)")
    return signum(result.x)
