"""Result records returned by every solver."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from common.matrix import DenseVector


class SolveStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITERS_EXCEEDED = "max_iters_exceeded"
    DIVERGED = "diverged"


@dataclass
class SolveResult:
    """
    Outcome of an iterative solve.

    Attributes:
        x (DenseVector): Solution estimate, the best finite iterate when not converged
        iterations (int): Completed rounds (one parallel round or one full sweep each)
        converged (bool): True when the change test passed within max_iters
        residual_inf (float): ||A x - b||_inf
        status (SolveStatus): converged, max_iters_exceeded or diverged
        P_marginal (DenseVector, optional): Marginal precisions P_i (GaBP only)
        trajectory (list, optional): One iterate per completed round
        initial (DenseVector, optional): The starting iterate
        method (str): Method key that produced the result
        metadata (dict): Method specific details (omega, node order, accounting)
    """
    x: DenseVector
    iterations: int
    converged: bool
    residual_inf: float
    status: SolveStatus
    P_marginal: Optional[DenseVector] = None
    trajectory: Optional[List[DenseVector]] = None
    initial: Optional[DenseVector] = None
    method: str = ""
    metadata: Dict[str, Any] = field(default_factory=dict)

    def trajectory_array(self) -> np.ndarray:
        """Return the starting iterate followed by the trajectory as a 2-D array."""
        rows = ([self.initial] if self.initial is not None else []) + list(self.trajectory or [])
        return np.vstack(rows) if rows else np.empty((0, len(self.x)))
