"""
Method-key parsing and dispatch.

A method key names a base solver (jacobi, gs, sor, gabp, gabp-parallel, gabp-serial,
gabp-jacobi) with an optional "+steffensen" suffix, mirroring the row names of the
convergence-rate table.
"""

from dataclasses import dataclass
from typing import Optional, Union
import logging as L

import numpy.typing as npt

from common.config import (Acceleration, ClassicalConfig, ClassicalMethod, Schedule, SolverConfig,
                           SolverMode)
from common.errors import UnknownMethod
from common.matrix import SymmetricSparseMatrix
from common.results import SolveResult
from solvers.classical_solver import solve_classical, solve_gabp_jacobi_mode
from solvers.gabp_solver import solve_gabp
from solvers.steffensen_solver import solve_classical_steffensen

STEFFENSEN_SUFFIX = "+steffensen"

CLASSICAL_KEYS = {
    "jacobi": ClassicalMethod.JACOBI,
    "gs": ClassicalMethod.GAUSS_SEIDEL,
    "sor": ClassicalMethod.SOR,
}

GABP_KEYS = {
    "gabp": None,
    "gabp-parallel": Schedule.PARALLEL,
    "gabp-serial": Schedule.SERIAL,
    "gabp-jacobi": Schedule.PARALLEL,
}


@dataclass(frozen=True)
class MethodSpec:
    """A parsed method key."""
    key: str
    base: str
    steffensen: bool

    @property
    def is_gabp(self) -> bool:
        return self.base in GABP_KEYS


def parse_method_key(key: str) -> MethodSpec:
    """
    Parse a method key such as "gabp-serial+steffensen".

    Raises:
        UnknownMethod: If the base name is not registered
    """
    normalized = key.strip().lower()
    steffensen = normalized.endswith(STEFFENSEN_SUFFIX)
    base = normalized[: -len(STEFFENSEN_SUFFIX)] if steffensen else normalized
    if base not in CLASSICAL_KEYS and base not in GABP_KEYS:
        raise UnknownMethod(key)
    if steffensen and base == "gabp-jacobi":
        raise UnknownMethod(key)
    return MethodSpec(normalized, base, steffensen)


def _resolve_schedule(spec: MethodSpec, schedule: Optional[Schedule]) -> Schedule:
    fixed = GABP_KEYS[spec.base]
    if fixed is None:
        return schedule or Schedule.SERIAL
    if schedule is not None and schedule != fixed:
        raise ValueError(f"--schedule {schedule.value} conflicts with method {spec.key}")
    return fixed


def execute_method(A: SymmetricSparseMatrix, b: npt.ArrayLike, key: Union[str, MethodSpec],
                   epsilon: float = 1e-6, max_iters: int = 10_000, schedule: Optional[Schedule] = None,
                   omega: Union[float, str, None] = None, damping: float = 0.0,
                   record_trajectory: bool = False) -> SolveResult:
    """
    Run the solver named by a method key.

    Args:
        A (SymmetricSparseMatrix): The data matrix
        b (array-like): Observation vector
        key (str | MethodSpec): Method key
        epsilon (float): Convergence threshold
        max_iters (int): Iteration cap
        schedule (Schedule, optional): Schedule for the plain "gabp" key
        omega (float | "auto", optional): SOR weight, optimal when None or "auto"
        damping (float): GaBP message damping
        record_trajectory (bool): Keep one snapshot per iteration

    Returns:
        SolveResult: The solver outcome; result.method is the method key
    """
    spec = key if isinstance(key, MethodSpec) else parse_method_key(key)
    L.info(f"Executing method {spec.key} on n={A.n}")

    if spec.is_gabp:
        if spec.base == "gabp-jacobi":
            result = solve_gabp_jacobi_mode(A, b, ClassicalConfig(epsilon=epsilon, max_iters=max_iters,
                                                                  record_trajectory=record_trajectory))
        else:
            config = SolverConfig(
                epsilon=epsilon,
                max_iters=max_iters,
                schedule=_resolve_schedule(spec, schedule),
                damping=damping,
                acceleration=Acceleration.STEFFENSEN if spec.steffensen else Acceleration.NONE,
                mode=SolverMode.GABP,
                record_trajectory=record_trajectory,
            )
            result = solve_gabp(A, b, config)
    else:
        config = ClassicalConfig(
            method=CLASSICAL_KEYS[spec.base],
            omega=None if omega in (None, "auto") else float(omega),
            epsilon=epsilon,
            max_iters=max_iters,
            record_trajectory=record_trajectory,
        )
        result = solve_classical_steffensen(A, b, config) if spec.steffensen else solve_classical(A, b, config)

    result.method = spec.key
    return result
