"""
Aitken delta-squared extrapolation and Steffensen's iterations over any one-round map.

Starting from x0, two rounds give x1 and x2, and the componentwise extrapolation

    y = x0 - (x1 - x0)^2 / (x2 - 2 x1 + x0)

replaces x0. Every underlying round counts as one iteration and the change test runs
after each of them, so counts compare directly with unaccelerated solves.

GaBP is accelerated differently: its messages are never restarted from extrapolated
values. Only the node-mean sequence is extrapolated, over a sliding window, and the
estimates serve as an earlier stopping point for otherwise plain rounds.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Deque, List, Optional
import logging as L

import numpy as np
import numpy.typing as npt

from common.config import ClassicalConfig, ClassicalMethod, Schedule, SolverConfig, SolverMode
from common.errors import DimensionMismatch, SolverError
from common.matrix import DenseVector, SymmetricSparseMatrix, check_vector
from common.oracle import residual_inf
from common.results import SolveResult, SolveStatus

DEFAULT_GUARD_TOL = 1e-12

StepFunction = Callable[[DenseVector], DenseVector]


@dataclass
class AccelState:
    """Sliding window of the last three iterates feeding one extrapolation."""
    guard_tol: float = DEFAULT_GUARD_TOL
    window: Deque[DenseVector] = field(default_factory=lambda: deque(maxlen=3))

    def push(self, x: DenseVector) -> None:
        if self.window and len(self.window[0]) != len(x):
            raise DimensionMismatch(f"Iterate of length {len(x)} does not match window length {len(self.window[0])}")
        self.window.append(np.asarray(x, dtype=np.float64).copy())

    @property
    def ready(self) -> bool:
        return len(self.window) == 3

    def extrapolate(self, mask: Optional[npt.NDArray[np.bool_]] = None, restart: bool = True) -> DenseVector:
        """Extrapolate the window; restart empties it, otherwise it keeps sliding."""
        x0, x1, x2 = self.window
        if restart:
            self.window.clear()
        return aitken_extrapolate(x0, x1, x2, self.guard_tol, mask)


def aitken_extrapolate(x0: npt.ArrayLike, x1: npt.ArrayLike, x2: npt.ArrayLike,
                       guard_tol: float = DEFAULT_GUARD_TOL,
                       mask: Optional[npt.NDArray[np.bool_]] = None) -> DenseVector:
    """
    Apply the Aitken delta-squared formula componentwise.

    Components whose second difference |x2 - 2 x1 + x0| is at most guard_tol (1 + |x2|)
    pass x2 through unchanged, as do components outside mask when one is given.

    Args:
        x0, x1, x2 (array-like): Three consecutive iterates
        guard_tol (float): Relative guard on the denominator
        mask (ndarray of bool, optional): Components eligible for extrapolation

    Returns:
        DenseVector: The extrapolated vector

    Raises:
        DimensionMismatch: If the iterates (or mask) differ in length
    """
    x0, x1, x2 = (np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in (x0, x1, x2))
    if not (x0.shape == x1.shape == x2.shape):
        raise DimensionMismatch(f"Iterates of lengths {len(x0)}, {len(x1)}, {len(x2)}")
    if mask is not None and len(mask) != len(x2):
        raise DimensionMismatch(f"Mask of length {len(mask)} for iterates of length {len(x2)}")

    denominator = x2 - 2.0 * x1 + x0
    apply = np.abs(denominator) > guard_tol * (1.0 + np.abs(x2))
    if mask is not None:
        apply &= mask
    y = x2.copy()
    safe = np.where(apply, denominator, 1.0)
    y[apply] = (x0 - (x1 - x0) ** 2 / safe)[apply]
    return y


def steffensen_run(step: StepFunction, x_init: npt.ArrayLike, epsilon: float, max_iters: int,
                   guard_tol: float = DEFAULT_GUARD_TOL, mask: Optional[npt.NDArray[np.bool_]] = None,
                   record_trajectory: bool = False) -> SolveResult:
    """
    Run Steffensen's iterations on a deterministic one-round map.

    Each cycle runs two rounds from the current point and replaces it with the Aitken
    extrapolation of the three points. The change between a round's input and output is
    tested after every round; rounds, not cycles, are counted against max_iters.

    Args:
        step (callable): One solver round x -> x'
        x_init (array-like): Starting point
        epsilon (float): Threshold on the largest component change
        max_iters (int): Cap on underlying rounds
        guard_tol (float): Relative guard of the extrapolation
        mask (ndarray of bool, optional): Components eligible for extrapolation
        record_trajectory (bool): Keep the output of every round

    Returns:
        SolveResult: Last point, rounds used and status. residual_inf holds the last
        change, since the map knows nothing of A; callers with a matrix overwrite it.
    """
    accel = AccelState(guard_tol=guard_tol)
    x = np.asarray(x_init, dtype=np.float64).copy()
    accel.push(x)
    trajectory: List[DenseVector] = []
    status = SolveStatus.MAX_ITERS_EXCEEDED
    change = float("inf")
    rounds = 0

    while rounds < max_iters:
        try:
            x_next = step(x)
        except SolverError as e:
            L.error(f"Accelerated solve diverged in round {rounds + 1}: {str(e)}")
            status = SolveStatus.DIVERGED
            break
        if not np.all(np.isfinite(x_next)):
            L.error(f"Round {rounds + 1} produced non-finite values")
            status = SolveStatus.DIVERGED
            break
        rounds += 1
        if record_trajectory:
            trajectory.append(x_next.copy())
        change = float(np.max(np.abs(x_next - x), initial=0.0))
        x = x_next
        if change <= epsilon:
            status = SolveStatus.CONVERGED
            break
        accel.push(x)
        if accel.ready:
            extrapolated = accel.extrapolate(mask)
            if not np.all(np.isfinite(extrapolated)):
                L.error(f"Extrapolation after round {rounds} produced non-finite values")
                status = SolveStatus.DIVERGED
                break
            x = extrapolated
            accel.push(x)

    if status == SolveStatus.MAX_ITERS_EXCEEDED:
        L.warning(f"Steffensen iterations did not converge within {max_iters} rounds")
    return SolveResult(
        x=x,
        iterations=rounds,
        converged=status == SolveStatus.CONVERGED,
        residual_inf=change,
        status=status,
        trajectory=trajectory if record_trajectory else None,
        initial=np.asarray(x_init, dtype=np.float64).copy(),
        method="steffensen",
        metadata={"accounting": "rounds", "guard_tol": guard_tol},
    )


def solve_gabp_steffensen(A: SymmetricSparseMatrix, b: npt.ArrayLike, config: SolverConfig,
                          guard_tol: float = DEFAULT_GUARD_TOL) -> SolveResult:
    """
    GaBP accelerated by Aitken extrapolation of its node-mean sequence.

    Messages follow plain GaBP rounds and are never overwritten. After every round the
    last three node-mean vectors mu~ give an extrapolated estimate of x. The solve stops
    at the first round where either the plain change test passes (x is then the plain
    GaBP answer) or two successive estimates differ by at most epsilon (x is then the
    latest estimate). Rounds therefore never exceed those of the plain solve.
    """
    from solvers.gabp_solver import GabpRoundMap, _final_broadcast, _metadata, infer_marginals

    b = check_vector(A, b)
    rounds = GabpRoundMap(A, b, config)
    accel = AccelState(guard_tol=guard_tol)
    accel.push(rounds.node_means)
    L.info(f"Steffensen-accelerated GaBP n={A.n} schedule={config.schedule.value}")

    status = SolveStatus.MAX_ITERS_EXCEEDED
    stopped_on = "max_iters"
    estimate: Optional[DenseVector] = None
    x: Optional[DenseVector] = None
    iterations = 0
    while iterations < config.max_iters:
        try:
            change = rounds.advance()
        except SolverError as e:
            L.error(f"Accelerated GaBP diverged in round {iterations + 1}: {str(e)}")
            status, stopped_on = SolveStatus.DIVERGED, "diverged"
            break
        iterations += 1
        if change <= config.epsilon:
            status, stopped_on = SolveStatus.CONVERGED, "messages"
            break
        accel.push(rounds.node_means)
        if not accel.ready:
            continue
        extrapolated = accel.extrapolate(restart=False)
        if not np.all(np.isfinite(extrapolated)):
            L.warning(f"Extrapolation after round {iterations} is non-finite; estimate discarded")
            estimate = None
            continue
        if estimate is not None and float(np.max(np.abs(extrapolated - estimate))) <= config.epsilon:
            status, stopped_on = SolveStatus.CONVERGED, "extrapolated means"
            x = extrapolated
            break
        estimate = extrapolated

    if status == SolveStatus.MAX_ITERS_EXCEEDED:
        L.warning(f"Accelerated GaBP did not converge within {config.max_iters} rounds")
    state = rounds.state
    if config.schedule == Schedule.SERIAL and status != SolveStatus.DIVERGED:
        state = _final_broadcast(state)
    means, P = infer_marginals(state)
    x = means if x is None else x
    result = SolveResult(
        x=x,
        iterations=iterations,
        converged=status == SolveStatus.CONVERGED,
        residual_inf=residual_inf(A, b, x),
        status=status,
        P_marginal=P,
        trajectory=list(rounds.snapshots) if config.record_trajectory else None,
        initial=rounds.initial,
        method=f"gabp-{config.schedule.value}+steffensen",
        metadata={**_metadata(config, A.n), "extrapolated": "node means", "stopped_on": stopped_on,
                  "guard_tol": guard_tol},
    )
    L.info(f"Accelerated GaBP finished: {result.status.value} after {result.iterations} rounds ({stopped_on})")
    return result


def solve_classical_steffensen(A: SymmetricSparseMatrix, b: npt.ArrayLike, config: ClassicalConfig,
                               guard_tol: float = DEFAULT_GUARD_TOL) -> SolveResult:
    """Jacobi, Gauss-Seidel or SOR accelerated by Steffensen's iterations over x."""
    from solvers.classical_solver import _diagonal, jacobi_step, optimal_sor_omega, sor_step

    b = check_vector(A, b)
    metadata = {"accounting": "rounds", "guard_tol": guard_tol, "sweep_order": "ascending"}
    if config.method == ClassicalMethod.JACOBI:
        step, key = jacobi_step(A, b), "jacobi"
    elif config.method == ClassicalMethod.GAUSS_SEIDEL:
        step, key = sor_step(A, b, 1.0), "gs"
    else:
        omega = config.omega if config.omega is not None else optimal_sor_omega(A)
        step, key = sor_step(A, b, omega), "sor"
        metadata["omega"] = omega

    x0 = b / _diagonal(A)
    inner = steffensen_run(step, x0, config.epsilon, config.max_iters, guard_tol=guard_tol,
                           record_trajectory=config.record_trajectory)
    inner.residual_inf = residual_inf(A, b, inner.x)
    inner.method = f"{key}+steffensen"
    inner.metadata = metadata
    return inner


def solve_steffensen(A: SymmetricSparseMatrix, b: npt.ArrayLike, config: SolverConfig) -> SolveResult:
    """Entry point for SolverConfig callers; the Jacobi variant routes to the classical map."""
    if config.mode == SolverMode.JACOBI_VARIANT:
        classical = ClassicalConfig(method=ClassicalMethod.JACOBI, epsilon=config.epsilon,
                                    max_iters=config.max_iters, record_trajectory=config.record_trajectory)
        return solve_classical_steffensen(A, b, classical)
    return solve_gabp_steffensen(A, b, config)
