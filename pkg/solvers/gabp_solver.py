"""
Gaussian belief propagation solver for symmetric linear systems A x = b (broadcast variant).

Every directed edge i->j carries a Gaussian message parameterized by its precision
P_ij and mean mu_ij. Instead of summing N(i)\\j separately for every outgoing
message, each node broadcasts aggregate sums

    P~_i = P_ii + sum_{k in N(i)} P_ki
    P~_i mu~_i = P_ii mu_ii + sum_{k in N(i)} P_ki mu_ki

and the exclusion of the recipient is recovered by subtraction:

    P_ij  = -A_ij^2 / (P~_i - P_ji)
    mu_ij = (P~_i mu~_i - P_ji mu_ji) / A_ij

At a fixed point the node means mu~ solve A x = b and P~ are the marginal precisions.
Messages are stored in information form too (h = P mu), which is what the aggregates
sum and what the Jacobi variant transports when P_ij is pinned to zero.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple
import logging as L

import numpy as np
import numpy.typing as npt
from scipy import optimize

from common.config import Acceleration, Schedule, SolverConfig, SolverMode
from common.errors import (DegenerateAggregate, Diverged, InvalidNodeOrder, SolverError,
                           ZeroDiagonal, ZeroResidualPrecision)
from common.matrix import DenseVector, GraphTopology, SymmetricSparseMatrix, build_graph, check_vector
from common.oracle import residual_inf
from common.results import SolveResult, SolveStatus

RESIDUAL_PRECISION_FLOOR = 1e-300


@dataclass(frozen=True)
class EdgeLayout:
    """
    Directed-edge indexing shared by every state of one solve.

    Edges are grouped by source node, so the outgoing messages of node i occupy
    ids offsets[i]:offsets[i+1]; reverse[e] is the id of the opposite direction.
    """
    src: npt.NDArray[np.intp]
    dst: npt.NDArray[np.intp]
    reverse: npt.NDArray[np.intp]
    offsets: npt.NDArray[np.intp]
    weight: DenseVector
    index: Dict[Tuple[int, int], int]

    @property
    def m(self) -> int:
        return len(self.src)

    @classmethod
    def from_graph(cls, A: SymmetricSparseMatrix, g: GraphTopology) -> "EdgeLayout":
        pairs = g.directed_edges()
        index = {edge: e for e, edge in enumerate(pairs)}
        src = np.array([i for i, _ in pairs], dtype=np.intp)
        dst = np.array([j for _, j in pairs], dtype=np.intp)
        reverse = np.array([index[(j, i)] for i, j in pairs], dtype=np.intp)
        offsets = np.zeros(g.n + 1, dtype=np.intp)
        offsets[1:] = np.cumsum([len(nbrs) for nbrs in g.neighbors])
        weight = np.array([A.get(i, j) for i, j in pairs], dtype=np.float64)
        return cls(src, dst, reverse, offsets, weight, index)


@dataclass
class MessageState:
    """
    All scalars of a GaBP solve.

    Attributes:
        layout (EdgeLayout): Directed edge indexing
        P_edge (DenseVector): Message precisions P_ij per directed edge
        mu_edge (DenseVector): Message means mu_ij per directed edge
        h_edge (DenseVector): Message information P_ij mu_ij per directed edge
        P_node (DenseVector): Aggregate precisions P~_i
        mu_node (DenseVector): Aggregate means mu~_i
        h_node (DenseVector): Aggregate information P~_i mu~_i
        P_prior (DenseVector): P_ii = A_ii
        mu_prior (DenseVector): mu_ii = b_i / A_ii
    """
    layout: EdgeLayout
    P_edge: DenseVector
    mu_edge: DenseVector
    h_edge: DenseVector
    P_node: DenseVector
    mu_node: DenseVector
    h_node: DenseVector
    P_prior: DenseVector
    mu_prior: DenseVector
    h_prior: DenseVector = field(init=False)

    def __post_init__(self) -> None:
        self.h_prior = self.P_prior * self.mu_prior

    def copy(self) -> "MessageState":
        """Return a state with its own scalar arrays and the shared layout."""
        return MessageState(self.layout, self.P_edge.copy(), self.mu_edge.copy(), self.h_edge.copy(),
                            self.P_node.copy(), self.mu_node.copy(), self.h_node.copy(),
                            self.P_prior, self.mu_prior)

    def message(self, i: int, j: int) -> Tuple[float, float]:
        """Return the stored (P_ij, mu_ij)."""
        e = self.layout.index[(i, j)]
        return float(self.P_edge[e]), float(self.mu_edge[e])

    @property
    def n(self) -> int:
        return len(self.P_prior)


def init_state(A: SymmetricSparseMatrix, b: npt.ArrayLike, g: Optional[GraphTopology] = None) -> MessageState:
    """
    Initialize the message state: priors fixed, every message zero, one broadcast pass.

    After the pass P~_i = P_ii and mu~_i = mu_ii, so the starting node means are b_i / A_ii.

    Args:
        A (SymmetricSparseMatrix): The data matrix
        b (array-like): Observation vector
        g (GraphTopology, optional): Topology of A, built when omitted

    Returns:
        MessageState: The initialized state

    Raises:
        ZeroDiagonal: If some A_ii is zero
        DimensionMismatch: If b does not have length A.n
    """
    b = check_vector(A, b)
    g = g if g is not None else build_graph(A)
    diagonal = A.diagonal()
    zero = np.flatnonzero(diagonal == 0.0)
    if zero.size:
        raise ZeroDiagonal(int(zero[0]))
    layout = EdgeLayout.from_graph(A, g)
    m, n = layout.m, A.n
    state = MessageState(layout, np.zeros(m), np.zeros(m), np.zeros(m),
                         np.zeros(n), np.zeros(n), np.zeros(n),
                         diagonal.copy(), b / diagonal)
    return broadcast_aggregates(state)


def broadcast_aggregates(state: MessageState) -> MessageState:
    """
    Recompute every aggregate from the current messages (in place).

    Raises:
        DegenerateAggregate: If some P~_i is exactly zero
    """
    layout = state.layout
    n = state.n
    state.P_node = state.P_prior + np.bincount(layout.dst, weights=state.P_edge, minlength=n)
    state.h_node = state.h_prior + np.bincount(layout.dst, weights=state.h_edge, minlength=n)
    degenerate = np.flatnonzero(state.P_node == 0.0)
    if degenerate.size:
        raise DegenerateAggregate(int(degenerate[0]))
    state.mu_node = state.h_node / state.P_node
    return state


def _aggregate_node(state: MessageState, i: int) -> None:
    incoming = state.layout.reverse[state.layout.offsets[i]:state.layout.offsets[i + 1]]
    P = state.P_prior[i] + state.P_edge[incoming].sum()
    if P == 0.0:
        raise DegenerateAggregate(i)
    h = state.h_prior[i] + state.h_edge[incoming].sum()
    state.P_node[i] = P
    state.h_node[i] = h
    state.mu_node[i] = h / P


def compute_edge_message(i: int, j: int, state: MessageState, A: SymmetricSparseMatrix) -> Tuple[float, float]:
    """
    Compute the message i->j from the aggregates of node i by subtraction.

    Args:
        i (int): Sender
        j (int): Recipient, a member of N(i)
        state (MessageState): Current state with valid aggregates
        A (SymmetricSparseMatrix): The data matrix

    Returns:
        tuple: The undamped (P_ij, mu_ij)

    Raises:
        ZeroResidualPrecision: If |P~_i - P_ji| < 1e-300
    """
    r = state.layout.index[(j, i)]
    a = A.get(i, j)
    p_excl = state.P_node[i] - state.P_edge[r]
    if abs(p_excl) < RESIDUAL_PRECISION_FLOOR:
        raise ZeroResidualPrecision(i, j)
    h_excl = state.h_node[i] - state.h_edge[r]
    return float(-(a * a) / p_excl), float(h_excl / a)


def compute_edge_message_reference(i: int, j: int, state: MessageState,
                                   A: SymmetricSparseMatrix) -> Tuple[float, float]:
    """
    Compute the message i->j by summing over N(i)\\j directly, without aggregates.

    P_{i\\j} = P_ii + sum_{k in N(i)\\j} P_ki and the matching information sum give
    P_ij = -A_ij^2 / P_{i\\j} and mu_ij = P_{i\\j} mu_{i\\j} / A_ij.
    """
    layout = state.layout
    p_excl = state.P_prior[i]
    h_excl = state.h_prior[i]
    for e in layout.reverse[layout.offsets[i]:layout.offsets[i + 1]]:
        if layout.src[e] == j:
            continue
        p_excl += state.P_edge[e]
        h_excl += state.P_edge[e] * state.mu_edge[e]
    if abs(p_excl) < RESIDUAL_PRECISION_FLOOR:
        raise ZeroResidualPrecision(i, j)
    a = A.get(i, j)
    return float(-(a * a) / p_excl), float(h_excl / a)


def _update_edges(state: MessageState, ids: npt.NDArray[np.intp], damping: float) -> None:
    layout = state.layout
    if ids.size == 0:
        return
    src = layout.src[ids]
    rev = layout.reverse[ids]
    a = layout.weight[ids]
    p_excl = state.P_node[src] - state.P_edge[rev]
    vanished = np.flatnonzero(np.abs(p_excl) < RESIDUAL_PRECISION_FLOOR)
    if vanished.size:
        k = ids[vanished[0]]
        raise ZeroResidualPrecision(int(layout.src[k]), int(layout.dst[k]))
    P_new = -(a * a) / p_excl
    mu_new = (state.h_node[src] - state.h_edge[rev]) / a
    if damping > 0.0:
        P_new = (1.0 - damping) * P_new + damping * state.P_edge[ids]
        mu_new = (1.0 - damping) * mu_new + damping * state.mu_edge[ids]
    state.P_edge[ids] = P_new
    state.mu_edge[ids] = mu_new
    state.h_edge[ids] = P_new * mu_new


def _jacobi_variant_edges(state: MessageState, ids: npt.NDArray[np.intp]) -> None:
    # P_ij pinned to zero: P_{i\j} = A_ii, mu_{i\j} = mu~_i, only h_ij = -A_ij mu_{i\j} travels
    layout = state.layout
    state.P_edge[ids] = 0.0
    state.mu_edge[ids] = 0.0
    state.h_edge[ids] = -layout.weight[ids] * state.mu_node[layout.src[ids]]


def _serial_order(config: SolverConfig, n: int) -> List[int]:
    if config.node_order is None:
        return list(range(n))
    if sorted(config.node_order) != list(range(n)):
        raise InvalidNodeOrder(f"node_order must be a permutation of 0..{n - 1}")
    return list(config.node_order)


def run_round(state: MessageState, A: SymmetricSparseMatrix, g: GraphTopology,
              config: SolverConfig) -> MessageState:
    """
    Run one round under the configured schedule and return the new state.

    Parallel: every message is computed from the aggregates left by the previous
    round, then all aggregates are broadcast again. Serial: nodes are visited in
    node order; each recomputes its aggregate from the freshest incoming messages and
    immediately replaces its outgoing messages, so later nodes see the new values; a
    closing broadcast then refreshes the aggregates of nodes visited early. The Jacobi
    variant skips that closing broadcast under the serial schedule, so its node means
    are the values computed at each turn, which are the Gauss-Seidel iterates.

    Args:
        state (MessageState): State after init_state or a previous round (not modified)
        A (SymmetricSparseMatrix): The data matrix
        g (GraphTopology): Topology of A
        config (SolverConfig): Schedule, damping and mode

    Returns:
        MessageState: The state after the round

    Raises:
        DegenerateAggregate, ZeroResidualPrecision: On a vanishing precision
        Diverged: If any scalar becomes non-finite
    """
    new = state.copy()
    layout = new.layout
    jacobi_variant = config.mode == SolverMode.JACOBI_VARIANT

    if config.schedule == Schedule.PARALLEL:
        ids = np.arange(layout.m, dtype=np.intp)
        if jacobi_variant:
            _jacobi_variant_edges(new, ids)
        else:
            _update_edges(new, ids, config.damping)
        broadcast_aggregates(new)
    else:
        for i in _serial_order(config, new.n):
            _aggregate_node(new, i)
            ids = np.arange(layout.offsets[i], layout.offsets[i + 1], dtype=np.intp)
            if jacobi_variant:
                _jacobi_variant_edges(new, ids)
            else:
                _update_edges(new, ids, config.damping)
        if not jacobi_variant:
            broadcast_aggregates(new)

    if not (np.all(np.isfinite(new.P_edge)) and np.all(np.isfinite(new.mu_edge))
            and np.all(np.isfinite(new.mu_node))):
        raise Diverged("Non-finite message or node value")
    return new


def max_change(prev: MessageState, curr: MessageState) -> float:
    """Largest absolute change over message precisions, message means and node means."""
    return float(max(np.max(np.abs(curr.P_edge - prev.P_edge), initial=0.0),
                     np.max(np.abs(curr.mu_edge - prev.mu_edge), initial=0.0),
                     np.max(np.abs(curr.mu_node - prev.mu_node), initial=0.0)))


def check_convergence(prev: MessageState, curr: MessageState, epsilon: float) -> bool:
    """Return True iff every message scalar and node mean moved by at most epsilon."""
    return max_change(prev, curr) <= epsilon


def infer_marginals(state: MessageState) -> Tuple[DenseVector, DenseVector]:
    """Return the marginal means mu_i = mu~_i and precisions P_i = P~_i."""
    return state.mu_node.copy(), state.P_node.copy()


def _final_broadcast(state: MessageState) -> MessageState:
    closed = state.copy()
    try:
        return broadcast_aggregates(closed)
    except DegenerateAggregate as e:
        L.warning(f"Closing broadcast failed, keeping per-turn node means: {str(e)}")
        return state


def _metadata(config: SolverConfig, n: int) -> Dict[str, object]:
    return {
        "schedule": config.schedule.value,
        "node_order": list(config.node_order) if config.node_order is not None else list(range(n)),
        "damping": config.damping,
        "mode": config.mode.value,
        "accounting": "rounds",
    }


def solve_gabp(A: SymmetricSparseMatrix, b: npt.ArrayLike, config: Optional[SolverConfig] = None) -> SolveResult:
    """
    Solve A x = b with GaBP.

    Rounds run until every message scalar and node mean changes by at most epsilon, or
    until max_iters. Numerical breakdown (vanishing precision, non-finite values) ends
    the solve with status diverged and the last finite node means as x.

    Args:
        A (SymmetricSparseMatrix): The data matrix
        b (array-like): Observation vector
        config (SolverConfig, optional): Solver settings, defaults when omitted

    Returns:
        SolveResult: Means, marginal precisions, rounds and status
    """
    config = config or SolverConfig()
    if config.acceleration == Acceleration.STEFFENSEN:
        from solvers.steffensen_solver import solve_steffensen
        return solve_steffensen(A, b, config)

    b = check_vector(A, b)
    g = build_graph(A)
    if config.schedule == Schedule.SERIAL:
        _serial_order(config, A.n)
    state = init_state(A, b, g)
    if config.mode == SolverMode.JACOBI_VARIANT:
        # messages start as -A_ij x0_i so a serial sweep reads x0 from nodes not yet visited
        _jacobi_variant_edges(state, np.arange(state.layout.m, dtype=np.intp))
    L.info(f"GaBP solve n={A.n} edges={state.layout.m // 2} schedule={config.schedule.value} mode={config.mode.value}")

    initial = state.mu_node.copy()
    trajectory: List[DenseVector] = []
    status = SolveStatus.MAX_ITERS_EXCEEDED
    iterations = 0
    for iterations in range(1, config.max_iters + 1):
        try:
            new = run_round(state, A, g, config)
        except SolverError as e:
            L.error(f"GaBP diverged in round {iterations}: {str(e)}")
            status = SolveStatus.DIVERGED
            iterations -= 1
            break
        if config.record_trajectory:
            trajectory.append(new.mu_node.copy())
        converged = check_convergence(state, new, config.epsilon)
        state = new
        if converged:
            status = SolveStatus.CONVERGED
            break

    if status == SolveStatus.MAX_ITERS_EXCEEDED:
        L.warning(f"GaBP did not converge within {config.max_iters} rounds")
    if config.schedule == Schedule.SERIAL and config.mode == SolverMode.GABP and status != SolveStatus.DIVERGED:
        state = _final_broadcast(state)
    x, P = infer_marginals(state)
    result = SolveResult(
        x=x,
        iterations=iterations,
        converged=status == SolveStatus.CONVERGED,
        residual_inf=residual_inf(A, b, x),
        status=status,
        P_marginal=P,
        trajectory=trajectory if config.record_trajectory else None,
        initial=initial,
        method=f"gabp-{config.schedule.value}",
        metadata=_metadata(config, A.n),
    )
    L.info(f"GaBP finished: {result.status.value} after {result.iterations} rounds, residual {result.residual_inf:.3e}")
    return result


class GabpRoundMap:
    """
    Plain GaBP rounds driven one at a time, exposing the node-mean sequence.

    The message state evolves exactly as in solve_gabp; nothing outside ever writes
    into it. The Steffensen driver reads mu~ after every round and extrapolates that
    sequence on the side.
    """

    def __init__(self, A: SymmetricSparseMatrix, b: npt.ArrayLike, config: SolverConfig) -> None:
        if config.mode != SolverMode.GABP:
            raise ValueError("Round map requires the full GaBP mode")
        self.A = A
        self.b = check_vector(A, b)
        self.config = replace_acceleration(config)
        self.g = build_graph(A)
        if config.schedule == Schedule.SERIAL:
            _serial_order(config, A.n)
        self.state = init_state(A, self.b, self.g)
        self.initial = self.state.mu_node.copy()
        self.snapshots: List[DenseVector] = []

    @property
    def node_means(self) -> DenseVector:
        return self.state.mu_node.copy()

    def advance(self) -> float:
        """
        Run one round and return its max_change.

        Raises:
            SolverError: On numerical breakdown, as run_round does
        """
        new = run_round(self.state, self.A, self.g, self.config)
        change = max_change(self.state, new)
        self.state = new
        self.snapshots.append(new.mu_node.copy())
        return change


def replace_acceleration(config: SolverConfig) -> SolverConfig:
    """Return the config with acceleration switched off, for the inner rounds of an accelerated solve."""
    return config.model_copy(update={"acceleration": Acceleration.NONE})


def product_of_gaussians(mu1: float, P1: float, mu2: float, P2: float) -> Tuple[float, float]:
    """Return (mu, P) of the Gaussian proportional to N(mu1, 1/P1) N(mu2, 1/P2)."""
    P = P1 + P2
    return (P1 * mu1 + P2 * mu2) / P, P


def maximize_product_density(mu1: float, P1: float, mu2: float, P2: float) -> float:
    """
    Locate the maximizer of the product density numerically.

    The log density -P1 (x - mu1)^2 / 2 - P2 (x - mu2)^2 / 2 is strictly concave for
    positive precisions, so its maximizer is the unique root of the derivative, which is
    bracketed by the two means.
    """
    def slope(x: float) -> float:
        return -P1 * (x - mu1) - P2 * (x - mu2)

    lo, hi = min(mu1, mu2) - 1.0, max(mu1, mu2) + 1.0
    return float(optimize.brentq(slope, lo, hi, xtol=1e-14, maxiter=500))


def max_product_mode_check(samples: int = 1000, seed: int = 0, tol: float = 1e-8) -> bool:
    """
    Check numerically that max-product and sum-product messages coincide.

    For random pairs of 1-D Gaussians the argmax of the product density must equal the
    product mean (P1 mu1 + P2 mu2) / (P1 + P2). There is no separate max-product solver:
    this equality is why the GaBP updates serve both rules.

    Args:
        samples (int): Number of random products
        seed (int): Seed of the generator
        tol (float): Allowed absolute difference

    Returns:
        bool: True iff every sample agrees within tol
    """
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        mu1, mu2 = rng.uniform(-10.0, 10.0, size=2)
        P1, P2 = rng.uniform(0.1, 10.0, size=2)
        mean, _ = product_of_gaussians(mu1, P1, mu2, P2)
        argmax = maximize_product_density(mu1, P1, mu2, P2)
        if abs(argmax - mean) > tol:
            L.error(f"Max-product mismatch: argmax {argmax} vs product mean {mean}")
            return False
    return True
