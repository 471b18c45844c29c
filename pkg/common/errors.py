"""
Exception hierarchy shared by the matrix layer, the solvers and the command line.

Every error raised on purpose by this project derives from SolverError, which is
itself a ValueError so that callers who only know the standard library still
catch bad input.
"""

from typing import Optional


class SolverError(ValueError):
    """Base class for every error raised by the solver library."""


class MissingDiagonal(SolverError):
    """A diagonal entry A_ii is absent or zero."""

    def __init__(self, i: int) -> None:
        self.i = i
        super().__init__(f"Diagonal entry A[{i},{i}] is missing or zero")


class ZeroDiagonal(SolverError):
    """A diagonal entry is zero, so the prior mean b_i/A_ii cannot be formed."""

    def __init__(self, i: int) -> None:
        self.i = i
        super().__init__(f"Diagonal entry A[{i},{i}] is zero")


class AsymmetricInput(SolverError):
    """Two triplets for the same unordered pair disagree."""

    def __init__(self, i: int, j: int) -> None:
        self.i = i
        self.j = j
        super().__init__(f"Conflicting values supplied for A[{i},{j}] and A[{j},{i}]")


class IndexOutOfRange(SolverError):
    """A triplet index falls outside [0, n)."""

    def __init__(self, i: int, j: int, n: int) -> None:
        self.i = i
        self.j = j
        self.n = n
        super().__init__(f"Index ({i},{j}) out of range for dimension {n}")


class DimensionMismatch(SolverError):
    """Vector and matrix dimensions disagree."""


class SingularMatrix(SolverError):
    """A pivot fell below the oracle tolerance after partial pivoting."""


class DegenerateAggregate(SolverError):
    """The aggregate precision of a node is exactly zero."""

    def __init__(self, i: int) -> None:
        self.i = i
        super().__init__(f"Aggregate precision of node {i} is zero")


class ZeroResidualPrecision(SolverError):
    """The precision P~_i - P_ji left after excluding the recipient vanished."""

    def __init__(self, i: int, j: int) -> None:
        self.i = i
        self.j = j
        super().__init__(f"Residual precision for message {i}->{j} is zero")


class Diverged(SolverError):
    """An iterative solve produced non-finite values or failed to converge."""


class OmegaUndefined(SolverError):
    """The Jacobi spectral radius is not below one, so no optimal SOR weight exists."""

    def __init__(self, rho: float) -> None:
        self.rho = rho
        super().__init__(f"Optimal SOR weight undefined: Jacobi spectral radius {rho:.6g} >= 1; supply omega explicitly")


class InvalidNodeOrder(SolverError):
    """A serial node order is not a permutation of the nodes."""


class UnknownMethod(SolverError):
    """A method key is not one of the registered solver keys."""

    def __init__(self, key: str) -> None:
        self.key = key
        super().__init__(f"Unknown method: {key}")


class ParseError(SolverError):
    """An input file could not be parsed; carries the file and line for the message."""

    def __init__(self, path: str, line: Optional[int], message: str) -> None:
        self.path = path
        self.line = line
        location = f"{path}:{line}" if line is not None else path
        super().__init__(f"{location}: {message}")


class FixtureIntegrityError(SolverError):
    """An embedded correlation fixture no longer reproduces its spectral radius."""

    def __init__(self, name: str, expected: float, actual: float) -> None:
        self.name = name
        self.expected = expected
        self.actual = actual
        super().__init__(f"Fixture {name}: spectral radius {actual:.6f} does not match {expected:.4f}")
