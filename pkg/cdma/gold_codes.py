"""
Length-7 Gold spreading codes and their normalized cross-correlation matrices.

The two degree-3 m-sequences come from the preferred pair of primitive polynomials
x^3 + x + 1 and x^3 + x^2 + 1. The family holds both m-sequences and the seven XOR
combinations of the first with cyclic shifts of the second; bits map 0 -> +1, 1 -> -1.
"""

from dataclasses import dataclass
from itertools import product
from typing import List, Optional, Sequence, Tuple
import logging as L

import numpy as np
import numpy.typing as npt

from common.errors import DimensionMismatch
from common.matrix import SymmetricSparseMatrix, matrix_from_dense

CODE_LENGTH = 7
MATCH_TOL = 1e-12

Code = npt.NDArray[np.int8]


@dataclass(frozen=True)
class SpreadingCodeSet:
    """
    A family of +/-1 spreading codes of equal length.

    Attributes:
        length (int): Chips per code
        codes (tuple): The codes, each an int8 array of +/-1
    """
    length: int
    codes: Tuple[Code, ...]

    def __len__(self) -> int:
        return len(self.codes)

    def __getitem__(self, k: int) -> Code:
        return self.codes[k]


def lfsr(taps: Sequence[int], seed: Sequence[int], length: int) -> List[int]:
    """
    Run a Fibonacci LFSR and return its output bits.

    The register holds s[n], ..., s[n+d-1]; each step outputs s[n] and appends the XOR
    of the register cells listed in taps.
    """
    register = list(seed)
    bits = []
    for _ in range(length):
        bits.append(register[0])
        feedback = 0
        for t in taps:
            feedback ^= register[t]
        register = register[1:] + [feedback]
    return bits


def _to_chips(bits: Sequence[int]) -> Code:
    return np.where(np.asarray(bits) == 0, 1, -1).astype(np.int8)


def gold_codes_n7() -> SpreadingCodeSet:
    """Return the 9 Gold codes of length 7 as +/-1 chips."""
    # s[n+3] = s[n+1] ^ s[n] for x^3 + x + 1; s[n+3] = s[n+2] ^ s[n] for x^3 + x^2 + 1
    u = np.array(lfsr((0, 1), (1, 0, 0), CODE_LENGTH), dtype=np.int8)
    v = np.array(lfsr((0, 2), (1, 0, 0), CODE_LENGTH), dtype=np.int8)
    family = [u, v] + [u ^ np.roll(v, -k) for k in range(CODE_LENGTH)]
    return SpreadingCodeSet(CODE_LENGTH, tuple(_to_chips(bits) for bits in family))


def correlation_matrix(codes: Sequence[npt.ArrayLike],
                       signs: Optional[Sequence[int]] = None) -> SymmetricSparseMatrix:
    """
    Return R with R_ij = s_i^T s_j / N for the given codes.

    Args:
        codes (sequence): Equal-length +/-1 codes, one per user
        signs (sequence, optional): Per-code sign flips applied before correlating

    Raises:
        DimensionMismatch: If the codes differ in length or signs has the wrong size
    """
    S = np.array([np.asarray(c, dtype=np.float64) for c in codes])
    if S.ndim != 2:
        raise DimensionMismatch("Codes must all have the same length")
    if signs is not None:
        if len(signs) != len(S):
            raise DimensionMismatch(f"{len(signs)} signs for {len(S)} codes")
        S = S * np.asarray(signs, dtype=np.float64)[:, None]
    return matrix_from_dense(S @ S.T / S.shape[1])


def _shifted_candidates(code_set: SpreadingCodeSet, allow_shifts: bool) -> List[Tuple[int, int, Code]]:
    shifts = range(code_set.length) if allow_shifts else (0,)
    return [(k, s, np.roll(code, -s)) for k, code in enumerate(code_set.codes) for s in shifts]


def find_code_subset(code_set: SpreadingCodeSet, target: SymmetricSparseMatrix,
                     allow_shifts: bool = False) -> Optional[List[Tuple[int, int, int]]]:
    """
    Search for codes whose correlation matrix equals target exactly.

    Codes are picked one user at a time by backtracking; every pick must reproduce the
    target correlations with all earlier picks, up to a sign flip of the new code.
    Distinct users use distinct family members.

    Args:
        code_set (SpreadingCodeSet): Family to search
        target (SymmetricSparseMatrix): Correlation matrix to reproduce
        allow_shifts (bool): Also try cyclic shifts of every code

    Returns:
        list | None: One (code index, shift, sign) per user, or None without a match
    """
    T = target.to_dense()
    n = target.n
    candidates = _shifted_candidates(code_set, allow_shifts)
    N = float(code_set.length)
    chosen: List[Tuple[int, int, int]] = []
    vectors: List[npt.NDArray[np.float64]] = []

    def extend(user: int) -> bool:
        if user == n:
            return True
        used = {k for k, _, _ in chosen}
        for (k, s, code), sign in product(candidates, (1, -1)):
            if k in used or (user == 0 and sign == -1):
                continue
            vec = sign * code.astype(np.float64)
            if abs(vec @ vec / N - T[user, user]) > MATCH_TOL:
                continue
            if any(abs(vec @ prev / N - T[user, p]) > MATCH_TOL for p, prev in enumerate(vectors)):
                continue
            chosen.append((k, s, sign))
            vectors.append(vec)
            if extend(user + 1):
                return True
            chosen.pop()
            vectors.pop()
        return False

    if extend(0):
        L.info(f"Found a code subset reproducing the {n}x{n} correlation matrix: {chosen}")
        return list(chosen)
    L.info(f"No code subset reproduces the {n}x{n} correlation matrix")
    return None
