"""Embedded cross-correlation fixtures of the 3-user and 4-user CDMA setups."""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple
import logging as L

import numpy as np

from cdma.gold_codes import find_code_subset, gold_codes_n7
from common.diagnostics import spectral_radius_abs_shift
from common.errors import FixtureIntegrityError
from common.matrix import SymmetricSparseMatrix, matrix_from_dense

RHO_TOLERANCE = 5e-5

_R3 = [[7, -1, 3],
       [-1, 7, -5],
       [3, -5, 7]]

_R4 = [[7, -1, 3, 3],
       [-1, 7, 3, -1],
       [3, 3, 7, -1],
       [3, -1, -1, 7]]

CodePicks = List[Tuple[int, int, int]]

_FIXTURES: Dict[str, Tuple[List[List[int]], float]] = {
    "R3": (_R3, 0.9008),
    "R4": (_R4, 0.8747),
}

FIXTURE_NAMES = tuple(_FIXTURES)


@dataclass(frozen=True)
class CorrelationFixture:
    """
    A correlation matrix together with its quoted spectral radius rho(|I - R|).

    Attributes:
        name (str): R3 or R4
        R (SymmetricSparseMatrix): Unit-diagonal correlation matrix
        expected_rho (float): Quoted value of rho(|I - R|)
        codes (list, optional): (code index, shift, sign) per user when the Gold family reproduces R,
            None when the embedded constants stand on their own
    """
    name: str
    R: SymmetricSparseMatrix
    expected_rho: float
    codes: Optional[CodePicks] = None

    @property
    def code_source(self) -> str:
        if self.codes is None:
            return "embedded"
        return ", ".join(f"g{k}>>{s}" + ("" if sign > 0 else "(-)") for k, s, sign in self.codes)

    @property
    def n(self) -> int:
        return self.R.n

    def observation(self) -> np.ndarray:
        """The all-ones observation used by the benchmark."""
        return np.ones(self.n)


def match_gold_codes(name: str, R: SymmetricSparseMatrix) -> Optional[CodePicks]:
    """
    Look for cyclically shifted, sign-flipped n = 7 Gold codes whose correlation matrix is R.

    Logs the picks on a match and a warning when the fixture has to stay on its embedded constants.
    """
    picks = find_code_subset(gold_codes_n7(), R, allow_shifts=True)
    if picks is None:
        L.warning(f"Fixture {name}: no n=7 Gold code subset reproduces R; using the embedded constants")
    else:
        L.info(f"Fixture {name}: reproduced by Gold codes (index, shift, sign) {picks}")
    return picks


def load_fixture(name: str, verify: bool = True) -> CorrelationFixture:
    """
    Return an embedded fixture, checking that it still reproduces its spectral radius.

    With verify set, the Gold family is also searched for codes that generate the matrix
    and the outcome is kept on the fixture.

    Args:
        name (str): R3 or R4
        verify (bool): Recompute rho(|I - R|) and compare within 5e-5, then search the Gold family

    Raises:
        KeyError: If the fixture name is unknown
        FixtureIntegrityError: If the recomputed radius is off
    """
    if name not in _FIXTURES:
        raise KeyError(f"Unknown fixture {name}; expected one of {', '.join(FIXTURE_NAMES)}")
    values, expected = _FIXTURES[name]
    R = matrix_from_dense(np.array(values, dtype=np.float64) / 7.0)
    if not verify:
        return CorrelationFixture(name, R, expected)
    actual = spectral_radius_abs_shift(R)
    if abs(actual - expected) > RHO_TOLERANCE:
        raise FixtureIntegrityError(name, expected, actual)
    L.debug(f"Fixture {name}: rho(|I-R|) = {actual:.6f}")
    return CorrelationFixture(name, R, expected, match_gold_codes(name, R))
