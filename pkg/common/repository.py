"""
File access for matrices and vectors.

Matrices are exchanged as Matrix Market coordinate files (real or integer, symmetric
or general); vectors as one real per line or as a single-column CSV. Writers emit 17
significant digits so that a write followed by a read reproduces every value exactly.
"""

from pathlib import Path
from typing import Iterator, List, Tuple, Union
import logging as L

import numpy as np
import numpy.typing as npt
import pandas as pd

from common.errors import ParseError, SolverError
from common.matrix import DenseVector, SymmetricSparseMatrix, Triplet, build_matrix

PathLike = Union[str, Path]

MM_BANNER = "%%MatrixMarket"
SUPPORTED_FIELDS = ("real", "integer")
SUPPORTED_SYMMETRIES = ("symmetric", "general")


def _numbered_lines(path: Path) -> Iterator[Tuple[int, str]]:
    try:
        with open(path, "r") as file:
            for number, line in enumerate(file, start=1):
                yield number, line.strip()
    except OSError as e:
        raise ParseError(str(path), None, f"cannot read file: {e.strerror or str(e)}")


def _parse_banner(path: Path, number: int, line: str) -> str:
    parts = line.split()
    if len(parts) != 5 or parts[0] != MM_BANNER:
        raise ParseError(str(path), number, "expected '%%MatrixMarket matrix coordinate <field> <symmetry>' header")
    _, obj, fmt, value_field, symmetry = (p.lower() if i else p for i, p in enumerate(parts))
    if obj != "matrix" or fmt != "coordinate":
        raise ParseError(str(path), number, f"unsupported layout '{obj} {fmt}', only 'matrix coordinate' is read")
    if value_field not in SUPPORTED_FIELDS:
        raise ParseError(str(path), number, f"unsupported field '{value_field}'")
    if symmetry not in SUPPORTED_SYMMETRIES:
        raise ParseError(str(path), number, f"unsupported symmetry '{symmetry}'")
    return symmetry


def read_matrix_market(path: PathLike) -> SymmetricSparseMatrix:
    """
    Read a symmetric matrix from a Matrix Market coordinate file.

    Symmetric files store one triangle, which is mirrored. General files must list both
    triangles with equal values. Indices in the file are 1-based.

    Args:
        path (str | Path): File to read

    Returns:
        SymmetricSparseMatrix: The validated matrix

    Raises:
        ParseError: On any syntax or validation failure, naming the file and line
    """
    path = Path(path)
    lines = _numbered_lines(path)
    try:
        number, line = next(lines)
    except StopIteration:
        raise ParseError(str(path), None, "empty file")
    symmetry = _parse_banner(path, number, line)

    size_line = None
    for number, line in lines:
        if line and not line.startswith("%"):
            size_line = (number, line)
            break
    if size_line is None:
        raise ParseError(str(path), None, "missing size line")
    number, line = size_line
    try:
        rows, cols, nnz = (int(tok) for tok in line.split())
    except ValueError:
        raise ParseError(str(path), number, f"expected 'rows cols entries', got '{line}'")
    if rows != cols:
        raise ParseError(str(path), number, f"matrix is {rows}x{cols}, expected square")

    triplets: List[Triplet] = []
    for number, line in lines:
        if not line or line.startswith("%"):
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise ParseError(str(path), number, f"expected 'row col value', got '{line}'")
        try:
            i, j, value = int(tokens[0]) - 1, int(tokens[1]) - 1, float(tokens[2])
        except ValueError:
            raise ParseError(str(path), number, f"malformed entry '{line}'")
        if not (0 <= i < rows and 0 <= j < rows):
            raise ParseError(str(path), number, f"index ({i + 1},{j + 1}) outside {rows}x{rows}")
        if symmetry == "symmetric" and j > i:
            raise ParseError(str(path), number, "symmetric storage expects the lower triangle only")
        triplets.append((i, j, value))

    if len(triplets) != nnz:
        raise ParseError(str(path), None, f"size line declares {nnz} entries, found {len(triplets)}")
    try:
        A = build_matrix(rows, triplets)
    except SolverError as e:
        raise ParseError(str(path), None, str(e))
    L.info(f"Read {rows}x{rows} matrix with {nnz} stored entries from {path}")
    return A


def write_matrix_market(A: SymmetricSparseMatrix, path: PathLike) -> None:
    """Write A as a symmetric real Matrix Market file holding its lower triangle."""
    path = Path(path)
    lower = sorted((j, i, v) for i, j, v in A.entries())
    with open(path, "w") as file:
        file.write(f"{MM_BANNER} matrix coordinate real symmetric\n")
        file.write(f"{A.n} {A.n} {len(lower)}\n")
        for i, j, value in lower:
            file.write(f"{i + 1} {j + 1} {value:.17g}\n")
    L.info(f"Wrote {A.n}x{A.n} matrix to {path}")


def read_vector(path: PathLike) -> DenseVector:
    """
    Read a vector with one real per line; a .csv file may start with a header row.

    Raises:
        ParseError: On a non-numeric line or an empty file
    """
    path = Path(path)
    values: List[float] = []
    is_csv = path.suffix.lower() == ".csv"
    header_allowed = is_csv
    for number, line in _numbered_lines(path):
        if not line or line.startswith("#"):
            continue
        token = line.split(",")[0].strip() if is_csv else line
        if is_csv and "," in line and line.split(",", 1)[1].strip():
            raise ParseError(str(path), number, "expected a single column")
        try:
            values.append(float(token))
        except ValueError:
            if header_allowed:
                header_allowed = False
                continue
            raise ParseError(str(path), number, f"not a number: '{line}'")
        header_allowed = False
    if not values:
        raise ParseError(str(path), None, "no values found")
    return np.array(values, dtype=np.float64)


def write_vector(x: npt.ArrayLike, path: PathLike, column: str = "b") -> None:
    """
    Write one value per line with 17 significant digits.

    A .csv path gets a single header row naming the column, which read_vector skips.
    """
    values = np.asarray(x, dtype=np.float64)
    if Path(path).suffix.lower() == ".csv":
        pd.DataFrame({column: values}).to_csv(path, index=False, float_format="%.17g")
        return
    with open(path, "w") as file:
        for value in values:
            file.write(f"{value:.17g}\n")
