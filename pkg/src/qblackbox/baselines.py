"""Classical reference computations: communication matrices, exact rank, Hamming distance."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .oracle import ArityError, OracleTable
from .statevector import ResourceError

ExactRational = Fraction

MATRIX_PREDICATES = ("DISJ", "EQ", "IP", "DISJOINTNESS")
DEFAULT_MAX_N = 3


@dataclass(frozen=True)
class CommMatrix:
    """Entry ``(g, h)`` is the predicate value on truth tables ``g`` and ``h``.

    Row and column index = integer value of the ``N = 2^n`` character bit
    string, ``f(0)`` most significant; for ``n = 1`` the order is 00, 01, 10, 11.
    """

    n: int
    predicate: str
    entries: np.ndarray

    @property
    def side(self) -> int:
        return self.entries.shape[0]

    def to_bit_rows(self) -> str:
        return "\n".join("".join(str(int(v)) for v in row) for row in self.entries) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_bit_rows())

    @classmethod
    def load(cls, path: str | Path, n: int, predicate: str = "") -> "CommMatrix":
        rows = [line.strip() for line in Path(path).read_text().splitlines() if line.strip()]
        entries = np.array([[int(c) for c in row] for row in rows], dtype=np.uint8)
        return cls(n, predicate, entries)


def build_comm_matrix(predicate: str, n: int, allow_large: bool = False) -> CommMatrix:
    key = predicate.upper()
    if key not in MATRIX_PREDICATES:
        raise ValueError(f"unknown matrix predicate {predicate!r}; known: {MATRIX_PREDICATES}")
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > DEFAULT_MAX_N and not (allow_large and n == DEFAULT_MAX_N + 1):
        raise ResourceError(
            f"matrix side 2^(2^{n}) is too large; n <= {DEFAULT_MAX_N} by default, n = 4 needs allow_large"
        )
    side = 1 << (1 << n)
    idx = np.arange(side, dtype=np.int64)
    both = idx[:, None] & idx[None, :]
    if key == "EQ":
        entries = idx[:, None] == idx[None, :]
    elif key == "IP":
        pop = np.vectorize(lambda v: bin(int(v)).count("1") & 1, otypes=[np.uint8])
        entries = pop(both)
    elif key == "DISJ":
        entries = both != 0
    else:
        entries = both == 0
    return CommMatrix(n, key, entries.astype(np.uint8))


def exact_rank(matrix: CommMatrix | np.ndarray) -> int:
    """Rank over the rationals by Bareiss fraction-free elimination on Python ints."""
    data = matrix.entries if isinstance(matrix, CommMatrix) else np.asarray(matrix)
    rows = [[int(v) for v in row] for row in data]
    if not rows or not rows[0]:
        return 0
    nrows, ncols = len(rows), len(rows[0])
    rank, prev = 0, 1
    for col in range(ncols):
        pivot = next((r for r in range(rank, nrows) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        p = rows[rank]
        for r in range(rank + 1, nrows):
            row = rows[r]
            a = row[col]
            pc = p[col]
            rows[r] = [(pc * row[c] - a * p[c]) // prev for c in range(ncols)]
        prev = p[col]
        rank += 1
        if rank == nrows:
            break
    return rank


def hamming_distance(g: OracleTable, h: OracleTable) -> int:
    if g.n != h.n:
        raise ArityError(f"arity mismatch {g.n} vs {h.n}")
    return int((g.bits != h.bits).sum())
