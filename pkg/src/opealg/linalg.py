"""Exact Gaussian elimination over the rationals."""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Hashable, List, Optional, Sequence, Tuple


def row_echelon(rows: Sequence[Sequence[Fraction]]) -> Tuple[List[List[Fraction]], List[int]]:
    """Reduced row echelon form and pivot columns."""
    m = [[Fraction(x) for x in r] for r in rows]
    pivots: List[int] = []
    if not m:
        return m, pivots
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c]), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    return len(row_echelon(rows)[1])


def vectors_to_rows(vectors: Sequence[Dict[Hashable, Fraction]], keys: Optional[Sequence[Hashable]] = None):
    """Dense rows of sparse vectors over a common key order."""
    if keys is None:
        seen = {}
        for v in vectors:
            for k in v:
                seen.setdefault(k, None)
        keys = sorted(seen, key=repr)
    index = {k: i for i, k in enumerate(keys)}
    rows = []
    for v in vectors:
        row = [Fraction(0)] * len(keys)
        for k, c in v.items():
            row[index[k]] = c
        rows.append(row)
    return rows, list(keys)


def sparse_rank(vectors: Sequence[Dict[Hashable, Fraction]]) -> int:
    rows, _ = vectors_to_rows(vectors)
    return rank(rows) if rows and rows[0] else 0


def solve_in_span(vectors: Sequence[Dict[Hashable, Fraction]], target: Dict[Hashable, Fraction]):
    """Coefficients ``x`` with ``sum x_i vectors[i] == target``, or None."""
    rows, keys = vectors_to_rows(list(vectors) + [target])
    n = len(vectors)
    # columns are the vectors; augmented with the target
    aug = [[rows[j][k] for j in range(n)] + [rows[n][k]] for k in range(len(keys))]
    if not aug:
        return [Fraction(0)] * n
    red, piv = row_echelon(aug)
    if n in piv:
        return None
    x = [Fraction(0)] * n
    for row, c in zip(red, piv):
        x[c] = row[n]
    return x


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> List[List[Fraction]]:
    """Basis of ``{x : rows @ x = 0}``."""
    red, piv = row_echelon(rows) if rows else ([], [])
    free = [c for c in range(ncols) if c not in piv]
    out = []
    for f in free:
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for row, c in zip(red, piv):
            x[c] = -row[f]
        out.append(x)
    return out


class SparseEchelon:
    """Incrementally maintained echelon basis of sparse vectors.

    Keys are ordered by ``repr``; each stored row has coefficient 1 at its
    pivot and 0 at every other stored pivot.
    """

    def __init__(self):
        self.rows: Dict[Hashable, Dict[Hashable, Fraction]] = {}

    def __len__(self) -> int:
        return len(self.rows)

    def reduce(self, vec: Dict[Hashable, Fraction]) -> Dict[Hashable, Fraction]:
        out = dict(vec)
        for p, row in self.rows.items():
            c = out.get(p)
            if c:
                for k, x in row.items():
                    y = out.get(k, 0) - c * x
                    if y:
                        out[k] = y
                    else:
                        out.pop(k, None)
        return out

    def add(self, vec: Dict[Hashable, Fraction]) -> bool:
        """Insert ``vec``; False when it is already in the span."""
        r = self.reduce(vec)
        if not r:
            return False
        p = min(r, key=repr)
        inv = 1 / r[p]
        r = {k: x * inv for k, x in r.items()}
        for q, row in self.rows.items():
            c = row.get(p)
            if c:
                for k, x in r.items():
                    y = row.get(k, 0) - c * x
                    if y:
                        row[k] = y
                    else:
                        row.pop(k, None)
        self.rows[p] = r
        return True

    def contains(self, vec: Dict[Hashable, Fraction]) -> bool:
        return not self.reduce(vec)
