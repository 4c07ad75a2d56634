"""Exact rational linear algebra on lists of :class:`fractions.Fraction`."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


def to_fraction(value) -> Fraction:
    """Coerce ints, Fractions, floats and ``"p/q"`` strings to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, (float, np.floating)):
        return Fraction(float(value))
    raise TypeError(f"cannot convert {type(value).__name__} to Fraction")


def fraction_str(q: Fraction) -> str:
    q = to_fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def is_exact_scalar(value) -> bool:
    return isinstance(value, (int, Fraction, np.integer)) and not isinstance(value, bool)


def rational_approx(x: float, max_den: int = 10**9) -> Fraction:
    return Fraction(float(x)).limit_denominator(max_den)


def rational_sqrt(q: Fraction) -> Fraction | None:
    """Exact square root of a nonnegative rational, or None if irrational."""
    q = to_fraction(q)
    if q < 0:
        return None
    from math import isqrt

    n, d = q.numerator, q.denominator
    rn, rd = isqrt(n), isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def fraction_vector(values: Iterable) -> np.ndarray:
    vals = [to_fraction(v) for v in values]
    out = np.empty(len(vals), dtype=object)
    out[:] = vals
    return out


def zeros_exact(n: int) -> np.ndarray:
    out = np.empty(n, dtype=object)
    out[:] = [Fraction(0)] * n
    return out


class RowSpace:
    """Incrementally maintained row-echelon basis of a subspace of Q^n.

    Rows are kept fully reduced, keyed by pivot column, so membership and
    reduction are a single sweep.
    """

    def __init__(self, n: int):
        self.n = n
        self.rows: dict[int, list[Fraction]] = {}

    def __len__(self) -> int:
        return len(self.rows)

    def reduce(self, vec: Sequence) -> list[Fraction]:
        v = [to_fraction(x) for x in vec]
        for p in sorted(self.rows):
            c = v[p]
            if c:
                row = self.rows[p]
                for j in range(p, self.n):
                    if row[j]:
                        v[j] -= c * row[j]
        return v

    def add(self, vec: Sequence) -> bool:
        v = self.reduce(vec)
        piv = next((j for j, x in enumerate(v) if x), None)
        if piv is None:
            return False
        c = v[piv]
        v = [x / c for x in v]
        for p, row in self.rows.items():
            f = row[piv]
            if f:
                self.rows[p] = [a - f * b for a, b in zip(row, v)]
        self.rows[piv] = v
        return True

    def contains(self, vec: Sequence) -> bool:
        return not any(self.reduce(vec))

    @property
    def pivots(self) -> list[int]:
        return sorted(self.rows)

    def basis(self) -> list[list[Fraction]]:
        return [self.rows[p] for p in self.pivots]


def rank(rows: Iterable[Sequence]) -> int:
    rows = list(rows)
    if not rows:
        return 0
    rs = RowSpace(len(rows[0]))
    for r in rows:
        rs.add(r)
    return len(rs)


def solve_combination(vectors: Sequence[Sequence], target: Sequence) -> list[Fraction] | None:
    """Exact coefficients c with sum_i c_i vectors[i] == target, or None.

    Uses Gauss-Jordan on the augmented system; free variables are set to 0.
    """
    m = len(vectors)
    n = len(target)
    # rows of the system A c = b where A[:, i] = vectors[i]
    A = [[to_fraction(vectors[i][r]) for i in range(m)] + [to_fraction(target[r])] for r in range(n)]
    piv_cols: list[int] = []
    row = 0
    for col in range(m):
        sel = next((r for r in range(row, n) if A[r][col]), None)
        if sel is None:
            continue
        A[row], A[sel] = A[sel], A[row]
        p = A[row][col]
        A[row] = [x / p for x in A[row]]
        for r in range(n):
            if r != row and A[r][col]:
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[row])]
        piv_cols.append(col)
        row += 1
        if row == n:
            break
    for r in range(row, n):
        if A[r][m]:
            return None
    coeffs = [Fraction(0)] * m
    for r, col in enumerate(piv_cols):
        coeffs[col] = A[r][m]
    return coeffs
