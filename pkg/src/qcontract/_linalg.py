"""Exact linear algebra over any field type.

Entries must support +, -, *, /, bool (truthiness = nonzero) and ==.  Works
for Fraction, QVScalar, SqrtQScalar and finite-field elements alike.  Plain
ints are not accepted as entries since int/int would go through floats.
"""
from __future__ import annotations

from typing import Sequence, TypeVar

T = TypeVar("T")


def rref(rows: Sequence[Sequence[T]], ncols: int | None = None) -> tuple[list[list[T]], list[int]]:
    """Reduced row echelon form of a copy; returns (matrix, pivot columns)."""
    m = [list(r) for r in rows]
    if not m:
        return m, []
    if ncols is None:
        ncols = len(m[0])
    pivots: list[int] = []
    r = 0
    nrows = len(m)
    for c in range(ncols):
        pr = None
        for i in range(r, nrows):
            if m[i][c]:
                pr = i
                break
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        piv = m[r][c]
        m[r] = [x / piv for x in m[r]]
        row = m[r]
        for i in range(nrows):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], row)]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return m, pivots


def rank(rows: Sequence[Sequence[T]]) -> int:
    """Rank by Gaussian elimination without back-substitution."""
    m = [list(r) for r in rows]
    if not m:
        return 0
    ncols = len(m[0])
    rk = 0
    nrows = len(m)
    for c in range(ncols):
        pr = None
        for i in range(rk, nrows):
            if m[i][c]:
                pr = i
                break
        if pr is None:
            continue
        m[rk], m[pr] = m[pr], m[rk]
        piv = m[rk][c]
        prow = m[rk]
        for i in range(rk + 1, nrows):
            if m[i][c]:
                f = m[i][c] / piv
                m[i] = [a - f * b for a, b in zip(m[i], prow)]
        rk += 1
        if rk == nrows:
            break
    return rk


def nullspace(rows: Sequence[Sequence[T]], ncols: int, one: T) -> list[list[T]]:
    """Basis of the right kernel; needs the field's one to build unit vectors."""
    zero = one - one
    red, pivots = rref(rows, ncols)
    pivot_set = set(pivots)
    free = [c for c in range(ncols) if c not in pivot_set]
    basis = []
    for fc in free:
        vec = [zero] * ncols
        vec[fc] = one
        for r, pc in enumerate(pivots):
            vec[pc] = zero - red[r][fc]
        basis.append(vec)
    return basis


def solve(rows: Sequence[Sequence[T]], rhs: Sequence[T]) -> list[T] | None:
    """One solution of A x = b (free variables set to zero), or None."""
    if len(rows) != len(rhs):
        raise ValueError("matrix/vector size mismatch")
    if not rows:
        return []
    ncols = len(rows[0])
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    red, pivots = rref(aug, ncols + 1)
    if ncols in pivots:
        return None
    # any nonzero entry exists in red unless the system was all-zero
    some = rhs[0]
    zero = some - some
    sol = [zero] * ncols
    for r, pc in enumerate(pivots):
        sol[pc] = red[r][ncols]
    return sol


def in_row_span(rows: Sequence[Sequence[T]], vec: Sequence[T]) -> bool:
    """True iff vec lies in the row span of rows."""
    base = rank(rows)
    return rank(list(rows) + [list(vec)]) == base
