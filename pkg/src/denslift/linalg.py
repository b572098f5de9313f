"""Exact linear algebra over the scalar field and over operator coordinates."""

from __future__ import annotations

from typing import List, Sequence, Tuple

from .operators import DensityOperator
from .scalars import Scalar


def operator_coordinates(ops: Sequence[DensityOperator]) -> List[List[Scalar]]:
    """Flatten operators into rows of scalars over a shared coordinate basis.

    Coordinates are (weight power, derivative multi-index, jet monomial); the
    returned matrix has one column per operator.
    """
    coords = set()
    for op in ops:
        for (r, alpha), c in op.terms.items():
            for mono in c.terms:
                coords.add((r, alpha, mono))
    ordered = sorted(coords, key=lambda k: (k[0], k[1], str(k[2])))
    rows = []
    for r, alpha, mono in ordered:
        row = []
        for op in ops:
            c = op.terms.get((r, alpha))
            row.append(c.terms.get(mono, Scalar.of(0)) if c is not None else Scalar.of(0))
        rows.append(row)
    return rows


def rank(matrix: List[List[Scalar]]) -> int:
    """Row-echelon rank by exact Gaussian elimination."""
    rows = [list(r) for r in matrix]
    if not rows:
        return 0
    ncols = len(rows[0])
    rk = 0
    for col in range(ncols):
        pivot = None
        for i in range(rk, len(rows)):
            if not rows[i][col].is_zero():
                pivot = i
                break
        if pivot is None:
            continue
        rows[rk], rows[pivot] = rows[pivot], rows[rk]
        inv = Scalar.of(1) / rows[rk][col]
        rows[rk] = [entry * inv for entry in rows[rk]]
        for i in range(len(rows)):
            if i != rk and not rows[i][col].is_zero():
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rk])]
        rk += 1
        if rk == len(rows):
            break
    return rk


def nullspace(matrix: List[List[Scalar]]) -> List[List[Scalar]]:
    """Basis of the right kernel, exact."""
    rows = [list(r) for r in matrix]
    if not rows:
        return []
    ncols = len(rows[0])
    pivots: List[Tuple[int, int]] = []
    rk = 0
    for col in range(ncols):
        pivot = None
        for i in range(rk, len(rows)):
            if not rows[i][col].is_zero():
                pivot = i
                break
        if pivot is None:
            continue
        rows[rk], rows[pivot] = rows[pivot], rows[rk]
        inv = Scalar.of(1) / rows[rk][col]
        rows[rk] = [entry * inv for entry in rows[rk]]
        for i in range(len(rows)):
            if i != rk and not rows[i][col].is_zero():
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rk])]
        pivots.append((rk, col))
        rk += 1
        if rk == len(rows):
            break
    pivot_cols = {c for _, c in pivots}
    free_cols = [c for c in range(ncols) if c not in pivot_cols]
    basis = []
    for free in free_cols:
        vec = [Scalar.of(0)] * ncols
        vec[free] = Scalar.of(1)
        for row, col in pivots:
            vec[col] = -rows[row][free]
        basis.append(vec)
    return basis
