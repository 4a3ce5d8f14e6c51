"""Exact rational linear programming: two-phase dense tableau simplex with Bland's rule.

Meant for the small programs of the Plateau solver, where equality cases
and integrality checks must be decided exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

__all__ = ["ExactLPResult", "solve_exact_lp"]


@dataclass(frozen=True)
class ExactLPResult:
    status: str  # optimal | infeasible | unbounded
    x: tuple = ()
    objective: Fraction | None = None
    dual: tuple = ()  # y with A^T y <= c and b.y = objective at optimality
    pivots: int = 0

    @property
    def dual_bound(self) -> Fraction | None:
        return self.objective if self.status == "optimal" else None


def _pivot(T: list[list[Fraction]], obj: list[Fraction], r: int, c: int) -> None:
    row = T[r]
    p = row[c]
    if p != 1:
        inv = 1 / p
        T[r] = row = [v * inv for v in row]
    for i, other in enumerate(T):
        if i != r:
            f = other[c]
            if f:
                T[i] = [a - f * b for a, b in zip(other, row)]
    f = obj[c]
    if f:
        obj[:] = [a - f * b for a, b in zip(obj, row)]


def _simplex(T, obj, basis, allowed: Sequence[bool], max_pivots: int) -> tuple[str, int]:
    """Minimize with reduced costs in ``obj`` (last entry = -objective); Bland's rule."""
    ncols = len(obj) - 1
    pivots = 0
    while True:
        enter = next((j for j in range(ncols) if allowed[j] and obj[j] < 0), None)
        if enter is None:
            return "optimal", pivots
        best = None
        leave = None
        for i, row in enumerate(T):
            a = row[enter]
            if a > 0:
                ratio = row[-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            return "unbounded", pivots
        _pivot(T, obj, leave, enter)
        basis[leave] = enter
        pivots += 1
        if pivots > max_pivots:
            raise RuntimeError("pivot limit exceeded")


def solve_exact_lp(c: Sequence, A_eq: Sequence[Sequence], b_eq: Sequence, max_pivots: int = 200000) -> ExactLPResult:
    """min c.x subject to A_eq x = b_eq, x >= 0, in exact rational arithmetic."""
    c = [Fraction(v) for v in c]
    A = [[Fraction(v) for v in row] for row in A_eq]
    b = [Fraction(v) for v in b_eq]
    m, n = len(A), len(c)
    if any(len(row) != n for row in A) or len(b) != m:
        raise ValueError("inconsistent LP dimensions")
    sign = []
    for i in range(m):
        s = -1 if b[i] < 0 else 1
        sign.append(s)
        if s < 0:
            A[i] = [-v for v in A[i]]
            b[i] = -b[i]
    # columns: n structural, m artificial, rhs
    T = [A[i] + [Fraction(int(k == i)) for k in range(m)] + [b[i]] for i in range(m)]
    basis = [n + i for i in range(m)]
    obj = [Fraction(0)] * (n + m + 1)
    for i in range(m):
        obj = [o - t for o, t in zip(obj, T[i])]
    for i in range(m):
        obj[n + i] = Fraction(0)
    allowed = [True] * (n + m)
    status, piv1 = _simplex(T, obj, basis, allowed, max_pivots)
    if -obj[-1] != 0:
        return ExactLPResult("infeasible", pivots=piv1)
    # drive artificials out of the basis; rows where that is impossible are redundant
    redundant = set()
    for i in range(m):
        if basis[i] >= n:
            j = next((j for j in range(n) if T[i][j] != 0), None)
            if j is None:
                redundant.add(i)
            else:
                _pivot(T, obj, i, j)
                basis[i] = j
    # phase 2 objective in terms of the current basis
    obj = c + [Fraction(0)] * m + [Fraction(0)]
    for i in range(m):
        if i in redundant:
            continue
        cb = obj[basis[i]]
        if cb:
            obj = [o - cb * t for o, t in zip(obj, T[i])]
    allowed = [True] * n + [False] * m
    rows_T = [T[i] for i in range(m) if i not in redundant]
    rows_basis = [basis[i] for i in range(m) if i not in redundant]
    status, piv2 = _simplex(rows_T, obj, rows_basis, allowed, max_pivots)
    if status != "optimal":
        return ExactLPResult(status, pivots=piv1 + piv2)
    x = [Fraction(0)] * n
    for row, j in zip(rows_T, rows_basis):
        x[j] = row[-1]
    value = -obj[-1]
    # reduced cost of artificial column i is -y_i (sign-adjusted rows)
    y = tuple(-obj[n + i] * sign[i] for i in range(m))
    return ExactLPResult("optimal", tuple(x), value, y, piv1 + piv2)
