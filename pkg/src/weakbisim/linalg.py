"""Exact rational linear algebra: Gaussian elimination and an LP feasibility test.

Everything here works on :class:`fractions.Fraction` and never rounds.
Matrices are lists of rows.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Matrix = list[list[Fraction]]


class SingularMatrix(ArithmeticError):
    pass


def solve(a: Sequence[Sequence], b: Sequence) -> list[Fraction]:
    """Solve the square system ``a x = b`` exactly by Gauss-Jordan elimination."""
    n = len(a)
    m = [[Fraction(v) for v in row] + [Fraction(rhs)] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise SingularMatrix(f"no pivot in column {col}")
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        row = [v / p for v in m[col]]
        m[col] = row
        for r in range(n):
            if r != col and m[r][col] != 0:
                factor = m[r][col]
                m[r] = [x - factor * y for x, y in zip(m[r], row)]
    return [m[r][n] for r in range(n)]


def leading_pivots(a: Sequence[Sequence]) -> list[Fraction]:
    """Pivots of Gaussian elimination *without* row exchanges.

    The k-th pivot is the ratio of consecutive leading principal minors.  The
    list stops early (and ends in a non-positive value) as soon as a pivot is
    not positive, since later pivots are then meaningless for the M-matrix test.
    """
    n = len(a)
    m = [[Fraction(v) for v in row] for row in a]
    pivots = []
    for k in range(n):
        p = m[k][k]
        pivots.append(p)
        if p <= 0:
            break
        for r in range(k + 1, n):
            if m[r][k] != 0:
                f = m[r][k] / p
                m[r] = [x - f * y for x, y in zip(m[r], m[k])]
    return pivots


def spectral_class(a: Sequence[Sequence]) -> int:
    """Compare the spectral radius of an irreducible non-negative matrix with 1.

    Returns -1, 0 or 1 for rho < 1, rho == 1 and rho > 1.  Uses the M-matrix
    criterion on ``I - a``: rho <= 1 iff every proper leading principal minor is
    positive and the determinant is non-negative (irreducibility makes proper
    principal submatrices strictly subcritical whenever rho <= 1).
    """
    n = len(a)
    z = [[(1 if i == j else 0) - Fraction(a[i][j]) for j in range(n)] for i in range(n)]
    pivots = leading_pivots(z)
    if len(pivots) < n or any(p <= 0 for p in pivots[:-1]):
        return 1
    last = pivots[-1]
    return -1 if last > 0 else (0 if last == 0 else 1)


def nullspace_vector(a: Sequence[Sequence]) -> list[Fraction]:
    """A nonzero vector in the kernel of a square singular matrix."""
    n = len(a)
    m = [[Fraction(v) for v in row] for row in a]
    pivot_cols = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, n) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][c]
        m[r] = [v / p for v in m[r]]
        for i in range(n):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivot_cols.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivot_cols]
    if not free:
        raise ValueError("matrix is nonsingular")
    fc = free[0]
    x = [Fraction(0)] * n
    x[fc] = Fraction(1)
    for row, c in enumerate(pivot_cols):
        x[c] = -m[row][fc]
    return x


def convex_combination(point: Sequence, points: Sequence[Sequence]) -> list[Fraction] | None:
    """Coefficients ``lam >= 0`` with ``sum(lam) == 1`` and ``sum(lam[i] * points[i]) == point``.

    Returns ``None`` when ``point`` is outside the convex hull of ``points``.
    Phase one of the simplex method with Bland's rule on exact rationals.
    """
    k = len(points)
    if k == 0:
        return None
    d = len(point)
    # equality rows: coordinates, then the normalisation row
    rows = [[Fraction(points[j][i]) for j in range(k)] for i in range(d)]
    rows.append([Fraction(1)] * k)
    rhs = [Fraction(v) for v in point] + [Fraction(1)]
    for i, v in enumerate(rhs):
        if v < 0:
            rows[i] = [-x for x in rows[i]]
            rhs[i] = -v
    m = len(rows)
    # tableau columns: k structural, m artificial
    tab = [rows[i] + [Fraction(int(i == j)) for j in range(m)] + [rhs[i]] for i in range(m)]
    basis = [k + i for i in range(m)]
    ncols = k + m
    # objective: minimise the sum of artificials -> reduced costs
    cost = [Fraction(0)] * ncols + [Fraction(0)]
    for i in range(m):
        for j in range(ncols + 1):
            cost[j] -= tab[i][j]
    for i in range(m):
        cost[k + i] += 1
    while True:
        enter = next((j for j in range(ncols) if cost[j] < 0), None)
        if enter is None:
            break
        best = None
        for i in range(m):
            if tab[i][enter] > 0:
                ratio = tab[i][-1] / tab[i][enter]
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:  # unbounded cannot happen in phase one
            break
        r = best[1]
        p = tab[r][enter]
        tab[r] = [v / p for v in tab[r]]
        for i in range(m):
            if i != r and tab[i][enter] != 0:
                f = tab[i][enter]
                tab[i] = [x - f * y for x, y in zip(tab[i], tab[r])]
        if cost[enter] != 0:
            f = cost[enter]
            cost = [x - f * y for x, y in zip(cost, tab[r])]
        basis[r] = enter
    if cost[-1] != 0:
        return None
    lam = [Fraction(0)] * k
    for i, b in enumerate(basis):
        if b < k:
            lam[b] = tab[i][-1]
        elif tab[i][-1] != 0:
            return None
    return lam
