"""Exact linear programming by the two-phase simplex method.

Bland's rule is used for both entering and leaving variables, so the method
terminates on degenerate problems. Problem sizes here are tiny (tens of
variables), which makes dense Fraction tableaux perfectly adequate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .rational import Vector, frac


@dataclass(frozen=True)
class LPResult:
    """Outcome of :func:`linprog`.

    Attributes
    ----------
    status : str
        ``"optimal"``, ``"infeasible"`` or ``"unbounded"``.
    x : tuple of Fraction or None
        An optimal vertex when ``status == "optimal"``.
    value : Fraction or None
        Objective value at ``x``.
    """

    status: str
    x: Vector | None = None
    value: Fraction | None = None


def _pivot(tab: list[list[Fraction]], basis: list[int], row: int, col: int) -> None:
    piv = tab[row][col]
    tab[row] = [v / piv for v in tab[row]]
    prow = tab[row]
    for i, r in enumerate(tab):
        if i != row and r[col] != 0:
            f = r[col]
            tab[i] = [a - f * b for a, b in zip(r, prow)]
    basis[row] = col


def _simplex(tab, basis, ncols: int, allowed: int) -> str:
    """Maximise the objective stored in the last tableau row.

    The last row holds reduced costs ``c_j - z_j`` negated, i.e. a column
    with a negative entry improves the objective. Only the first
    ``allowed`` columns may enter the basis.
    """
    m = len(tab) - 1
    while True:
        obj = tab[-1]
        col = next((j for j in range(allowed) if obj[j] < 0), None)
        if col is None:
            return "optimal"
        best = None
        for i in range(m):
            a = tab[i][col]
            if a > 0:
                ratio = tab[i][ncols] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return "unbounded"
        _pivot(tab, basis, best[1], col)


def linprog(
    c: Sequence,
    A_ub: Sequence[Sequence] = (),
    b_ub: Sequence = (),
    A_eq: Sequence[Sequence] = (),
    b_eq: Sequence = (),
) -> LPResult:
    """Maximise ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``.

    All data are converted to exact Fractions.

    Examples
    --------
    >>> linprog([1, 1], A_ub=[[1, 2], [3, 1]], b_ub=[4, 6]).value
    Fraction(14, 5)
    """
    c = [frac(v) for v in c]
    nvar = len(c)
    rows: list[tuple[list[Fraction], Fraction, int]] = []  # coefficients, rhs, slack sign
    for a, b in zip(A_ub, b_ub):
        rows.append(([frac(v) for v in a], frac(b), 1))
    for a, b in zip(A_eq, b_eq):
        rows.append(([frac(v) for v in a], frac(b), 0))
    nslack = sum(1 for r in rows if r[2])
    m = len(rows)
    # column layout: original | slacks | artificials | rhs
    ncols = nvar + nslack + m
    tab: list[list[Fraction]] = []
    k = 0
    for i, (a, b, has_slack) in enumerate(rows):
        row = a + [Fraction(0)] * (nslack + m) + [b]
        if has_slack:
            row[nvar + k] = Fraction(1)
            k += 1
        if b < 0:
            row = [-v for v in row]
        row[nvar + nslack + i] = Fraction(1)
        tab.append(row)
    basis = [nvar + nslack + i for i in range(m)]

    # phase one: maximise minus the sum of artificials
    obj = [Fraction(0)] * (ncols + 1)
    for row in tab:
        for j in range(nvar + nslack):
            obj[j] -= row[j]
        obj[ncols] -= row[ncols]
    tab.append(obj)
    _simplex(tab, basis, ncols, nvar + nslack)
    if tab[-1][ncols] != 0:
        return LPResult("infeasible")
    # drive remaining zero-level artificials out of the basis
    for i in range(m):
        if basis[i] >= nvar + nslack:
            col = next((j for j in range(nvar + nslack) if tab[i][j] != 0), None)
            if col is not None:
                _pivot(tab, basis, i, col)

    # phase two
    obj = [Fraction(0)] * (ncols + 1)
    for j in range(nvar):
        obj[j] = -c[j]
    for i, bj in enumerate(basis):
        if bj < nvar and c[bj] != 0:
            f = c[bj]
            obj = [o + f * t for o, t in zip(obj, tab[i])]
    tab[-1] = obj
    for i in range(m):
        if basis[i] >= nvar + nslack:
            # redundant constraint row, keep artificial at zero
            tab[i][nvar + nslack + i] = Fraction(1)
    status = _simplex(tab, basis, ncols, nvar + nslack)
    if status == "unbounded":
        return LPResult("unbounded")
    x = [Fraction(0)] * nvar
    for i, bj in enumerate(basis):
        if bj < nvar:
            x[bj] = tab[i][ncols]
    value = sum((ci * xi for ci, xi in zip(c, x)), Fraction(0))
    return LPResult("optimal", tuple(x), value)


def linprog_free(
    c: Sequence,
    A_ub: Sequence[Sequence] = (),
    b_ub: Sequence = (),
    A_eq: Sequence[Sequence] = (),
    b_eq: Sequence = (),
) -> LPResult:
    """Like :func:`linprog` but with unrestricted (free) variables.

    Each variable is split as ``x = u - v`` with ``u, v >= 0``.
    """
    def split(rows):
        return [[frac(a) for a in r] + [-frac(a) for a in r] for r in rows]

    c = [frac(v) for v in c]
    res = linprog(c + [-v for v in c], split(A_ub), b_ub, split(A_eq), b_eq)
    if res.status != "optimal":
        return res
    n = len(c)
    x = tuple(res.x[i] - res.x[n + i] for i in range(n))
    return LPResult("optimal", x, res.value)


def strict_feasible_point(rows: Sequence[Sequence]) -> Vector | None:
    """A point ``y`` with ``r @ y > 0`` for every row, or None if none exists.

    The homogeneous strict system is feasible iff ``r @ y >= 1`` is, by scaling.
    """
    if not rows:
        return None
    nv = len(rows[0])
    res = linprog_free(
        [0] * nv,
        A_ub=[[-frac(a) for a in r] for r in rows],
        b_ub=[-1] * len(rows),
    )
    return res.x if res.status == "optimal" else None
