"""Exact rational linear algebra over :class:`fractions.Fraction`.

Matrices are tuples of row tuples. Every function accepts any nested
sequence of values convertible with :func:`frac` and returns immutable
tuples, so results can be stored in frozen dataclasses and shared freely.
"""

from __future__ import annotations

import math
import re
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Iterable, Sequence

Vector = tuple[Fraction, ...]
Matrix = tuple[tuple[Fraction, ...], ...]

_RATIONAL_RE = re.compile(r"^[+-]?\d+(/\d+)?$")


def frac(value) -> Fraction:
    """Convert ``value`` to an exact :class:`Fraction`.

    Accepts ints, Fractions, strings such as ``"3"``, ``"-7/2"`` or
    ``"0.125"`` (decimals are read exactly, never through binary floats),
    and floats (converted via their shortest decimal repr).
    Raises ``ValueError`` for anything else.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a rational number: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"not a rational number: {value!r}")
        return Fraction(Decimal(repr(value)))
    if isinstance(value, str):
        text = value.strip()
        if _RATIONAL_RE.match(text):
            if text.endswith("/0"):
                raise ValueError(f"zero denominator: {value!r}")
            return Fraction(text)
        try:
            dec = Decimal(text)
        except InvalidOperation:
            raise ValueError(f"not a rational number: {value!r}") from None
        if not dec.is_finite():
            raise ValueError(f"not a rational number: {value!r}")
        return Fraction(dec)
    raise ValueError(f"not a rational number: {value!r}")


def fmt(x: Fraction) -> str:
    """Canonical ``p/q`` string (``p`` alone when the denominator is 1)."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def vec(values: Iterable) -> Vector:
    return tuple(frac(v) for v in values)


def mat(rows: Iterable[Iterable]) -> Matrix:
    return tuple(vec(r) for r in rows)


def zeros(m: int, n: int | None = None) -> Matrix:
    n = m if n is None else n
    return tuple((Fraction(0),) * n for _ in range(m))


def identity(n: int) -> Matrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def shape(a: Matrix) -> tuple[int, int]:
    return len(a), (len(a[0]) if a else 0)


def transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a))


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if a and len(a[0]) != len(b):
        raise ValueError(f"shape mismatch {shape(a)} x {shape(b)}")
    bt = transpose(b)
    return tuple(
        tuple(sum((x * y for x, y in zip(row, col) if x and y), Fraction(0)) for col in bt)
        for row in a
    )


def matvec(a: Matrix, x: Sequence[Fraction]) -> Vector:
    return tuple(sum((p * q for p, q in zip(row, x) if p and q), Fraction(0)) for row in a)


def vecmat(x: Sequence[Fraction], a: Matrix) -> Vector:
    """Row vector times matrix."""
    return matvec(transpose(a), x)


def dot(x: Sequence[Fraction], y: Sequence[Fraction]) -> Fraction:
    return sum((p * q for p, q in zip(x, y) if p and q), Fraction(0))


def add(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x + y for x, y in zip(r, s)) for r, s in zip(a, b))


def sub(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x - y for x, y in zip(r, s)) for r, s in zip(a, b))


def scale(c, a: Matrix) -> Matrix:
    c = frac(c)
    return tuple(tuple(c * x for x in r) for r in a)


def is_zero(a: Matrix) -> bool:
    return all(x == 0 for r in a for x in r)


def is_skew(a: Matrix) -> bool:
    return is_zero(add(a, transpose(a)))


def submatrix(a: Matrix, rows: Sequence[int], cols: Sequence[int]) -> Matrix:
    return tuple(tuple(a[i][j] for j in cols) for i in rows)


def rref(a: Matrix) -> tuple[Matrix, tuple[int, ...]]:
    """Reduced row echelon form and the pivot column indices."""
    m = [list(r) for r in a]
    nrows, ncols = shape(a)
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(nrows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    return tuple(tuple(row) for row in m), tuple(pivots)


def rank(a: Matrix) -> int:
    return len(rref(a)[1]) if a else 0


def nullspace(a: Matrix, ncols: int | None = None) -> tuple[Vector, ...]:
    """Basis of ``{x : a x = 0}``, one vector per free column.

    ``ncols`` is needed only when ``a`` has no rows.
    """
    if not a:
        n = ncols or 0
        return tuple(identity(n))
    red, pivots = rref(a)
    n = len(a[0])
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        x = [Fraction(0)] * n
        x[f] = Fraction(1)
        for row, pc in zip(red, pivots):
            x[pc] = -row[f]
        basis.append(tuple(x))
    return tuple(basis)


def solve(a: Matrix, b: Sequence[Fraction]) -> Vector | None:
    """One solution of ``a x = b`` (free variables set to 0), or None."""
    n = len(a[0])
    aug = tuple(tuple(r) + (frac(bi),) for r, bi in zip(a, b))
    red, pivots = rref(aug)
    if n in pivots:
        return None
    x = [Fraction(0)] * n
    for row, pc in zip(red, pivots):
        x[pc] = row[n]
    return tuple(x)


def min_norm_solution(a: Matrix, b: Sequence[Fraction]) -> Vector | None:
    """The least Euclidean norm solution of a consistent system ``a x = b``.

    The minimiser is the unique solution lying in the row space of ``a``,
    computed exactly as ``R^T z`` with ``(R R^T) z = b_R`` over a maximal set
    ``R`` of independent rows.
    """
    if solve(a, b) is None:
        return None
    _, piv_rows = rref(transpose(a))
    rows = tuple(a[i] for i in piv_rows)
    rhs = tuple(frac(b[i]) for i in piv_rows)
    if not rows:
        return (Fraction(0),) * len(a[0])
    gram = matmul(rows, transpose(rows))
    z = solve(gram, rhs)
    return matvec(transpose(rows), z)


def inverse(a: Matrix) -> Matrix:
    n = len(a)
    aug = tuple(tuple(r) + e for r, e in zip(a, identity(n)))
    red, pivots = rref(aug)
    if pivots[:n] != tuple(range(n)):
        raise ZeroDivisionError("matrix is singular")
    return tuple(row[n:] for row in red)


def primitive_integer(v: Sequence[Fraction]) -> Vector:
    """Scale ``v`` to the primitive integer vector whose last nonzero entry is positive."""
    v = vec(v)
    nz = [x for x in v if x != 0]
    if not nz:
        return v
    lcm = 1
    for x in nz:
        lcm = lcm * x.denominator // math.gcd(lcm, x.denominator)
    ints = [int(x * lcm) for x in v]
    g = 0
    for k in ints:
        g = math.gcd(g, k)
    sign = 1 if nz[-1] > 0 else -1
    return tuple(Fraction(sign * k // g) for k in ints)


def format_matrix(a: Matrix) -> str:
    """Right-aligned fraction table, one row per line."""
    cells = [[fmt(x) for x in r] for r in a]
    width = max((len(c) for r in cells for c in r), default=1)
    return "\n".join(" ".join(c.rjust(width) for c in r) for r in cells)


# ----------------------------------------------------------- polynomials
# Coefficient lists run from the constant term upwards.


def charpoly(a: Matrix) -> tuple[Fraction, ...]:
    """Characteristic polynomial ``det(x I - a)`` by Faddeev-LeVerrier."""
    n = len(a)
    coeffs = [Fraction(0)] * (n + 1)
    coeffs[n] = Fraction(1)
    M = zeros(n)
    for k in range(1, n + 1):
        M = add(matmul(a, M), scale(coeffs[n - k + 1], identity(n)))
        AM = matmul(a, M)
        coeffs[n - k] = -sum(AM[i][i] for i in range(n)) / k
    return tuple(coeffs)


def poly_divmod(num: Sequence[Fraction], den: Sequence[Fraction]) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    num = list(num)
    q = [Fraction(0)] * max(len(num) - len(den) + 1, 1)
    while len(num) >= len(den) and any(num):
        shift = len(num) - len(den)
        c = num[-1] / den[-1]
        q[shift] = c
        for i, d in enumerate(den):
            num[i + shift] -= c * d
        num.pop()
    while len(num) > 1 and num[-1] == 0:
        num.pop()
    return tuple(q), tuple(num)


def root_multiplicity(poly: Sequence[Fraction], root) -> tuple[int, tuple[Fraction, ...]]:
    """Multiplicity of a rational root and the deflated cofactor."""
    root = frac(root)
    m = 0
    p = tuple(poly)
    while len(p) > 1:
        q, r = poly_divmod(p, (-root, Fraction(1)))
        if any(r):
            break
        p, m = q, m + 1
    return m, p
