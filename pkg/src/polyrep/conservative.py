"""Conservative games: formal equilibria, skew models, Hamiltonians, Casimirs.

A game is conservative when it has a formal equilibrium ``q`` (group-constant
payoffs ``Aq`` with unit group sums) and a factorisation ``A ~ A0 D`` modulo
the equal-rows kernel, with ``A0`` skew and ``D`` a block-scalar diagonal of
nonzero scalings. The interior dynamics is then Hamiltonian for a quadratic
Poisson structure built from ``A0``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import rational as ra
from .game import GameError, GameSpec, equal_rows_equivalent
from .lp import linprog_free
from .rational import Matrix, Vector, fmt, frac, vec


# ------------------------------------------------------ formal equilibria


@dataclass(frozen=True)
class FormalEquilibriumSet:
    """Affine set ``particular + span(kernel_basis)`` of formal equilibria.

    ``interior`` tells whether the affine set meets the open positive orthant,
    and ``margin`` is the largest achievable minimum coordinate.
    """

    particular: Vector
    kernel_basis: tuple[Vector, ...]
    interior: bool
    margin: Fraction

    @property
    def dimension(self) -> int:
        return len(self.kernel_basis)


def _equilibrium_system(g: GameSpec) -> tuple[Matrix, Vector]:
    A = g.payoff
    rows, rhs = [], []
    for r in g.group_ranges:
        for i in r[1:]:
            rows.append(tuple(A[i][j] - A[r[0]][j] for j in range(g.n)))
            rhs.append(Fraction(0))
    for r in g.group_ranges:
        rows.append(tuple(Fraction(int(j in r)) for j in range(g.n)))
        rhs.append(Fraction(1))
    return tuple(rows), tuple(rhs)


def is_formal_equilibrium(g: GameSpec, q: Sequence) -> bool:
    rows, rhs = _equilibrium_system(g)
    return ra.matvec(rows, vec(q)) == rhs


def formal_equilibria(g: GameSpec) -> FormalEquilibriumSet | None:
    """Solve the formal-equilibrium system exactly.

    The particular solution is the minimum-norm one, moved along the kernel
    to the point of maximal minimum coordinate when that maximum is
    positive; remaining ties are broken by lexicographically minimising the
    coordinates. Returns None when the system is inconsistent.
    """
    rows, rhs = _equilibrium_system(g)
    q0 = ra.min_norm_solution(rows, rhs)
    if q0 is None:
        return None
    hom = tuple(r for r in rows)
    kernel = tuple(ra.primitive_integer(w) for w in ra.nullspace(hom, g.n))
    if not kernel:
        margin = min(q0)
        return FormalEquilibriumSet(q0, kernel, margin > 0, margin)

    k = len(kernel)
    # variables: t_1..t_k, m ; maximise m subject to q0 + K t >= m, m <= 1
    def coord_rows():
        for i in range(g.n):
            yield [-w[i] for w in kernel] + [Fraction(1)], q0[i]

    A_ub = [r for r, _ in coord_rows()] + [[0] * k + [1]]
    b_ub = [b for _, b in coord_rows()] + [1]
    res = linprog_free([0] * k + [1], A_ub=A_ub, b_ub=b_ub)
    margin = res.value
    q = q0
    if margin > 0:
        # fix the margin, then lexicographically minimise q_1, q_2, ...
        fixed_ub = [r[:k] for r in A_ub[:-1]]
        fixed_b = [b - margin for b in b_ub[:-1]]
        eq_rows: list[list[Fraction]] = []
        eq_rhs: list[Fraction] = []
        t = res.x[:k]
        for i in range(g.n):
            obj = [-w[i] for w in kernel]
            sub = linprog_free(obj, fixed_ub, fixed_b, eq_rows, eq_rhs)
            t = sub.x
            eq_rows.append([w[i] for w in kernel])
            eq_rhs.append(sum((w[i] * ti for w, ti in zip(kernel, t)), Fraction(0)))
        q = tuple(q0[i] + sum((w[i] * ti for w, ti in zip(kernel, t)), Fraction(0)) for i in range(g.n))
    return FormalEquilibriumSet(q, kernel, margin > 0, margin)


# ---------------------------------------------------- skew decomposition


@dataclass(frozen=True)
class SkewDecomposition:
    """Skew model ``A0`` with scaling vector ``scaling`` (one entry per group)."""

    A0: Matrix
    scaling: Vector

    def D(self, g: GameSpec) -> Matrix:
        diag = [self.scaling[a] for a in g.group_of]
        return tuple(tuple(diag[i] if i == j else Fraction(0) for j in range(g.n)) for i in range(g.n))


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    failures: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.ok


def verify_skew_decomposition(g: GameSpec, A0, scaling) -> VerifyResult:
    """Check every requirement on a candidate skew model and name the failures."""
    A0, scaling = ra.mat(A0), vec(scaling)
    fails = []
    if len(A0) != g.n or any(len(r) != g.n for r in A0):
        return VerifyResult(False, ("A0 has the wrong shape",))
    if len(scaling) != g.p:
        return VerifyResult(False, ("scaling vector has the wrong length",))
    if not ra.is_skew(A0):
        fails.append("A0 is not skew-symmetric")
    if any(s == 0 for s in scaling):
        fails.append("a scaling entry is zero")
    AD = tuple(tuple(A0[i][j] * scaling[g.group_of[j]] for j in range(g.n)) for i in range(g.n))
    if not equal_rows_equivalent(g.payoff, AD, g):
        fails.append("A and A0*D differ by more than equal-row blocks")
    return VerifyResult(not fails, tuple(fails))


def _skew_system(g: GameSpec) -> tuple[Matrix, list]:
    """Linear system in (scalings, d) whose kernel parametrises all skew models."""
    p, n = g.p, g.n
    unknowns = [("s", a) for a in range(p)]
    unknowns += [("d", a, b, j) for a in range(p) for b in range(p) for j in g.group_ranges[b]]
    col = {u: k for k, u in enumerate(unknowns)}
    rows = []
    A = g.payoff
    for i in range(n):
        for j in range(i, n):
            a, b = g.group_of[i], g.group_of[j]
            r = [Fraction(0)] * len(unknowns)
            r[col[("s", a)]] += A[i][j]
            r[col[("s", b)]] += A[j][i]
            r[col[("d", a, b, j)]] -= 1
            r[col[("d", b, a, i)]] -= 1
            rows.append(tuple(r))
    return tuple(rows), unknowns


def _nonzero_combination(basis: Sequence[Vector]) -> Vector | None:
    """A vector in span(basis) with no zero coordinate, or None.

    Single basis vectors and +-1 sign combinations are tried first, then points
    on the moment curve, of which only finitely many can fail.
    """
    if not basis:
        return None
    dim = len(basis[0])
    for coord in range(dim):
        if all(b[coord] == 0 for b in basis):
            return None

    def combo(coeffs):
        return tuple(sum((c * b[i] for c, b in zip(coeffs, basis)), Fraction(0)) for i in range(dim))

    for b in basis:
        if all(x != 0 for x in b):
            return b
    for signs in itertools.product((1, -1), repeat=len(basis)):
        if signs[0] < 0:
            continue
        v = combo(signs)
        if all(x != 0 for x in v):
            return v
    for t in itertools.count(2):
        v = combo([Fraction(t) ** k for k in range(len(basis))])
        if all(x != 0 for x in v):
            return v
    return None  # pragma: no cover


def find_skew_decomposition(g: GameSpec) -> SkewDecomposition | None:
    """Search for a skew model of ``g``.

    Writing ``d = scaling * c`` makes the skewness conditions linear. A
    scaling vector with no zero entry is chosen in the projection of the
    kernel, normalised to a primitive integer vector with positive first
    entry, and the column constants are then taken of minimal norm.
    """
    rows, unknowns = _skew_system(g)
    p = g.p
    kernel = ra.nullspace(rows, len(unknowns))
    proj = [k[:p] for k in kernel]
    red, piv = ra.rref(tuple(proj)) if proj else ((), ())
    basis = [r for r in red if any(x != 0 for x in r)]
    s = _nonzero_combination(basis)
    if s is None:
        return None
    s = ra.primitive_integer(s)
    if s[0] < 0:
        s = tuple(-x for x in s)
    # solve for d with the scalings fixed
    d_cols = list(range(p, len(unknowns)))
    sub = tuple(tuple(r[c] for c in d_cols) for r in rows)
    rhs = tuple(-sum((r[a] * s[a] for a in range(p)), Fraction(0)) for r in rows)
    d = ra.min_norm_solution(sub, rhs)
    if d is None:  # pragma: no cover - s lies in the projected kernel
        return None
    dval = {unknowns[c]: d[k] for k, c in enumerate(d_cols)}
    A = g.payoff
    A0 = []
    for i in range(g.n):
        a = g.group_of[i]
        row = []
        for j in range(g.n):
            b = g.group_of[j]
            cj = dval[("d", a, b, j)] / s[a]
            row.append((A[i][j] - cj) / s[b])
        A0.append(tuple(row))
    return SkewDecomposition(tuple(A0), s)


def skew_decomposition(g: GameSpec, mode: str = "find", A0=None, scaling=None):
    """Find a skew model (``mode="find"``) or check a given one (``mode="verify"``)."""
    if mode == "find":
        return find_skew_decomposition(g)
    if mode == "verify":
        return verify_skew_decomposition(g, A0, scaling)
    raise ValueError(f"unknown mode {mode!r}")


# ------------------------------------------------------- Hamiltonian


@dataclass(frozen=True)
class HamiltonianSpec:
    """Coefficients ``scaling[group(i)] * q_i`` of the logarithmic Hamiltonian."""

    q: Vector
    scaling: Vector
    group_of: tuple[int, ...]

    @property
    def coefficients(self) -> Vector:
        return tuple(self.scaling[a] * qi for a, qi in zip(self.group_of, self.q))

    def shifted(self, direction: Sequence, t) -> "HamiltonianSpec":
        """Move ``q`` along a kernel direction of the equilibrium system."""
        t = frac(t)
        return HamiltonianSpec(tuple(qi + t * wi for qi, wi in zip(self.q, vec(direction))), self.scaling, self.group_of)


def hamiltonian_spec(g: GameSpec, q, sd: SkewDecomposition) -> HamiltonianSpec:
    return HamiltonianSpec(vec(q), sd.scaling, g.group_of)


def hamiltonian_eval(hs: HamiltonianSpec, x) -> float:
    """Evaluate ``sum_i c_i log x_i`` in binary64."""
    if any(xi <= 0 for xi in x):
        raise ValueError("Hamiltonian undefined on the boundary (some x_i <= 0)")
    return math.fsum(float(c) * math.log(float(xi)) for c, xi in zip(hs.coefficients, x) if c != 0)


def hamiltonian_gradient(hs: HamiltonianSpec, x) -> Vector:
    """Exact gradient ``c_i / x_i`` at an interior rational point."""
    return tuple(c / frac(xi) for c, xi in zip(hs.coefficients, x))


def casimir_eval(w: Sequence, x) -> float:
    if any(xi <= 0 for xi in x):
        raise ValueError("Casimir undefined on the boundary (some x_i <= 0)")
    return math.fsum(float(wi) * math.log(float(xi)) for wi, xi in zip(w, x) if wi != 0)


# -------------------------------------------------- Poisson structure


def poisson_field_at(g: GameSpec, sd: SkewDecomposition, x) -> Matrix:
    """The quadratic Poisson tensor ``-T_x D_x A0 D_x T_x^t`` at ``x``.

    ``D_x`` is ``diag(x)`` and ``T_x`` is block-diagonal with blocks
    ``x^a 1^t - I``.
    """
    x = vec(x)
    n = g.n
    T = [[Fraction(0)] * n for _ in range(n)]
    for r in g.group_ranges:
        for i in r:
            for j in r:
                T[i][j] = x[i] - (1 if i == j else 0)
    TD = tuple(tuple(T[i][j] * x[j] for j in range(n)) for i in range(n))
    M = ra.matmul(ra.matmul(TD, sd.A0), ra.transpose(TD))
    return ra.scale(-1, M)


def casimir_basis(g: GameSpec) -> tuple[Vector, ...]:
    """Basis of ``Ker(A)`` intersected with the zero-group-sum subspace.

    Vectors are primitive integer with positive last nonzero entry.
    """
    rows = tuple(g.payoff) + tuple(
        tuple(Fraction(int(j in r)) for j in range(g.n)) for r in g.group_ranges
    )
    return tuple(ra.primitive_integer(w) for w in ra.nullspace(rows, g.n))


def kernel_dimension(g: GameSpec) -> int:
    return len(ra.nullspace(g.payoff, g.n))


# --------------------------------------------------------- record


@dataclass(frozen=True)
class Conservativity:
    conservative: bool
    q: Vector | None
    scaling: Vector | None
    A0: Matrix | None
    casimirs: tuple[Vector, ...]
    equilibria: FormalEquilibriumSet | None
    supplied_equilibrium_ok: bool | None

    def as_dict(self) -> dict:
        def v(x):
            return None if x is None else [fmt(t) for t in x]

        return {
            "conservative": self.conservative,
            "q": v(self.q),
            "scaling": v(self.scaling),
            "A0": None if self.A0 is None else [v(r) for r in self.A0],
            "casimirs": [v(w) for w in self.casimirs],
            "equilibrium_kernel": [] if self.equilibria is None else [v(w) for w in self.equilibria.kernel_basis],
            "interior_equilibrium": None if self.equilibria is None else self.equilibria.interior,
            "supplied_equilibrium_ok": self.supplied_equilibrium_ok,
        }


def conservativity(g: GameSpec) -> Conservativity:
    """Decide conservativity of ``g``.

    When the game file supplies an equilibrium that passes the exact check
    it is used as ``q``; otherwise the deterministic selection of
    :func:`formal_equilibria` is used. When ``A`` is itself skew the trivial
    model ``(A, 1)`` is preferred.
    """
    fes = formal_equilibria(g)
    supplied_ok = None
    q = None
    if g.equilibrium is not None:
        supplied_ok = is_formal_equilibrium(g, g.equilibrium)
        if supplied_ok:
            q = g.equilibrium
    if q is None and fes is not None:
        q = fes.particular
    ones = (Fraction(1),) * g.p
    if verify_skew_decomposition(g, g.payoff, ones):
        sd = SkewDecomposition(g.payoff, ones)
    else:
        sd = find_skew_decomposition(g)
    cons = fes is not None and sd is not None
    return Conservativity(
        cons,
        q,
        None if sd is None else sd.scaling,
        None if sd is None else sd.A0,
        casimir_basis(g),
        fes,
        supplied_ok,
    )


def conservative_data(g: GameSpec) -> tuple[SkewDecomposition, HamiltonianSpec, tuple[Vector, ...]]:
    """Skew model, Hamiltonian and Casimirs of a conservative game, or GameError."""
    rec = conservativity(g)
    if not rec.conservative:
        raise GameError("game is not conservative")
    sd = SkewDecomposition(rec.A0, rec.scaling)
    return sd, hamiltonian_spec(g, rec.q, sd), rec.casimirs
