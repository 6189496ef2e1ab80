"""Constant Poisson structures on vertex sectors and their Dirac reductions.

In the rescaled chart at a vertex ``v`` the quadratic Poisson tensor of a
conservative game converges to the constant skew matrix
``B_v = E_v A0 E_v^t``. Restricting to a cross-section (one coordinate
frozen) on a level of the Hamiltonian gives a Dirac bracket. This module
builds these matrices and checks exactly that the vertex passages and the
composed branch maps push one bracket onto the next.

Chart matrices are indexed by the facets at ``v`` in ascending order; the
``full`` variants embed them in ``n x n`` with zero rows and columns
elsewhere, which is the form used for all composed identities.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import rational as ra
from .conservative import HamiltonianSpec, SkewDecomposition
from .game import CellComplex, GameSpec
from .rational import Matrix, Vector, vec
from .skeleton import Branch, CharacterTable, FlowGraph, PiecewiseLinearMap, transition_matrix

Vertex = tuple[int, ...]


def embed(M: Matrix, coords: Sequence[int], n: int) -> Matrix:
    """Place a chart matrix into ``n x n`` at rows and columns ``coords``."""
    out = [[Fraction(0)] * n for _ in range(n)]
    for a, i in enumerate(coords):
        for b, j in enumerate(coords):
            out[i][j] = M[a][b]
    return tuple(tuple(r) for r in out)


def restrict(M: Matrix, coords: Sequence[int]) -> Matrix:
    return ra.submatrix(M, coords, coords)


def poisson_residual(M: Matrix, src: Matrix, dst: Matrix) -> Matrix:
    """``M src M^t - dst``; zero iff ``M`` carries ``src`` onto ``dst``."""
    return ra.sub(ra.matmul(ra.matmul(M, src), ra.transpose(M)), dst)


# ------------------------------------------------------------ sectors


@dataclass(frozen=True)
class SectorPoisson:
    """``E`` and ``B = E A0 E^t`` at vertex ``vertex`` in the chart ``coords``."""

    vertex: Vertex
    coords: tuple[int, ...]
    E: Matrix
    B: Matrix

    @property
    def full(self) -> Matrix:
        return embed(self.B, self.coords, len(self.E[0]))


def chart_matrix(g: GameSpec, v: Vertex) -> tuple[tuple[int, ...], Matrix]:
    """Facets at ``v`` and the ``(n-p) x n`` matrix with rows ``e_{v[group(k)]} - e_k``."""
    used = set(v)
    coords = tuple(i for i in range(g.n) if i not in used)
    rows = []
    for k in coords:
        r = [Fraction(0)] * g.n
        r[v[g.group_of[k]]] = Fraction(1)
        r[k] = Fraction(-1)
        rows.append(tuple(r))
    return coords, tuple(rows)


def sector_poisson(g: GameSpec, sd: SkewDecomposition, v: Vertex) -> SectorPoisson:
    coords, E = chart_matrix(g, v)
    B = ra.matmul(ra.matmul(E, sd.A0), ra.transpose(E))
    return SectorPoisson(tuple(v), coords, E, B)


def gradient_in_chart(hs: HamiltonianSpec, coords: Sequence[int]) -> Vector:
    c = hs.coefficients
    return tuple(c[i] for i in coords)


def check_skeleton_hamiltonian(sp: SectorPoisson, ct: CharacterTable, hs: HamiltonianSpec) -> bool:
    """True iff the character at the vertex equals ``B`` times the invariant's gradient."""
    char = ct.vector(sp.vertex)
    lhs = ra.matvec(sp.B, gradient_in_chart(hs, sp.coords))
    return lhs == tuple(char[i] for i in sp.coords)


def check_all_vertices(g: GameSpec, sd: SkewDecomposition, ct: CharacterTable, hs: HamiltonianSpec) -> dict:
    return {v: check_skeleton_hamiltonian(sector_poisson(g, sd, v), ct, hs) for v in ct.cells.vertices}


# -------------------------------------------------------------- Dirac


@dataclass(frozen=True)
class DiracStructure:
    """Dirac matrix at ``vertex`` with coordinate ``constrained`` frozen.

    ``kind`` is ``"in"`` for the entry section of an incoming edge and
    ``"out"`` for the exit section of an outgoing edge.
    """

    vertex: Vertex
    kind: str
    constrained: int
    coords: tuple[int, ...]
    matrix: Matrix

    @property
    def full(self) -> Matrix:
        n = max(self.coords + (self.constrained,)) + 1
        return embed(self.matrix, self.coords, n)

    def full_n(self, n: int) -> Matrix:
        return embed(self.matrix, self.coords, n)


class NotSecondClass(ValueError):
    """The constraint and the invariant Poisson-commute, so no Dirac bracket exists."""


def dirac_matrix(sp: SectorPoisson, ct: CharacterTable, kind: str, constrained: int) -> DiracStructure:
    """Closed-form Dirac matrix ``B - C`` for a frozen chart coordinate.

    ``C[l][f] = (c_l B[k][f] + B[l][k] c_f) / c_k`` with ``c`` the character
    at the vertex and ``k`` the frozen coordinate.
    """
    if constrained not in sp.coords:
        raise ValueError(f"facet {constrained + 1} is not a chart coordinate at {sp.vertex}")
    char = ct.vector(sp.vertex)
    c = [char[i] for i in sp.coords]
    k = sp.coords.index(constrained)
    if c[k] == 0:
        raise NotSecondClass(f"constraint on facet {constrained + 1} is not second-class (zero character)")
    B = sp.B
    m = len(c)
    M = tuple(
        tuple(B[l][f] - (c[l] * B[k][f] + B[l][k] * c[f]) / c[k] for f in range(m))
        for l in range(m)
    )
    return DiracStructure(sp.vertex, kind, constrained, sp.coords, M)


def dirac_matrix_generic(sp: SectorPoisson, hs: HamiltonianSpec, constrained: int) -> Matrix:
    """Dirac matrix from the general two-constraint formula.

    With constraint gradients ``G = [grad h, e_k]`` the bracket is
    ``B - (B G)(G^t B G)^{-1}(G^t B)``.
    """
    k = sp.coords.index(constrained)
    grad = gradient_in_chart(hs, sp.coords)
    ek = tuple(Fraction(int(i == k)) for i in range(len(sp.coords)))
    G = ra.transpose((grad, ek))
    BG = ra.matmul(sp.B, G)
    mid = ra.matmul(ra.transpose(G), BG)
    inv = ra.inverse(mid)
    GtB = ra.matmul(ra.transpose(G), sp.B)
    return ra.sub(sp.B, ra.matmul(ra.matmul(BG, inv), GtB))


def entry_structure(g, sd, ct, fg: FlowGraph, edge: int) -> DiracStructure:
    """Dirac structure on the entry section of flowing edge ``edge`` at its target."""
    v = fg.target(edge)
    return dirac_matrix(sector_poisson(g, sd, v), ct, "in", fg.edge(edge).opposite(v))


def exit_structure(g, sd, ct, fg: FlowGraph, edge: int) -> DiracStructure:
    """Dirac structure on the exit section of flowing edge ``edge`` at its source."""
    v = fg.source(edge)
    return dirac_matrix(sector_poisson(g, sd, v), ct, "out", fg.edge(edge).opposite(v))


# --------------------------------------------------------- transitions


@dataclass(frozen=True)
class TransitionMap:
    """Affine change of chart between adjacent vertices.

    ``linear`` acts on ``R^n`` facet coordinates; the translation adds
    ``shift`` to coordinate ``old`` (the strategy of ``source`` in the
    changing group). ``new`` is the strategy of ``target`` in that group.
    """

    source: Vertex
    target: Vertex
    group: int
    old: int
    new: int
    linear: Matrix

    def apply(self, y, shift=0) -> Vector:
        z = list(ra.matvec(self.linear, vec(y)))
        z[self.old] += Fraction(shift)
        return tuple(z)


def transition_map(g: GameSpec, cells: CellComplex, v: Vertex, w: Vertex) -> TransitionMap:
    """Chart change from vertex ``v`` to adjacent vertex ``w``.

    In the changing group, coordinate ``l`` becomes ``y_l - y_new`` and the
    old vertex strategy gets ``-y_new``; other groups are untouched.
    """
    e = cells.edge_between(v, w)
    a = e.group
    old, new = v[a], w[a]
    n = g.n
    P = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        if g.group_of[i] != a:
            P[i][i] = Fraction(1)
    for l in g.group_ranges[a]:
        if l == new:
            continue
        if l != old:
            P[l][l] = Fraction(1)
        P[l][new] = Fraction(-1)
    return TransitionMap(tuple(v), tuple(w), a, old, new, tuple(tuple(r) for r in P))


def full_chart_matrix(g: GameSpec, v: Vertex) -> Matrix:
    """``E_v`` embedded as ``n x n`` (rows at the facets of ``v``, zero elsewhere)."""
    coords, E = chart_matrix(g, v)
    out = [(Fraction(0),) * g.n for _ in range(g.n)]
    for k, row in zip(coords, E):
        out[k] = row
    return tuple(out)


def check_chart_transport(g: GameSpec, tm: TransitionMap) -> bool:
    """``dP E_v = E_w`` in the full embedding."""
    return ra.matmul(tm.linear, full_chart_matrix(g, tm.source)) == full_chart_matrix(g, tm.target)


# ------------------------------------------------------ path verification


@dataclass(frozen=True)
class PathReport:
    """Outcome of :func:`verify_path_poisson` for one branch."""

    branch: int
    vertex_checks: tuple[tuple[Vertex, bool], ...]
    transition_checks: tuple[tuple[int, bool], ...]
    composed: bool
    residual: Matrix | None

    @property
    def ok(self) -> bool:
        return self.composed and all(ok for _, ok in self.vertex_checks) and all(ok for _, ok in self.transition_checks)


def verify_vertex_poisson(g, sd, ct, fg: FlowGraph, edge_in: int, edge_out: int) -> tuple[bool, Matrix]:
    """Check that the passage through a vertex maps the entry bracket onto the exit bracket."""
    v = fg.target(edge_in)
    L = transition_matrix(ct, v, fg.edge(edge_out).opposite(v))
    src = entry_structure(g, sd, ct, fg, edge_in).full_n(g.n)
    dst = exit_structure(g, sd, ct, fg, edge_out).full_n(g.n)
    res = poisson_residual(L, src, dst)
    return ra.is_zero(res), res


def verify_path_poisson(g, sd, ct, pl: PiecewiseLinearMap, branch: int) -> PathReport:
    """Exact Poisson-map certificate for one branch.

    Checks each vertex passage, each chart change along the interior edges,
    and the composed identity ``M pi_start M^t = pi_end``.
    """
    fg = pl.flow
    b: Branch = pl.branches[branch]
    vchecks = []
    for a, c in zip(b.edges, b.edges[1:]):
        ok, _ = verify_vertex_poisson(g, sd, ct, fg, a, c)
        vchecks.append((fg.target(a), ok))
    tchecks = []
    for k in b.edges[1:-1]:
        tm = transition_map(g, pl.flow.cells, fg.source(k), fg.target(k))
        src = exit_structure(g, sd, ct, fg, k).full_n(g.n)
        dst = entry_structure(g, sd, ct, fg, k).full_n(g.n)
        ok = ra.is_zero(poisson_residual(tm.linear, src, dst)) and check_chart_transport(g, tm)
        tchecks.append((k, ok))
    start = entry_structure(g, sd, ct, fg, b.start).full_n(g.n)
    end = exit_structure(g, sd, ct, fg, b.end).full_n(g.n)
    res = poisson_residual(b.matrix, start, end)
    composed = ra.is_zero(res)
    return PathReport(branch, tuple(vchecks), tuple(tchecks), composed, None if composed else res)
