"""Piecewise-linear asymptotic dynamics along the edge network.

Near the vertices and edges of the polytope, logarithmically rescaled
coordinates turn the replicator flow into a piecewise-constant vector field
on a union of orthant sectors, one per vertex. Its first-return map to a
family of edge cross-sections is piecewise linear; this module builds it
exactly and iterates it.

Coordinates live in ``R^n`` with one coordinate per facet. A point near
vertex ``v`` only uses the facets containing ``v`` and keeps zeros elsewhere.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Sequence

from . import polygon as pg
from . import rational as ra
from .conservative import HamiltonianSpec
from .game import CellComplex, Edge, GameSpec, enumerate_cells, vertex_point
from .lp import strict_feasible_point
from .rational import Matrix, Vector, frac, vec

Vertex = tuple[int, ...]


# ------------------------------------------------------------ character


@dataclass(frozen=True)
class CharacterTable:
    """Skeleton character values ``table[k][i]`` for vertex ``k`` and facet ``i``.

    Entries are None where the vertex does not lie on the facet.
    """

    game: GameSpec
    cells: CellComplex
    table: tuple[tuple[Fraction | None, ...], ...]

    def at(self, v: Vertex, i: int) -> Fraction:
        val = self.table[self.cells.vertex_index[v]][i]
        if val is None:
            raise KeyError(f"vertex {v} does not lie on facet {i + 1}")
        return val

    def vector(self, v: Vertex) -> Vector:
        """Character at ``v`` as a length-n vector with zeros off its facets."""
        return tuple(Fraction(0) if x is None else x for x in self.table[self.cells.vertex_index[v]])

    def is_saddle(self, v: Vertex) -> bool:
        row = [x for x in self.table[self.cells.vertex_index[v]] if x is not None]
        return any(x > 0 for x in row) and any(x < 0 for x in row)


def skeleton_character(g: GameSpec, cells: CellComplex | None = None) -> CharacterTable:
    """Character of every (vertex, facet) pair with the vertex on the facet.

    For vertex ``(j_1..j_p)`` and strategy ``i`` in group ``a`` the value is
    ``sum_b (A[j_a][j_b] - A[i][j_b])``: the payoff deficit of ``i`` against
    the pure profile.
    """
    cells = cells or enumerate_cells(g)
    A = g.payoff
    rows = []
    for v in cells.vertices:
        used = set(v)
        row = []
        for i in range(g.n):
            if i in used:
                row.append(None)
            else:
                ja = v[g.group_of[i]]
                row.append(sum((A[ja][jb] - A[i][jb] for jb in v), Fraction(0)))
        rows.append(tuple(row))
    return CharacterTable(g, cells, tuple(rows))


def facet_function(g: GameSpec, i: int, x) -> Fraction:
    """Payoff of strategy ``i`` minus its group's average payoff at ``x``."""
    x = vec(x)
    A = g.payoff
    ax = [ra.dot(row, x) for row in A]
    r = g.group_ranges[g.group_of[i]]
    return ax[i] - sum((x[k] * ax[k] for k in r), Fraction(0))


def facet_nondegenerate(g: GameSpec, i: int) -> bool:
    """True iff the facet function of ``i`` is not identically zero on facet ``i``.

    The function is a quadratic polynomial. It is first evaluated at the
    vertices and barycentre of the facet; if all vanish, it is evaluated on
    the full second-order lattice of midpoints of vertex pairs, which is
    unisolvent for quadratics on a product of simplices, so vanishing there
    is an exact proof of vanishing identically.
    """
    if g.groups[g.group_of[i]] == 1:
        return True  # facet is empty
    ranges = [tuple(j for j in r if j != i) for r in g.group_ranges]
    verts = [tuple(v) for v in itertools.product(*ranges)]
    pts = [vertex_point(g, v) for v in verts]
    bary = [Fraction(0)] * g.n
    for r in ranges:
        for j in r:
            bary[j] = Fraction(1, len(r))
    if any(facet_function(g, i, p) != 0 for p in pts + [tuple(bary)]):
        return True
    for a, b in itertools.combinations(pts, 2):
        mid = tuple((s + t) / 2 for s, t in zip(a, b))
        if facet_function(g, i, mid) != 0:
            return True
    return False


# ----------------------------------------------------------- flow graph


@dataclass(frozen=True)
class EdgeClass:
    """Classification of one edge; ``source``/``target`` set for flowing edges."""

    edge: Edge
    kind: str
    source: Vertex | None = None
    target: Vertex | None = None
    corner_values: tuple[Fraction, Fraction] = (Fraction(0), Fraction(0))


@dataclass(frozen=True)
class FlowGraph:
    """Edge classification and the digraph of flowing edges."""

    table: CharacterTable
    classes: tuple[EdgeClass, ...]
    saddle: tuple[bool, ...]
    degenerate_facets: tuple[int, ...]

    @property
    def cells(self) -> CellComplex:
        return self.table.cells

    @cached_property
    def flowing(self) -> tuple[int, ...]:
        return tuple(c.edge.index for c in self.classes if c.kind == "flowing")

    @cached_property
    def neutral(self) -> tuple[int, ...]:
        return tuple(c.edge.index for c in self.classes if c.kind == "neutral")

    @cached_property
    def singular(self) -> tuple[int, ...]:
        return tuple(c.edge.index for c in self.classes if c.kind == "singular")

    @property
    def regular(self) -> bool:
        return not self.singular and not self.degenerate_facets

    @cached_property
    def out_edges(self) -> dict:
        out: dict = {v: [] for v in self.cells.vertices}
        for k in self.flowing:
            out[self.classes[k].source].append(k)
        return {v: tuple(ks) for v, ks in out.items()}

    @cached_property
    def in_edges(self) -> dict:
        inn: dict = {v: [] for v in self.cells.vertices}
        for k in self.flowing:
            inn[self.classes[k].target].append(k)
        return {v: tuple(ks) for v, ks in inn.items()}

    def source(self, k: int) -> Vertex:
        return self.classes[k].source

    def target(self, k: int) -> Vertex:
        return self.classes[k].target

    def edge(self, k: int) -> Edge:
        return self.cells.edges[k]


def classify_edges(ct: CharacterTable) -> FlowGraph:
    """Label each edge flowing, neutral or singular from its two corner values.

    An edge is flowing from ``v`` to ``w`` when the character at ``v`` on the
    facet opposing the edge is negative and the one at ``w`` is positive.
    """
    classes = []
    for e in ct.cells.edges:
        v, w = e.ends
        cv, cw = ct.at(v, e.opposite(v)), ct.at(w, e.opposite(w))
        if cv < 0 and cw > 0:
            classes.append(EdgeClass(e, "flowing", v, w, (cv, cw)))
        elif cw < 0 and cv > 0:
            classes.append(EdgeClass(e, "flowing", w, v, (cw, cv)))
        elif cv == 0 and cw == 0:
            classes.append(EdgeClass(e, "neutral", corner_values=(cv, cw)))
        else:
            classes.append(EdgeClass(e, "singular", corner_values=(cv, cw)))
    saddle = tuple(ct.is_saddle(v) for v in ct.cells.vertices)
    degenerate = tuple(i for i in range(ct.game.n) if not facet_nondegenerate(ct.game, i))
    return FlowGraph(ct, tuple(classes), saddle, degenerate)


# ----------------------------------------------------------------- cones


@dataclass(frozen=True)
class ConeSector:
    """Open polyhedral cone ``{y : y_i = 0 off support, r @ y > 0 for r in rows}``."""

    n: int
    support: tuple[int, ...]
    rows: tuple[Vector, ...]

    def values(self, y: Sequence[Fraction]) -> tuple[Fraction, ...]:
        return tuple(ra.dot(r, y) for r in self.rows)

    def zero_pattern_ok(self, y) -> bool:
        sup = set(self.support)
        return all(y[i] == 0 for i in range(self.n) if i not in sup)

    def contains(self, y) -> bool:
        return self.zero_pattern_ok(y) and all(v > 0 for v in self.values(y))

    def closure_contains(self, y) -> bool:
        return self.zero_pattern_ok(y) and all(v >= 0 for v in self.values(y))

    def margin(self, y) -> Fraction:
        """Smallest inequality value at ``y`` (positive iff strictly inside, given the zero pattern)."""
        return min(self.values(y))

    @cached_property
    def witness(self) -> Vector | None:
        """A strictly interior point, found by exact LP, or None if the cone is empty."""
        rows = [[r[i] for i in self.support] for r in self.rows]
        pt = strict_feasible_point(rows)
        if pt is None:
            return None
        y = [Fraction(0)] * self.n
        for i, val in zip(self.support, pt):
            y[i] = val
        return tuple(y)

    def is_empty(self) -> bool:
        return self.witness is None

    @cached_property
    def dimension(self) -> int:
        """Dimension of the cone (its span equals the support when nonempty)."""
        return 0 if self.is_empty() else len(self.support)


def edge_support(fg: FlowGraph, k: int) -> tuple[int, ...]:
    """Facets containing both ends of flowing edge ``k``: the coordinates of its section."""
    e = fg.edge(k)
    used = set(e.label)
    return tuple(i for i in range(fg.table.game.n) if i not in used)


def edge_section(fg: FlowGraph, k: int) -> ConeSector:
    """Open cross-section cone of flowing edge ``k``: positive on its support."""
    n = fg.table.game.n
    sup = edge_support(fg, k)
    rows = tuple(tuple(Fraction(int(j == i)) for j in range(n)) for i in sup)
    return ConeSector(n, sup, rows)


@dataclass(frozen=True)
class VertexTransition:
    """Linear passage through a vertex from one section to the next."""

    vertex: Vertex
    edge_in: int
    edge_out: int
    exit_facet: int
    sector: ConeSector
    matrix: Matrix

    @property
    def restricted(self) -> Matrix:
        """The passage matrix with columns outside the incoming section zeroed."""
        sup = set(self.sector.support)
        return tuple(tuple(x if j in sup else Fraction(0) for j, x in enumerate(r)) for r in self.matrix)


def transition_matrix(ct: CharacterTable, v: Vertex, exit_facet: int) -> Matrix:
    """Matrix of the vertex passage at ``v`` leaving through ``exit_facet``.

    ``y -> y - (y[exit]/c[exit]) * c`` on the facets at ``v`` (``c`` the
    character at ``v``), identity on the other coordinates.
    """
    cv = ct.vector(v)
    cs = cv[exit_facet]
    if cs == 0:
        raise ValueError(f"degenerate corner at vertex {v} facet {exit_facet + 1}")
    n = len(cv)
    fv = set(ct.cells.facets_at(v))
    L = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for i in fv:
        L[i][exit_facet] -= cv[i] / cs
    return tuple(tuple(r) for r in L)


def vertex_branch(fg: FlowGraph, edge_in: int, edge_out: int) -> VertexTransition:
    """Sector of the incoming section that exits through ``edge_out``, and its linear map."""
    ct = fg.table
    v = fg.target(edge_in)
    if v is None or fg.source(edge_out) != v:
        raise ValueError(f"edges {edge_in + 1} and {edge_out + 1} do not meet head to tail")
    exit_facet = fg.edge(edge_out).opposite(v)
    L = transition_matrix(ct, v, exit_facet)
    sec_in = edge_section(fg, edge_in)
    out_sup = edge_support(fg, edge_out)
    rows = sec_in.rows + tuple(L[i] for i in out_sup)
    return VertexTransition(v, edge_in, edge_out, exit_facet, ConeSector(sec_in.n, sec_in.support, rows), L)


# ------------------------------------------------------- structural sets


@dataclass(frozen=True)
class StructuralCertificate:
    """``ok`` with a topological vertex order, or a witness cycle of edge indices."""

    edges: tuple[int, ...]
    ok: bool
    order: tuple[Vertex, ...] = ()
    cycle: tuple[int, ...] = ()


def _find_cycle(fg: FlowGraph, removed: set[int]) -> tuple[int, ...]:
    """Edge indices of some directed cycle avoiding ``removed``, or ()."""
    color: dict = {}
    stack_edges: list[int] = []

    def dfs(v):
        color[v] = 1
        for k in fg.out_edges[v]:
            if k in removed:
                continue
            w = fg.target(k)
            stack_edges.append(k)
            if color.get(w) == 1:
                cyc = []
                for e in reversed(stack_edges):
                    cyc.append(e)
                    if fg.source(e) == w:
                        break
                return tuple(reversed(cyc))
            if w not in color:
                found = dfs(w)
                if found:
                    return found
            stack_edges.pop()
        color[v] = 2
        return ()

    for v in fg.cells.vertices:
        if v not in color:
            found = dfs(v)
            if found:
                return found
    return ()


def verify_structural_set(fg: FlowGraph, S: Iterable[int]) -> StructuralCertificate:
    S = tuple(sorted(set(S)))
    bad = [k for k in S if k not in fg.flowing]
    if bad:
        raise ValueError(f"edges {[k + 1 for k in bad]} are not flowing edges")
    ts = TopologicalSorter()
    for v in fg.cells.vertices:
        ts.add(v)
    for k in fg.flowing:
        if k not in S:
            ts.add(fg.target(k), fg.source(k))
    try:
        order = tuple(ts.static_order())
    except CycleError:
        return StructuralCertificate(S, False, cycle=_find_cycle(fg, set(S)))
    return StructuralCertificate(S, True, order=order)


def find_structural_set(fg: FlowGraph, exhaustive_up_to: int = 3) -> StructuralCertificate:
    """Smallest set of flowing edges meeting every cycle.

    Exhaustive (lexicographically first) up to ``exhaustive_up_to`` edges;
    beyond that a greedy cycle-breaking heuristic followed by pruning.
    """
    for size in range(exhaustive_up_to + 1):
        for S in itertools.combinations(fg.flowing, size):
            cert = verify_structural_set(fg, S)
            if cert.ok:
                return cert
    chosen: set[int] = set()
    while True:
        cyc = _find_cycle(fg, chosen)
        if not cyc:
            break
        # break the cycle at the edge whose ends carry the most flowing edges
        def weight(k):
            return len(fg.out_edges[fg.source(k)]) * len(fg.in_edges[fg.target(k)])

        chosen.add(max(cyc, key=lambda k: (weight(k), -k)))
    for k in sorted(chosen):
        if verify_structural_set(fg, chosen - {k}).ok:
            chosen.discard(k)
    return verify_structural_set(fg, chosen)


def structural_set(fg: FlowGraph, mode: str = "find", S: Iterable[int] | None = None) -> StructuralCertificate:
    if mode == "verify":
        return verify_structural_set(fg, S or ())
    if mode == "find":
        return find_structural_set(fg)
    raise ValueError(f"unknown mode {mode!r}")


# --------------------------------------------------------------- branches


@dataclass(frozen=True)
class Branch:
    """A path of flowing edges from one structural edge to the next.

    ``edges`` lists the edge indices in flow order, ``sector`` is the cone of
    starting points in the first section that follow exactly this path, and
    ``matrix`` maps them to the last section.
    """

    index: int
    edges: tuple[int, ...]
    vertices: tuple[Vertex, ...]
    sector: ConeSector
    matrix: Matrix

    @property
    def start(self) -> int:
        return self.edges[0]

    @property
    def end(self) -> int:
        return self.edges[-1]


@dataclass(frozen=True)
class PiecewiseLinearMap:
    """First-return map to the structural sections, one linear branch per path."""

    flow: FlowGraph
    structural: tuple[int, ...]
    branches: tuple[Branch, ...]

    @property
    def n(self) -> int:
        return self.flow.table.game.n

    def vertex_numbers(self, b: Branch) -> tuple[int, ...]:
        idx = self.flow.cells.vertex_index
        return tuple(idx[v] + 1 for v in b.vertices)

    def branches_from(self, k: int) -> tuple[Branch, ...]:
        return tuple(b for b in self.branches if b.start == k)

    def section_of(self, y) -> int | None:
        """Structural edge whose open section contains ``y``, if any."""
        for k in self.structural:
            if edge_section(self.flow, k).contains(y):
                return k
        return None

    def closed_section_of(self, y) -> int | None:
        for k in self.structural:
            if edge_section(self.flow, k).closure_contains(y) and any(y):
                return k
        return None


def _paths(fg: FlowGraph, S: set[int], start: int) -> list[tuple[int, ...]]:
    out = []

    def dfs(path):
        for k in fg.out_edges[fg.target(path[-1])]:
            if k in S:
                out.append(path + (k,))
            elif k not in path:
                dfs(path + (k,))

    dfs((start,))
    return out


def enumerate_branches(fg: FlowGraph, S: Iterable[int]) -> PiecewiseLinearMap:
    """All paths between structural edges whose starting cone is nonempty.

    Paths are generated depth first, following outgoing edges in index order.
    Emptiness of each cone is decided by exact linear programming.
    """
    S = tuple(sorted(set(S)))
    cert = verify_structural_set(fg, S)
    if not cert.ok:
        raise ValueError(f"not a structural set: cycle {[k + 1 for k in cert.cycle]} avoids it")
    n = fg.table.game.n
    branches = []
    for s in S:
        for path in _paths(fg, set(S), s):
            sec = edge_section(fg, path[0])
            rows = list(sec.rows)
            M = ra.identity(n)
            for a, b in zip(path, path[1:]):
                vt = vertex_branch(fg, a, b)
                M = ra.matmul(vt.matrix, M)
                rows.extend(M[i] for i in edge_support(fg, b))
            cone = ConeSector(n, sec.support, tuple(rows))
            if cone.is_empty():
                continue
            verts = tuple(fg.source(k) for k in path) + (fg.target(path[-1]),)
            branches.append(Branch(len(branches), path, verts, cone, M))
    return PiecewiseLinearMap(fg, S, tuple(branches))


def branch_matrix(pl: PiecewiseLinearMap, word: Sequence[int]) -> Matrix:
    """Product of branch matrices along ``word`` (branch indices), in flow order."""
    M = ra.identity(pl.n)
    prev = None
    for k in word:
        b = pl.branches[k]
        if prev is not None and prev.end != b.start:
            raise ValueError(f"branch {prev.index + 1} does not chain into branch {b.index + 1}")
        M = ra.matmul(b.matrix, M)
        prev = b
    return M


# ------------------------------------------------------------ invariants


def level_functionals(hs: HamiltonianSpec, casimirs: Sequence[Sequence]) -> tuple[Vector, ...]:
    """Rows of the linear invariants: Hamiltonian coefficients, then Casimirs."""
    return (hs.coefficients,) + tuple(vec(w) for w in casimirs)


def invariant_values(hs: HamiltonianSpec, casimirs: Sequence[Sequence], y) -> tuple[Fraction, ...]:
    """Values of the linear invariants at ``y`` (exact for rational ``y``)."""
    y = vec(y)
    return tuple(ra.dot(r, y) for r in level_functionals(hs, casimirs))


def rebase_hamiltonian(hs: HamiltonianSpec, kernel: Sequence[Sequence], y, target) -> HamiltonianSpec:
    """Shift ``q`` within its affine set of formal equilibria to hit a level.

    Any point ``q + t w`` with ``w`` in the equilibrium kernel defines a
    Hamiltonian for the same field; this picks the first kernel direction
    along which the invariant at ``y`` can be moved to ``target``.
    """
    target = frac(target)
    current = invariant_values(hs, (), y)[0]
    if current == target:
        return hs
    for w in kernel:
        probe = hs.shifted(w, 1)
        slope = invariant_values(probe, (), y)[0] - current
        if slope != 0:
            return hs.shifted(w, (target - current) / slope)
    raise ValueError("level cannot be reached by moving the formal equilibrium")


# --------------------------------------------------------------- iteration


class _IntBranch:
    """Branch data scaled to integers for fast exact iteration."""

    __slots__ = ("index", "start", "end", "cols", "rows", "mat", "den", "out_rows")

    def __init__(self, b: Branch, n: int):
        self.index, self.start, self.end = b.index, b.start, b.end
        self.cols = b.sector.support
        self.rows = []
        for r in b.sector.rows:
            lcm = math.lcm(*(r[i].denominator for i in self.cols))
            self.rows.append(tuple(int(r[i] * lcm) for i in self.cols))
        den = math.lcm(*(x.denominator for row in b.matrix for x in row))
        self.den = den
        self.out_rows = tuple(i for i in range(n) if any(b.matrix[i][j] for j in self.cols))
        self.mat = tuple((i, tuple(int(b.matrix[i][j] * den) for j in self.cols)) for i in self.out_rows)


def _as_int(y: Sequence[Fraction]) -> tuple[list[int], int]:
    den = math.lcm(*(x.denominator for x in y))
    return [int(x * den) for x in y], den


@dataclass
class OrbitRecord:
    """Result of :func:`iterate_skeleton`.

    ``branches`` holds the branch index applied at each step; ``invariants``
    the exact invariant values before each step and after the last one.
    ``points`` is filled only when requested. ``ties`` lists steps where the
    closure policy had to choose among several candidate branches.
    """

    start: Vector
    branches: list[int]
    status: str
    final: Vector
    invariants: list[tuple[Fraction, ...]] = field(default_factory=list)
    points: list[Vector] | None = None
    ties: list[int] = field(default_factory=list)

    @property
    def steps(self) -> int:
        return len(self.branches)


def iterate_skeleton(
    pl: PiecewiseLinearMap,
    y0,
    steps: int,
    invariants: Sequence[Sequence] = (),
    keep_points: bool = False,
    boundary: str = "halt",
) -> OrbitRecord:
    """Iterate the first-return map exactly from ``y0``.

    Each step applies the unique branch whose open cone contains the point.
    With ``boundary="halt"`` a point on a cone boundary stops the orbit with
    status ``"boundary_hit"``; with ``boundary="closure"`` the lowest-index
    branch whose closed cone contains the point is used and the step is
    recorded in ``ties``.
    """
    y0 = vec(y0)
    if boundary not in ("halt", "closure"):
        raise ValueError("boundary must be 'halt' or 'closure'")
    sec = pl.section_of(y0) if boundary == "halt" else pl.closed_section_of(y0)
    if sec is None and pl.closed_section_of(y0) is not None:
        sec = pl.closed_section_of(y0)
    if sec is None:
        raise ValueError("start point is not in any structural section")
    n = pl.n
    ib = [_IntBranch(b, n) for b in pl.branches]
    by_start: dict[int, list[_IntBranch]] = {}
    for b in ib:
        by_start.setdefault(b.start, []).append(b)
    inv_int = [_as_int(vec(r)) for r in invariants]

    num, den = _as_int(y0)
    current = sec
    rec = OrbitRecord(y0, [], "complete", y0, points=[y0] if keep_points else None)

    def inv_values(num, den):
        return tuple(Fraction(sum(a * b for a, b in zip(rn, num)), rd * den) for rn, rd in inv_int)

    if invariants:
        rec.invariants.append(inv_values(num, den))
    for step in range(steps):
        chosen = None
        candidates = by_start.get(current, [])
        for b in candidates:
            vals = [sum(r[k] * num[c] for k, c in enumerate(b.cols)) for r in b.rows]
            if all(v > 0 for v in vals):
                chosen = b
                break
        if chosen is None:
            if boundary == "halt":
                rec.status = "boundary_hit"
                break
            closed = [
                b for b in candidates
                if all(sum(r[k] * num[c] for k, c in enumerate(b.cols)) >= 0 for r in b.rows)
            ]
            if not closed:
                rec.status = "left_domain"
                break
            chosen = closed[0]
            rec.ties.append(step)
        new = [0] * n
        for i, mrow in chosen.mat:
            new[i] = sum(m * num[c] for m, c in zip(mrow, chosen.cols))
        den = den * chosen.den
        g = math.gcd(den, *new)
        if g > 1:
            new = [x // g for x in new]
            den //= g
        num = new
        current = chosen.end
        rec.branches.append(chosen.index)
        if invariants:
            rec.invariants.append(inv_values(num, den))
        if keep_points:
            rec.points.append(tuple(Fraction(x, den) for x in num))
    rec.final = tuple(Fraction(x, den) for x in num)
    return rec


# ------------------------------------------------------ periodic points


@dataclass(frozen=True)
class PeriodicCertificate:
    """Exact evidence that ``point`` is periodic along ``word``.

    ``strict`` is True when every orbit point lies in the open cone of the
    branch applied to it, so the orbit is an honest orbit of the map; when
    False the orbit only runs through cone closures.
    """

    point: Vector
    word: tuple[int, ...]
    orbit: tuple[Vector, ...]
    fixed: bool
    in_closures: bool
    strict: bool
    minimal_period: int

    @property
    def ok(self) -> bool:
        return self.fixed and self.in_closures and self.minimal_period == len(self.word)


def periodic_certificate(pl: PiecewiseLinearMap, y, word: Sequence[int]) -> PeriodicCertificate:
    y = vec(y)
    orbit = [y]
    closures = strict = True
    z = y
    for k in word:
        b = pl.branches[k]
        closures &= b.sector.closure_contains(z)
        strict &= b.sector.contains(z)
        z = ra.matvec(b.matrix, z)
        orbit.append(z)
    fixed = z == y
    pts = orbit[:-1]
    period = len(word)
    for d in range(1, len(word) + 1):
        if len(word) % d == 0 and all(pts[i] == pts[i % d] for i in range(len(pts))):
            period = d
            break
    return PeriodicCertificate(y, tuple(word), tuple(pts), fixed, closures, strict, period)


def closed_itineraries(pl: PiecewiseLinearMap, y, length: int) -> list[tuple[tuple[int, ...], Vector]]:
    """Every branch word of ``length`` whose closed cones successively contain the orbit of ``y``."""
    y = vec(y)
    out = []

    def rec(z, word):
        if len(word) == length:
            out.append((tuple(word), z))
            return
        start = pl.branches[word[-1]].end if word else pl.closed_section_of(z)
        for b in pl.branches_from(start):
            if b.sector.closure_contains(z):
                rec(ra.matvec(b.matrix, z), word + [b.index])

    rec(y, [])
    return out


def find_periodic_word(pl: PiecewiseLinearMap, y, max_period: int = 8) -> PeriodicCertificate | None:
    """Shortest closed-cone itinerary returning ``y`` to itself, if any."""
    for k in range(1, max_period + 1):
        for word, z in closed_itineraries(pl, y, k):
            if z == vec(y):
                cert = periodic_certificate(pl, y, word)
                if cert.ok:
                    return cert
    return None


# ---------------------------------------------------------- level sections


@dataclass(frozen=True)
class LevelPlane:
    """Affine parametrisation ``y = base + basis @ t`` of an invariant level in a section."""

    base: Vector
    basis: tuple[Vector, ...]

    def point(self, t: Sequence[Fraction]) -> Vector:
        return tuple(b + sum((ti * v[i] for ti, v in zip(t, self.basis)), Fraction(0)) for i, b in enumerate(self.base))

    def halfplane(self, row: Sequence[Fraction], M: Matrix | None = None) -> pg.HalfPlane:
        """``row @ M @ y(t) >= 0`` as a half-plane in ``t`` (2-D planes only)."""
        r = ra.vecmat(row, M) if M is not None else tuple(row)
        return (ra.dot(r, self.basis[0]), ra.dot(r, self.basis[1]), ra.dot(r, self.base))


def level_plane(pl: PiecewiseLinearMap, edge: int, functionals: Sequence[Sequence], level: Sequence) -> LevelPlane | None:
    """Level set of ``functionals`` at ``level`` inside the span of edge ``edge``'s section."""
    sup = edge_support(pl.flow, edge)
    rows = tuple(tuple(frac(r[i]) for i in sup) for r in functionals)
    rhs = vec(level)
    sol = ra.solve(rows, rhs)
    if sol is None:
        return None
    null = ra.nullspace(rows, len(sup))

    def lift(v):
        y = [Fraction(0)] * pl.n
        for i, val in zip(sup, v):
            y[i] = val
        return tuple(y)

    return LevelPlane(lift(sol), tuple(lift(v) for v in null))


def _plane_2d(pl, edge, functionals, level) -> LevelPlane | None:
    plane = level_plane(pl, edge, functionals, level)
    if plane is not None and len(plane.basis) != 2:
        raise ValueError(f"level set has dimension {len(plane.basis)}, not 2")
    return plane


@dataclass(frozen=True)
class LevelPolygon:
    """Vertices of a level polygon, both in plane parameters and in ``R^n``."""

    params: tuple[pg.Point, ...]
    points: tuple[Vector, ...]
    area: Fraction


def level_polygon(pl: PiecewiseLinearMap, branch: int | None, functionals, level) -> LevelPolygon:
    """Closed cone of ``branch`` (or the whole section when None) cut by a level set.

    Vertices are enumerated exactly and returned counter-clockwise; the
    polygon is empty when the level misses the cone.
    """
    start = pl.structural[0] if branch is None else pl.branches[branch].start
    plane = _plane_2d(pl, start, functionals, level)
    if plane is None:
        return LevelPolygon((), (), Fraction(0))
    cone = edge_section(pl.flow, start) if branch is None else pl.branches[branch].sector
    hps = [plane.halfplane(r) for r in cone.rows]
    hps = [h for h in hps if h[0] != 0 or h[1] != 0 or h[2] < 0]
    verts = pg.vertices_of(hps)
    if any(h[0] == 0 and h[1] == 0 and h[2] < 0 for h in hps):
        verts = []
    pts = tuple(plane.point(t) for t in verts)
    return LevelPolygon(tuple(verts), pts, pg.area(verts) if len(verts) > 2 else Fraction(0))


def random_level_point(pl: PiecewiseLinearMap, functionals, level, seed: int = 0, branch: int | None = None) -> Vector:
    """Seeded rational point strictly inside a level polygon.

    A random convex combination with positive weights of the polygon's
    vertices, so it lies in the relative interior.
    """
    poly = level_polygon(pl, branch, functionals, level)
    if len(poly.points) < 3:
        raise ValueError("level polygon is empty or degenerate")
    rng = random.Random(seed)
    weights = [Fraction(rng.randint(1, 10**6)) for _ in poly.points]
    tot = sum(weights)
    return tuple(sum((w * p[i] for w, p in zip(weights, poly.points)), Fraction(0)) / tot for i in range(pl.n))


def find_periodic_point(
    pl: PiecewiseLinearMap,
    functionals,
    level,
    period: int,
    edge: int | None = None,
) -> PeriodicCertificate | None:
    """Search branch words of length ``period`` for a periodic point on a level.

    Words are explored depth first; each prefix keeps the exact polygon of
    level points that follow it, and empty polygons are pruned. For a full
    word the fixed-point equation is solved on the level plane and the
    solution is accepted when its orbit follows the word through open cones
    and has minimal period ``period``.
    """
    edge = pl.structural[0] if edge is None else edge
    plane = _plane_2d(pl, edge, functionals, level)
    if plane is None:
        return None
    base_hps = [plane.halfplane(r) for r in edge_section(pl.flow, edge).rows]
    poly = pg.vertices_of(base_hps)
    if len(poly) < 3:
        return None
    basis = plane.basis

    def solve_fixed(M):
        # M (base + B t) = base + B t  ->  (M B - B) t = base - M base
        MB = [ra.matvec(M, b) for b in basis]
        Mb = ra.matvec(M, plane.base)
        A = tuple((MB[0][i] - basis[0][i], MB[1][i] - basis[1][i]) for i in range(pl.n))
        rhs = tuple(plane.base[i] - Mb[i] for i in range(pl.n))
        if ra.rank(A) < 2:
            return None
        return ra.solve(A, rhs)

    def dfs(poly, M, word, end):
        if len(word) == period:
            if end != edge:
                return None
            t = solve_fixed(M)
            if t is None:
                return None
            cert = periodic_certificate(pl, plane.point(t), word)
            return cert if cert.ok and cert.strict else None
        for b in pl.branches_from(end):
            P = poly
            for r in b.sector.rows:
                P = pg.clip(P, plane.halfplane(r, M))
                if len(P) < 3:
                    break
            if len(P) < 3 or pg.area(P) == 0:
                continue
            found = dfs(P, ra.matmul(b.matrix, M), word + (b.index,), b.end)
            if found:
                return found
        return None

    return dfs(poly, ra.identity(pl.n), (), edge)


# ------------------------------------------------------------ spectra


@dataclass(frozen=True)
class Spectrum:
    """Exact characteristic polynomial of a branch product with its roots.

    ``multiplicities`` maps the rational roots 0 and 1 to their algebraic
    multiplicities; ``cofactor`` is what is left after dividing them out.
    ``eigenvalues`` lists the exact roots followed by numerical roots of the
    cofactor, so repeated rational roots do not lose precision.
    """

    charpoly: Vector
    multiplicities: dict
    geometric: dict
    cofactor: Vector
    eigenvalues: tuple[complex, ...]


def spectrum(M: Matrix) -> Spectrum:
    import numpy as np

    p = ra.charpoly(M)
    mult = {}
    rest = p
    for r in (0, 1):
        m, rest = ra.root_multiplicity(rest, r)
        mult[r] = m
    roots = np.roots([float(c) for c in reversed(rest)]) if len(rest) > 1 else []
    ev = tuple(complex(r) for r in (0, 1) for _ in range(mult[r]))
    ev += tuple(sorted((complex(z) for z in roots), key=lambda z: (abs(z), z.real)))
    n = len(M)
    geo = {r: n - ra.rank(ra.sub(M, ra.scale(r, ra.identity(n)))) for r in (0, 1)}
    return Spectrum(p, mult, geo, rest, ev)
