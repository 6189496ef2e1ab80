"""Game specifications and the combinatorics of products of simplices.

A game with group sizes ``(n_1, ..., n_p)`` lives on the product of simplices
``Delta^{n_1-1} x ... x Delta^{n_p-1}`` inside ``R^n``. Strategies are numbered
consecutively group by group. Internally everything is 0-based; files and
reports use 1-based strategy, vertex and edge numbers.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .rational import Matrix, Vector, fmt, frac, mat, vec


class GameError(ValueError):
    """Raised for malformed or inconsistent game input."""


@dataclass(frozen=True)
class GameSpec:
    """Group sizes plus an exact rational payoff matrix.

    Parameters
    ----------
    groups : tuple of int
        Number of strategies per group.
    payoff : Matrix
        Square payoff matrix of order ``sum(groups)``.
    equilibrium : Vector, optional
        A formal equilibrium supplied with the input; it is checked by
        :mod:`polyrep.conservative` and never trusted blindly.
    name : str
        Free-form label used in reports.
    """

    groups: tuple[int, ...]
    payoff: Matrix
    equilibrium: Vector | None = None
    name: str = ""

    def __post_init__(self):
        if not self.groups:
            raise GameError("at least one group is required")
        if any((not isinstance(k, int)) or k < 1 for k in self.groups):
            raise GameError(f"group sizes must be positive integers, got {self.groups}")
        n = sum(self.groups)
        if len(self.payoff) != n or any(len(r) != n for r in self.payoff):
            raise GameError(
                f"dimension mismatch: groups sum to {n} but payoff is "
                f"{len(self.payoff)}x{len(self.payoff[0]) if self.payoff else 0}"
            )
        if self.equilibrium is not None and len(self.equilibrium) != n:
            raise GameError("equilibrium length differs from the number of strategies")

    @property
    def n(self) -> int:
        return sum(self.groups)

    @property
    def p(self) -> int:
        return len(self.groups)

    @cached_property
    def group_ranges(self) -> tuple[range, ...]:
        out, start = [], 0
        for k in self.groups:
            out.append(range(start, start + k))
            start += k
        return tuple(out)

    @cached_property
    def group_of(self) -> tuple[int, ...]:
        return tuple(a for a, r in enumerate(self.group_ranges) for _ in r)

    def block(self, a: int, b: int) -> Matrix:
        """The payoff block between groups ``a`` and ``b`` (0-based)."""
        ra, rb = self.group_ranges[a], self.group_ranges[b]
        return tuple(tuple(self.payoff[i][j] for j in rb) for i in ra)

    @cached_property
    def payoff_float(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self.payoff])

    def with_payoff(self, payoff) -> "GameSpec":
        return GameSpec(self.groups, mat(payoff), None, self.name)


def make_game(groups: Sequence[int], payoff, equilibrium=None, name: str = "") -> GameSpec:
    """Build a :class:`GameSpec`, converting all entries exactly."""
    try:
        rows = mat(payoff)
        eq = vec(equilibrium) if equilibrium is not None else None
    except ValueError as exc:
        raise GameError(f"non-rational entry: {exc}") from None
    return GameSpec(tuple(int(k) for k in groups), rows, eq, name)


def parse_game(text: str) -> GameSpec:
    """Parse a JSON game document.

    The document holds ``groups`` (list of ints) and ``payoff`` (list of rows
    whose entries are integers, ``"p/q"`` strings or decimals); ``equilibrium``
    and ``name`` are optional.

    Examples
    --------
    >>> parse_game('{"groups": [2], "payoff": [[0, "1/2"], ["0.25", 0]]}').payoff[1][0]
    Fraction(1, 4)
    """
    try:
        doc = json.loads(text, parse_float=str)
    except json.JSONDecodeError as exc:
        raise GameError(f"invalid game document: {exc}") from None
    if not isinstance(doc, dict) or "groups" not in doc or "payoff" not in doc:
        raise GameError("game document needs 'groups' and 'payoff' keys")
    groups = doc["groups"]
    if not isinstance(groups, list) or not groups:
        raise GameError("'groups' must be a non-empty list")
    for k in groups:
        if not isinstance(k, int) or isinstance(k, bool) or k < 1:
            raise GameError(f"empty or invalid group size: {k!r}")
    payoff = doc["payoff"]
    if not isinstance(payoff, list) or not all(isinstance(r, list) for r in payoff):
        raise GameError("'payoff' must be a list of rows")
    return make_game(groups, payoff, doc.get("equilibrium"), str(doc.get("name", "")))


def load_game(path: str | Path) -> GameSpec:
    return parse_game(Path(path).read_text())


def serialize_game(g: GameSpec) -> str:
    """Canonical JSON text; ``parse_game(serialize_game(g)) == g``."""
    doc: dict = {}
    if g.name:
        doc["name"] = g.name
    doc["groups"] = list(g.groups)
    doc["payoff"] = [[fmt(x) for x in r] for r in g.payoff]
    if g.equilibrium is not None:
        doc["equilibrium"] = [fmt(x) for x in g.equilibrium]
    rows = ",\n    ".join(json.dumps(r) for r in doc["payoff"])
    head = {k: v for k, v in doc.items() if k != "payoff" and k != "equilibrium"}
    parts = [f"  {json.dumps(k)}: {json.dumps(v)}" for k, v in head.items()]
    parts.append(f'  "payoff": [\n    {rows}\n  ]')
    if "equilibrium" in doc:
        parts.append(f'  "equilibrium": {json.dumps(doc["equilibrium"])}')
    return "{\n" + ",\n".join(parts) + "\n}\n"


def fish_game() -> GameSpec:
    """The bundled two-group example with groups (5, 2)."""
    from importlib.resources import files

    return parse_game(files("polyrep").joinpath("data/fish.game").read_text())


# ---------------------------------------------------------------- cells


@dataclass(frozen=True)
class Edge:
    """An edge of the polytope.

    ``label`` is the sorted strategy set of size ``p + 1``; ``ends`` are the
    two vertex labels it joins, ``group`` the group whose strategy changes.
    """

    index: int
    label: tuple[int, ...]
    ends: tuple[tuple[int, ...], tuple[int, ...]]
    group: int

    def opposite(self, v: tuple[int, ...]) -> int:
        """Facet opposing this edge at end ``v``: the other end's strategy in the changing group."""
        a, b = self.ends
        if v == a:
            return b[self.group]
        if v == b:
            return a[self.group]
        raise ValueError(f"{v} is not an end of edge {self.index + 1}")

    def other(self, v: tuple[int, ...]) -> tuple[int, ...]:
        a, b = self.ends
        return b if v == a else a


@dataclass(frozen=True)
class CellComplex:
    """Vertices, facets and edges of the product of simplices.

    Vertices are tuples of strategy indices (one per group) in lexicographic
    order. Edges are ordered by their per-group strategy counts and then by
    their sorted label, which numbers them the way tables of such polytopes
    are usually laid out.
    """

    groups: tuple[int, ...]
    vertices: tuple[tuple[int, ...], ...]
    edges: tuple[Edge, ...]

    @property
    def n(self) -> int:
        return sum(self.groups)

    @property
    def facets(self) -> tuple[int, ...]:
        return tuple(range(self.n))

    @cached_property
    def vertex_index(self) -> dict:
        return {v: k for k, v in enumerate(self.vertices)}

    @cached_property
    def edge_by_label(self) -> dict:
        return {e.label: e for e in self.edges}

    def facets_at(self, v: tuple[int, ...]) -> tuple[int, ...]:
        """Facets containing ``v``: every strategy not used by ``v``."""
        used = set(v)
        return tuple(i for i in range(self.n) if i not in used)

    def edge_between(self, v, w) -> Edge:
        label = tuple(sorted(set(v) | set(w)))
        e = self.edge_by_label.get(label)
        if e is None or set(e.ends) != {tuple(v), tuple(w)}:
            raise ValueError(f"vertices {v} and {w} are not adjacent")
        return e

    def edges_at(self, v) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if v in e.ends)

    def corner(self, v, e: Edge) -> int:
        """The facet completing the corner ``(v, e, facet)``."""
        return e.opposite(v)


def enumerate_cells(g: GameSpec) -> CellComplex:
    """All vertices, facets and edges of the state polytope of ``g``."""
    ranges = g.group_ranges
    vertices = tuple(itertools.product(*ranges))
    edges = []
    for a, ra in enumerate(ranges):
        others = [r for b, r in enumerate(ranges) if b != a]
        for pair in itertools.combinations(ra, 2):
            for rest in itertools.product(*others):
                v = list(rest)
                v.insert(a, pair[0])
                w = list(rest)
                w.insert(a, pair[1])
                edges.append((tuple(v), tuple(w), a))

    def key(item):
        v, w, _ = item
        label = sorted(set(v) | set(w))
        counts = tuple(sum(1 for j in label if j in r) for r in ranges)
        return counts, label

    edges.sort(key=key)
    return CellComplex(
        tuple(g.groups),
        vertices,
        tuple(
            Edge(k, tuple(sorted(set(v) | set(w))), (v, w), a)
            for k, (v, w, a) in enumerate(edges)
        ),
    )


def vertex_point(g: GameSpec, v: tuple[int, ...]) -> Vector:
    x = [Fraction(0)] * g.n
    for j in v:
        x[j] = Fraction(1)
    return tuple(x)


def barycenter(g: GameSpec) -> Vector:
    return tuple(Fraction(1, g.groups[a]) for a in g.group_of)


# ---------------------------------------------------------- vector field


def vector_field(g: GameSpec, x):
    """Replicator field of ``g`` at ``x``.

    Exact when ``x`` holds Fractions (or ints), vectorised numpy otherwise.
    """
    if isinstance(x, np.ndarray) and x.dtype.kind == "f":
        ax = g.payoff_float @ x
        out = np.empty_like(x)
        for r in g.group_ranges:
            sl = slice(r.start, r.stop)
            avg = x[sl] @ ax[sl]
            out[sl] = x[sl] * (ax[sl] - avg)
        return out
    x = vec(x)
    A = g.payoff
    ax = [sum((a * b for a, b in zip(row, x) if a and b), Fraction(0)) for row in A]
    out = [Fraction(0)] * g.n
    for r in g.group_ranges:
        avg = sum((x[i] * ax[i] for i in r), Fraction(0))
        for i in r:
            out[i] = x[i] * (ax[i] - avg)
    return tuple(out)


def check_state(g: GameSpec, x, tol: float = 0.0) -> None:
    """Raise ``GameError`` unless ``x`` lies in the state polytope."""
    if len(x) != g.n:
        raise GameError(f"state has length {len(x)}, expected {g.n}")
    for i, xi in enumerate(x):
        if xi < -tol:
            raise GameError(f"negative coordinate x{i + 1} = {xi}")
    for a, r in enumerate(g.group_ranges):
        s = sum(x[i] for i in r)
        if abs(s - 1) > tol:
            raise GameError(f"group {a + 1} sums to {s}, not 1")


def equal_rows_equivalent(A1, A2, g: GameSpec) -> bool:
    """True iff every block of ``A1 - A2`` has all rows equal.

    Two payoff matrices related this way define the same replicator field.
    """
    A1, A2 = mat(A1), mat(A2)
    n = g.n
    for M in (A1, A2):
        if len(M) != n or any(len(r) != n for r in M):
            raise GameError("dimension mismatch in equal_rows_equivalent")
    for r in g.group_ranges:
        first = r[0]
        base = [A1[first][j] - A2[first][j] for j in range(n)]
        for i in r[1:]:
            if any(A1[i][j] - A2[i][j] != base[j] for j in range(n)):
                return False
    return True


def restrict_to_face(g: GameSpec, strategies: Iterable[int]) -> GameSpec:
    """The game induced on the face where only ``strategies`` (0-based) are used."""
    keep = sorted(set(strategies))
    if any(not 0 <= i < g.n for i in keep):
        raise GameError("strategy index out of range")
    sizes = []
    for a, r in enumerate(g.group_ranges):
        k = sum(1 for i in keep if i in r)
        if k == 0:
            raise GameError(f"group {a + 1} is unrepresented in the face")
        sizes.append(k)
    payoff = tuple(tuple(g.payoff[i][j] for j in keep) for i in keep)
    eq = None
    return GameSpec(tuple(sizes), payoff, eq, g.name)


def parse_vector(text: str) -> Vector:
    """Parse a comma-separated list of exact numbers, e.g. ``"0,1/2,1"``."""
    try:
        return tuple(frac(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise GameError(str(exc)) from None
