"""Golden reproduction of the bundled fish example.

Every item compares a computed object with the bundled expected data and
reports pass or fail with a short diff. Items never raise: an exception
inside one item is reported as that item's failure, so a perturbed game
still yields a complete report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Callable

from . import rational as ra
from .conservative import (
    casimir_basis,
    conservative_data,
    conservativity,
    formal_equilibria,
    is_formal_equilibrium,
    kernel_dimension,
)
from .game import GameSpec
from .poisson import (
    check_all_vertices,
    entry_structure,
    exit_structure,
    poisson_residual,
    sector_poisson,
    verify_path_poisson,
)
from .rational import fmt, mat, vec
from .skeleton import (
    branch_matrix,
    classify_edges,
    enumerate_branches,
    invariant_values,
    find_periodic_point,
    find_periodic_word,
    iterate_skeleton,
    level_functionals,
    periodic_certificate,
    random_level_point,
    rebase_hamiltonian,
    skeleton_character,
    spectrum,
    verify_structural_set,
    vertex_branch,
)


@dataclass(frozen=True)
class CheckItem:
    name: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.ok else "FAIL"
        return f"{tag}  {self.name}" + (f": {self.detail}" if self.detail else "")


def expected_data() -> dict:
    text = resources.files("polyrep").joinpath("data/fish_expected.json").read_text()
    return json.loads(text)


def _fmt_rows(rows) -> str:
    return "[" + "; ".join(" ".join(fmt(x) if isinstance(x, Fraction) else str(x) for x in r) for r in rows) + "]"


class _Context:
    """Lazily computed pipeline objects shared by the items."""

    def __init__(self, g: GameSpec):
        self.g = g
        self._cache: dict = {}

    def get(self, key: str, build: Callable):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    @property
    def ct(self):
        return self.get("ct", lambda: skeleton_character(self.g))

    @property
    def cells(self):
        return self.ct.cells

    @property
    def fg(self):
        return self.get("fg", lambda: classify_edges(self.ct))

    @property
    def pl(self):
        return self.get("pl", lambda: enumerate_branches(self.fg, [0]))

    @property
    def cons(self):
        return self.get("cons", lambda: conservative_data(self.g))

    def vnum(self, v) -> int:
        return self.cells.vertex_index[v] + 1

    def published_to_ours(self, exp) -> dict[int, int]:
        """Published branch number (1-based) to our branch index, by itinerary."""
        ours = {self.pl.vertex_numbers(b): b.index for b in self.pl.branches}
        return {k + 1: ours[tuple(it)] for k, it in enumerate(exp["branch_itineraries"]) if tuple(it) in ours}

    def level_setup(self, exp):
        sd, hs, cas = self.cons
        p0 = vec(exp["periodic_start"])
        fes = formal_equilibria(self.g)
        hs2 = rebase_hamiltonian(hs, fes.kernel_basis, p0, vec(exp["level"])[0])
        return hs2, cas, level_functionals(hs2, cas)


def _items(ctx: _Context, exp: dict) -> list[tuple[str, Callable[[], tuple[bool, str]]]]:
    g = ctx.g

    def vertices():
        got = [[i + 1 for i in v] for v in ctx.cells.vertices]
        return got == exp["vertices"], "" if got == exp["vertices"] else f"got {got}"

    def character():
        got = []
        for v in ctx.cells.vertices:
            row = []
            for i in range(g.n):
                row.append(fmt(ctx.ct.at(v, i)) if i in ctx.cells.facets_at(v) else "*")
            got.append(row)
        bad = [k + 1 for k, (a, b) in enumerate(zip(got, exp["character"])) if a != b]
        return not bad, "" if not bad else f"rows differ at vertices {bad}"

    def edges():
        got = [sorted(ctx.vnum(v) for v in e.ends) for e in ctx.cells.edges]
        want = [sorted(p) for p in exp["edges"]]
        return got == want, f"{len(got)} edges"

    def classification():
        flowing = [k + 1 for k in ctx.fg.flowing]
        neutral = [k + 1 for k in ctx.fg.neutral]
        listed = exp["neutral_edges_listed"]
        dup = sorted({k for k in listed if listed.count(k) > 1})
        ok = flowing == exp["flowing_edges"] and set(neutral) == set(listed) and len(neutral) == exp["neutral_count"]
        ok = ok and not ctx.fg.singular
        note = f"{len(flowing)} flowing, {len(neutral)} neutral, {len(ctx.fg.singular)} singular"
        if dup:
            note += f"; expected neutral list repeats edge(s) {dup} ({len(listed)} entries, {len(set(listed))} distinct)"
        return ok, note

    def orientation():
        bad = []
        for k in ctx.fg.flowing:
            want = exp["edges"][k]
            got = [ctx.vnum(ctx.fg.source(k)), ctx.vnum(ctx.fg.target(k))]
            if got != want:
                bad.append(k + 1)
        return not bad, "" if not bad else f"reversed edges {bad}"

    def saddles():
        bad = [ctx.vnum(v) for v in ctx.cells.vertices if not ctx.ct.is_saddle(v)]
        return not bad, "" if not bad else f"non-saddle vertices {bad}"

    def conservative():
        rec = conservativity(g)
        q = vec(exp["equilibrium"])
        w = vec(exp["casimir"])
        basis = casimir_basis(g)
        in_span = ra.rank(basis + (w,)) == ra.rank(basis) if basis else False
        checks = {
            "self-skew model": rec.A0 == g.payoff and rec.scaling == vec(exp["scaling"]),
            "equilibrium": is_formal_equilibrium(g, q),
            "casimir": in_span,
            "kernel dimension": kernel_dimension(g) == exp["kernel_dimension"],
        }
        bad = [k for k, ok in checks.items() if not ok]
        return not bad, "" if not bad else "failed: " + ", ".join(bad)

    def structural():
        cert = verify_structural_set(ctx.fg, [k - 1 for k in exp["structural_set"]])
        return cert.ok, ""

    def branches():
        got = sorted(ctx.pl.vertex_numbers(b) for b in ctx.pl.branches)
        want = sorted(tuple(x) for x in exp["branch_itineraries"])
        nonempty = all(not b.sector.is_empty() for b in ctx.pl.branches)
        return got == want and nonempty, f"{len(got)} branches"

    def sector_brackets():
        sd = ctx.cons[0]
        bad = []
        for key, want in exp["sector_brackets"].items():
            v = ctx.cells.vertices[int(key) - 1]
            if sector_poisson(g, sd, v).B != mat(want):
                bad.append(int(key))
        return not bad, "" if not bad else f"mismatch at vertices {bad}"

    def passage():
        p = exp["passage"]
        vt = vertex_branch(ctx.fg, p["edge_in"] - 1, p["edge_out"] - 1)
        c = [i - 1 for i in p["coords"]]
        got = ra.submatrix(vt.restricted, c, c)
        return got == mat(p["matrix"]), "" if got == mat(p["matrix"]) else _fmt_rows(got)

    def section_brackets():
        p = exp["passage"]
        sd = ctx.cons[0]
        c = [i - 1 for i in p["coords"]]
        ein = entry_structure(g, sd, ctx.ct, ctx.fg, p["edge_in"] - 1).full_n(g.n)
        eout = exit_structure(g, sd, ctx.ct, ctx.fg, p["edge_out"] - 1).full_n(g.n)
        got = {ra.submatrix(ein, c, c), ra.submatrix(eout, c, c)}
        want = {mat(p["bracket_in"]), mat(p["bracket_out"])}
        return got == want, "matched by value"

    def passage_identity():
        p = exp["passage"]
        sd = ctx.cons[0]
        vt = vertex_branch(ctx.fg, p["edge_in"] - 1, p["edge_out"] - 1)
        ein = entry_structure(g, sd, ctx.ct, ctx.fg, p["edge_in"] - 1).full_n(g.n)
        eout = exit_structure(g, sd, ctx.ct, ctx.fg, p["edge_out"] - 1).full_n(g.n)
        res = poisson_residual(vt.restricted, ein, eout)
        return ra.is_zero(res), ""

    def vertex_hamiltonian():
        sd, hs, _ = ctx.cons
        res = check_all_vertices(g, sd, ctx.ct, hs)
        bad = [ctx.vnum(v) for v, ok in res.items() if not ok]
        return not bad, "" if not bad else f"fails at vertices {bad}"

    def branch_poisson():
        sd = ctx.cons[0]
        bad = [b.index + 1 for b in ctx.pl.branches if not verify_path_poisson(g, sd, ctx.ct, ctx.pl, b.index).ok]
        return not bad, "" if not bad else f"fails on branches {bad}"

    def cycle_matrix():
        m = ctx.published_to_ours(exp)
        word = [m[k] for k in exp["cycle_word"]]
        got = branch_matrix(ctx.pl, word)
        return got == mat(exp["cycle_matrix"]), "" if got == mat(exp["cycle_matrix"]) else _fmt_rows(got)

    def cycle_spectrum():
        m = ctx.published_to_ours(exp)
        sp = spectrum(branch_matrix(ctx.pl, [m[k] for k in exp["cycle_word"]]))
        want = {int(k): v for k, v in exp["cycle_multiplicities"].items()}
        rest = sp.cofactor
        big = max(abs(z) for z in sp.eigenvalues)
        ok = sp.geometric == want and sp.multiplicities == want
        ok = ok and len(rest) == 3 and rest[0] == rest[2] == 1 and abs(big - exp["unstable_eigenvalue"]) < 1e-4
        return ok, f"unstable eigenvalue {big:.6f}, cofactor {' '.join(fmt(c) for c in rest)}"

    def level():
        hs2, cas, _ = ctx.level_setup(exp)
        p0 = vec(exp["periodic_start"])
        got = invariant_values(hs2, cas, p0)
        ok = got == vec(exp["level"]) and is_formal_equilibrium(g, hs2.q)
        return ok, f"invariants ({', '.join(fmt(x) for x in got)}) with q = ({', '.join(fmt(x) for x in hs2.q)})"

    def short_period():
        p0 = vec(exp["periodic_start"])
        m = ctx.published_to_ours(exp)
        cert = periodic_certificate(ctx.pl, p0, [m[k] for k in exp["cycle_word"]])
        found = find_periodic_word(ctx.pl, p0, exp["periodic_start_period"])
        ok = cert.ok and found is not None and found.minimal_period == exp["periodic_start_period"]
        return ok, f"orbit through cone closures, strict={cert.strict}"

    def long_period():
        _, _, rows = ctx.level_setup(exp)
        cert = find_periodic_point(ctx.pl, rows, vec(exp["level"]), exp["long_period"])
        if cert is None:
            return False, "no periodic point found"
        return cert.ok and cert.strict, "point (" + ", ".join(fmt(x) for x in cert.point) + ")"

    def long_orbit():
        _, _, rows = ctx.level_setup(exp)
        y = random_level_point(ctx.pl, rows, vec(exp["level"]), seed=1)
        rec = iterate_skeleton(ctx.pl, y, exp["orbit_steps"], invariants=rows)
        distinct = set(rec.invariants)
        ok = rec.status == "complete" and distinct == {vec(exp["level"])}
        return ok, f"{rec.steps} steps, {len(distinct)} distinct invariant value(s)"

    return [
        ("vertices", vertices),
        ("character table", character),
        ("edges", edges),
        ("edge classification", classification),
        ("flowing edge orientation", orientation),
        ("saddle vertices", saddles),
        ("conservativity", conservative),
        ("structural set", structural),
        ("branches", branches),
        ("sector brackets", sector_brackets),
        ("vertex passage matrix", passage),
        ("section brackets", section_brackets),
        ("passage Poisson identity", passage_identity),
        ("character from bracket", vertex_hamiltonian),
        ("branch Poisson maps", branch_poisson),
        ("cycle matrix", cycle_matrix),
        ("cycle spectrum", cycle_spectrum),
        ("invariant level", level),
        ("period-4 point", short_period),
        ("period-14 point", long_period),
        ("long exact orbit", long_orbit),
    ]


def reproduce_example(g: GameSpec, exp: dict | None = None) -> list[CheckItem]:
    """Run every golden item against ``g``; see :class:`CheckItem`."""
    exp = expected_data() if exp is None else exp
    ctx = _Context(g)
    out = []
    for name, fn in _items(ctx, exp):
        try:
            ok, detail = fn()
        except Exception as exc:  # one broken item must not hide the others
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckItem(name, bool(ok), detail))
    return out
