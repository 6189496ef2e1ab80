"""Command-line front end.

Every command reads a game file (JSON, see :func:`polyrep.game.parse_game`),
writes its artifacts into ``--out`` and prints a short summary. Exit status
is 0 on success, 1 when a mathematical check fails and 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import reports
from .conservative import conservative_data, conservativity, formal_equilibria
from .game import GameError, GameSpec, fish_game, load_game, parse_vector
from .rational import fmt

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class CheckFailed(Exception):
    """A verification did not hold; the message carries the witness."""


# ------------------------------------------------------------- helpers


def _ints(text: str | None) -> list[int]:
    """``"1,5"`` -> ``[0, 4]`` (1-based on the command line)."""
    if not text:
        return []
    out = [int(t) - 1 for t in text.split(",") if t.strip()]
    if any(k < 0 for k in out):
        raise GameError("indices are 1-based")
    return out


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _pipeline(g: GameSpec, structural: list[int] | None = None):
    from .skeleton import classify_edges, enumerate_branches, find_structural_set, skeleton_character

    ct = skeleton_character(g)
    fg = classify_edges(ct)
    if structural is None:
        cert = find_structural_set(fg)
        if not cert.ok:
            raise CheckFailed("no structural set found")
        structural = list(cert.edges)
    return ct, fg, enumerate_branches(fg, structural)


def _invariants(g: GameSpec, level=None, anchor=None):
    """Invariant rows, rebased so that ``anchor`` sits on ``level`` when both are given."""
    from .skeleton import invariant_values, level_functionals, rebase_hamiltonian

    sd, hs, cas = conservative_data(g)
    if level is not None and anchor is not None:
        fes = formal_equilibria(g)
        hs = rebase_hamiltonian(hs, fes.kernel_basis if fes else (), anchor, level[0])
        got = invariant_values(hs, cas, anchor)
        if got != tuple(level):
            raise CheckFailed(
                "start point is not on the requested level: invariants ("
                + ", ".join(fmt(x) for x in got) + ")"
            )
    return sd, hs, cas, level_functionals(hs, cas)


def _inv_names(cas) -> list[str]:
    return ["inv_h"] + [f"inv_w{k + 1}" for k in range(len(cas))]


# ------------------------------------------------------------ commands


def cmd_analyze(g: GameSpec, args) -> int:
    from .skeleton import classify_edges, skeleton_character

    ct = skeleton_character(g)
    fg = classify_edges(ct)
    rec = conservativity(g)
    _write(args.out, "character.csv", reports.character_csv(ct))
    _write(args.out, "edges.csv", reports.edges_csv(fg))
    _write(args.out, "conservativity.json", json.dumps(rec.as_dict(), indent=1) + "\n")
    if args.format == "dot":
        _write(args.out, "flow.dot", reports.flow_dot(fg))
    cells = ct.cells
    print(f"groups {list(g.groups)}: {len(cells.vertices)} vertices, {g.n} facets, {len(cells.edges)} edges")
    print(f"flowing {[k + 1 for k in fg.flowing]}")
    print(f"neutral {[k + 1 for k in fg.neutral]}")
    print(f"singular {[k + 1 for k in fg.singular]}; regular {fg.regular}")
    print(f"saddle vertices {sum(ct.is_saddle(v) for v in cells.vertices)}/{len(cells.vertices)}")
    print(f"conservative {rec.conservative}")
    return EXIT_OK


def cmd_skeleton(g: GameSpec, args) -> int:
    from .skeleton import classify_edges, skeleton_character, structural_set

    fg = classify_edges(skeleton_character(g))
    if args.structural_set:
        cert = structural_set(fg, "verify", _ints(args.structural_set))
    else:
        cert = structural_set(fg, "find")
    if args.format == "dot":
        _write(args.out, "flow.dot", reports.flow_dot(fg))
    else:
        _write(args.out, "edges.csv", reports.edges_csv(fg))
    if not cert.ok:
        print(f"not structural: cycle through edges {[k + 1 for k in cert.cycle]}", file=sys.stderr)
        return EXIT_FAIL
    print(f"structural set {[k + 1 for k in cert.edges]}")
    return EXIT_OK


def cmd_branches(g: GameSpec, args) -> int:
    from .reports import matrix_text

    _, _, pl = _pipeline(g, _ints(args.structural_set) or None)
    _write(args.out, "branches.csv", reports.branches_csv(pl))
    _write(args.out, "branch_matrices.txt", "".join(matrix_text(f"branch {b.index + 1}", b.matrix) for b in pl.branches))
    for b in pl.branches:
        print(f"branch {b.index + 1}: vertices {pl.vertex_numbers(b)}")
    return EXIT_OK


def cmd_iterate(g: GameSpec, args) -> int:
    from .skeleton import iterate_skeleton, random_level_point

    _, _, pl = _pipeline(g, _ints(args.structural_set) or None)
    level = parse_vector(args.level) if args.level else None
    if args.start == "random":
        if level is None:
            raise GameError("--start random needs --level")
        _, _, cas, rows = _invariants(g)
        start = random_level_point(pl, rows, level, seed=args.seed)
    else:
        start = parse_vector(args.start)
        _, _, cas, rows = _invariants(g, level, start)
    rec = iterate_skeleton(pl, start, args.steps, invariants=rows, keep_points=True, boundary=args.boundary)
    _write(args.out, "orbit.csv", reports.orbit_csv(rec, g.n, _inv_names(cas)))
    distinct = set(rec.invariants)
    print(f"{rec.steps} steps, status {rec.status}, {len(rec.ties)} boundary ties")
    print("invariants " + "; ".join("(" + ", ".join(fmt(x) for x in v) + ")" for v in sorted(distinct)))
    if len(distinct) != 1:
        return EXIT_FAIL
    if level is not None and distinct != {tuple(level)}:
        return EXIT_FAIL
    return EXIT_OK


def cmd_poisson(g: GameSpec, args) -> int:
    from .poisson import check_all_vertices, entry_structure, exit_structure, sector_poisson, verify_vertex_poisson
    from .reports import matrix_text
    from .skeleton import classify_edges, skeleton_character

    sd, hs, _ = conservative_data(g)
    ct = skeleton_character(g)
    fg = classify_edges(ct)
    idx = ct.cells.vertex_index
    parts = []
    for v in ct.cells.vertices:
        sp = sector_poisson(g, sd, v)
        parts.append(matrix_text(f"sector bracket at vertex {idx[v] + 1}", sp.B))
    for k in fg.flowing:
        for kind, fn in (("entry", entry_structure), ("exit", exit_structure)):
            ds = fn(g, sd, ct, fg, k)
            parts.append(matrix_text(
                f"{kind} bracket on edge {k + 1} at vertex {idx[ds.vertex] + 1}, frozen facet {ds.constrained + 1}",
                ds.full_n(g.n), ds.coords,
            ))
    ham = check_all_vertices(g, sd, ct, hs)
    fails = [idx[v] + 1 for v, ok in ham.items() if not ok]
    pairs = [(a, b) for a in fg.flowing for b in fg.out_edges[fg.target(a)]]
    bad_pairs = []
    for a, b in pairs:
        ok, _ = verify_vertex_poisson(g, sd, ct, fg, a, b)
        if not ok:
            bad_pairs.append((a + 1, b + 1))
    parts.append(f"character = bracket x gradient at all vertices: {not fails}\n")
    parts.append(f"vertex passages preserving brackets: {len(pairs) - len(bad_pairs)}/{len(pairs)}\n")
    _write(args.out, "poisson.txt", "\n".join(parts))
    print(f"character identity fails at {fails}" if fails else "character identity holds at every vertex")
    print(f"{len(pairs) - len(bad_pairs)}/{len(pairs)} vertex passages are Poisson")
    return EXIT_FAIL if fails or bad_pairs else EXIT_OK


def cmd_verify_poisson(g: GameSpec, args) -> int:
    from .poisson import verify_path_poisson

    sd, _, _ = conservative_data(g)
    ct, _, pl = _pipeline(g, _ints(args.structural_set) or None)
    ids = range(len(pl.branches)) if args.branch == "all" else _ints(args.branch)
    out, failed = [], False
    idx = ct.cells.vertex_index
    for b in ids:
        if not 0 <= b < len(pl.branches):
            raise GameError(f"no branch {b + 1}")
        rep = verify_path_poisson(g, sd, ct, pl, b)
        failed |= not rep.ok
        out.append({
            "branch": b + 1,
            "vertex_checks": [[idx[v] + 1, ok] for v, ok in rep.vertex_checks],
            "transition_checks": [[k + 1, ok] for k, ok in rep.transition_checks],
            "composed": rep.composed,
            "residual": None if rep.residual is None else [[fmt(x) for x in r] for r in rep.residual],
        })
        print(f"branch {b + 1}: {'Poisson' if rep.ok else 'FAILED'}")
    _write(args.out, "verify_poisson.json", json.dumps(out, indent=1) + "\n")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_simulate(g: GameSpec, args) -> int:
    from .ode import ODEControl, integrate

    x0 = parse_vector(args.start)
    if len(x0) != g.n:
        raise GameError(f"start has {len(x0)} entries, expected {g.n}")
    hs, cas = None, ()
    if conservativity(g).conservative:
        _, hs, cas = conservative_data(g)
    tr = integrate(g, x0, args.T, ODEControl(rtol=args.rtol), hs=hs, casimirs=cas)
    _write(args.out, "trajectory.csv", reports.trajectory_csv(tr, g.n))
    drift = tr.drift()
    print(f"{len(tr.times) - 1} steps to t = {tr.times[-1]:.6g}")
    print("drift " + ", ".join(f"{k} {v:.3e}" for k, v in drift.items()))
    return EXIT_OK


def cmd_converge(g: GameSpec, args) -> int:
    from .ode import cone_samples, convergence_study

    _, _, pl = _pipeline(g, _ints(args.structural_set) or None)
    (b,) = _ints(args.branch)
    if not 0 <= b < len(pl.branches):
        raise GameError(f"no branch {b + 1}")
    samples = cone_samples(pl.branches[b].sector, args.samples, args.margin, seed=args.seed)
    table = convergence_study(g, pl, b, _floats(args.eps), samples, delta=args.delta)
    _write(args.out, "convergence.csv", reports.convergence_csv(table))
    for r in table.rows:
        print(f"eps {r.eps:g} sample {r.sample + 1}: {r.status} {r.error:.6g}")
    ok = table.itinerary_ok and (table.monotone is None or all(table.monotone.values()))
    print(f"itineraries match: {table.itinerary_ok}; errors decrease: "
          f"{'n/a' if table.monotone is None else all(table.monotone.values())}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_level_polygon(g: GameSpec, args) -> int:
    from .skeleton import level_polygon

    _, _, pl = _pipeline(g, _ints(args.structural_set) or None)
    level = parse_vector(args.level)
    anchor = parse_vector(args.anchor) if args.anchor else None
    _, _, _, rows = _invariants(g, level, anchor)
    ids = range(len(pl.branches)) if args.branch == "all" else _ints(args.branch)
    polys = [(f"branch {b + 1}", level_polygon(pl, b, rows, level)) for b in ids]
    proj = tuple(_ints(args.proj))
    if len(proj) != 2:
        raise GameError("--proj needs two coordinates")
    if args.format == "svg":
        _write(args.out, "level_polygons.svg", reports.polygons_svg(polys, proj))
    else:
        _write(args.out, "level_polygons.csv", reports.polygons_csv(polys, proj))
    for name, p in polys:
        print(f"{name}: {len(p.points)} vertices, area {fmt(p.area)}")
    return EXIT_OK


def cmd_reproduce(g: GameSpec, args) -> int:
    from .reproduce import reproduce_example

    items = reproduce_example(g)
    text = "\n".join(it.line() for it in items) + "\n"
    _write(args.out, "reproduce_report.txt", text)
    sys.stdout.write(text)
    failed = sum(not it.ok for it in items)
    print(f"{len(items) - failed}/{len(items)} items pass")
    return EXIT_FAIL if failed else EXIT_OK


# --------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polyrep", description="Asymptotic dynamics of polymatrix replicators.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, game=True, **kw):
        sp = sub.add_parser(name, **kw)
        if game:
            sp.add_argument("game", help="game file (JSON)")
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory")
        sp.add_argument("--format", choices=("csv", "dot", "svg"), default="csv")
        sp.add_argument("--seed", type=int, default=0)
        sp.set_defaults(func=fn)
        return sp

    add("analyze", cmd_analyze, help="cells, character table, edge classes, conservativity")
    sp = add("skeleton", cmd_skeleton, help="flow graph and structural set")
    grp = sp.add_mutually_exclusive_group()
    grp.add_argument("--structural-set", help="edges to verify, e.g. 1,5")
    grp.add_argument("--find", action="store_true", help="search for a small structural set (default)")
    sp = add("branches", cmd_branches, help="branches of the return map")
    sp.add_argument("--structural-set")
    sp = add("iterate", cmd_iterate, help="exact orbit of the return map")
    sp.add_argument("--start", required=True, help="start vector, or 'random' with --level")
    sp.add_argument("--steps", type=int, default=1000)
    sp.add_argument("--level", help="invariant level c1,c2,...")
    sp.add_argument("--boundary", choices=("halt", "closure"), default="closure")
    sp.add_argument("--structural-set")
    add("poisson", cmd_poisson, help="sector and section brackets with identities")
    sp = add("verify-poisson", cmd_verify_poisson, help="exact Poisson-map check per branch")
    sp.add_argument("--branch", default="all")
    sp.add_argument("--structural-set")
    sp = add("simulate", cmd_simulate, help="integrate the replicator flow")
    sp.add_argument("--start", required=True)
    sp.add_argument("-T", type=float, default=100.0)
    sp.add_argument("--rtol", type=float, default=1e-10)
    sp = add("converge", cmd_converge, help="numerical return map against the branch matrix")
    sp.add_argument("--branch", required=True)
    sp.add_argument("--eps", default="0.45,0.35,0.25")
    sp.add_argument("--samples", type=int, default=5)
    sp.add_argument("--margin", type=float, default=0.2)
    sp.add_argument("--delta", type=float, default=0.1)
    sp.add_argument("--structural-set")
    sp = add("level-polygon", cmd_level_polygon, help="level sets of the invariants inside branch cones")
    sp.add_argument("--branch", default="all")
    sp.add_argument("--level", required=True)
    sp.add_argument("--anchor", help="point that must lie on the level; shifts the equilibrium to match")
    sp.add_argument("--proj", default="3,4")
    sp.add_argument("--structural-set")
    sp = add("reproduce-example", cmd_reproduce, game=False, help="golden report for the bundled example")
    sp.add_argument("--game", help="alternative game file (negative controls)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "reproduce-example":
            g = load_game(args.game) if args.game else fish_game()
        else:
            g = load_game(args.game)
        return args.func(g, args)
    except CheckFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (GameError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
