"""Text, CSV, DOT and SVG renderings of computed objects.

Exact values print as ``p/q``; floats print with 17 significant digits so
that files round-trip. Vertices, facets, edges and branches are numbered
from 1 in every report.
"""

from __future__ import annotations

import csv
import io
from fractions import Fraction
from typing import Iterable, Sequence

from .rational import fmt


def ffmt(x: float) -> str:
    return format(float(x), ".17g")


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _cell(x) -> str:
    if isinstance(x, Fraction):
        return fmt(x)
    if isinstance(x, float):
        return ffmt(x)
    return str(x)


def character_csv(ct) -> str:
    """One row per vertex; ``*`` where the vertex is not on the facet."""
    cells = ct.cells
    n = ct.game.n
    rows = []
    for k, v in enumerate(cells.vertices):
        on = set(cells.facets_at(v))
        rows.append([k + 1, "(" + ",".join(str(i + 1) for i in v) + ")"] + [fmt(ct.at(v, i)) if i in on else "*" for i in range(n)])
    return _csv(["vertex", "label"] + [f"f{i + 1}" for i in range(n)], rows)


def edges_csv(fg) -> str:
    cells = fg.cells
    idx = cells.vertex_index
    flowing = set(fg.flowing)
    neutral = set(fg.neutral)
    rows = []
    for e in cells.edges:
        k = e.index
        a, b = (idx[v] + 1 for v in e.ends)
        if k in flowing:
            kind, s, t = "flowing", idx[fg.source(k)] + 1, idx[fg.target(k)] + 1
        else:
            kind, s, t = ("neutral" if k in neutral else "singular"), "", ""
        rows.append([k + 1, a, b, kind, s, t])
    return _csv(["edge", "end_a", "end_b", "class", "source", "target"], rows)


def flow_dot(fg, name: str = "flow") -> str:
    """Flow digraph: solid labelled arcs for flowing edges, dashed lines for neutral ones."""
    idx = fg.cells.vertex_index
    lines = [f"digraph {name} {{", "  node [shape=circle];"]
    for v in fg.cells.vertices:
        tag = " style=filled fillcolor=lightgrey" if fg.table.is_saddle(v) else ""
        lines.append(f'  v{idx[v] + 1} [label="{idx[v] + 1}"{tag}];')
    for k in fg.flowing:
        lines.append(f'  v{idx[fg.source(k)] + 1} -> v{idx[fg.target(k)] + 1} [label="{k + 1}"];')
    for k in fg.neutral:
        a, b = (idx[v] + 1 for v in fg.edge(k).ends)
        lines.append(f'  v{a} -> v{b} [style=dashed dir=none label="{k + 1}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def branches_csv(pl) -> str:
    rows = []
    for b in pl.branches:
        rows.append([
            b.index + 1,
            " ".join(str(k + 1) for k in b.edges),
            " ".join(str(v) for v in pl.vertex_numbers(b)),
            len(b.sector.rows),
            " ".join(fmt(x) for x in b.sector.witness),
        ])
    return _csv(["branch", "edges", "vertices", "inequalities", "interior_point"], rows)


def matrix_text(title: str, M, coords: Sequence[int] | None = None) -> str:
    from .rational import format_matrix, submatrix

    if coords is not None:
        M = submatrix(M, coords, coords)
        title += " [coords " + ",".join(str(i + 1) for i in coords) + "]"
    return f"{title}\n{format_matrix(M)}\n"


def orbit_csv(rec, n: int, names: Sequence[str] = ()) -> str:
    """Orbit points with the branch applied next and the invariant values."""
    rows = []
    pts = rec.points or []
    for k, y in enumerate(pts):
        br = rec.branches[k] + 1 if k < len(rec.branches) else ""
        inv = rec.invariants[k] if k < len(rec.invariants) else ()
        rows.append([k, br] + [fmt(x) for x in y] + [fmt(x) for x in inv])
    return _csv(["step", "branch"] + [f"y{i + 1}" for i in range(n)] + list(names), rows)


def polygons_csv(polys: Sequence[tuple[str, object]], proj: tuple[int, int]) -> str:
    i, j = proj
    rows = []
    for name, poly in polys:
        for k, p in enumerate(poly.points):
            rows.append([name, k, fmt(p[i]), fmt(p[j])])
    return _csv(["polygon", "vertex", f"y{i + 1}", f"y{j + 1}"], rows)


_COLORS = ("#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666")


def polygons_svg(polys, proj: tuple[int, int], points=(), size: int = 480) -> str:
    """Projected polygons and optional orbit points as a standalone SVG."""
    i, j = proj
    xs = [float(p[i]) for _, poly in polys for p in poly.points] + [float(p[i]) for p in points]
    ys = [float(p[j]) for _, poly in polys for p in poly.points] + [float(p[j]) for p in points]
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    span = max(x1 - x0, y1 - y0) or 1.0
    pad = 20

    def tx(x):
        return pad + (x - x0) / span * (size - 2 * pad)

    def ty(y):
        return size - pad - (y - y0) / span * (size - 2 * pad)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">']
    for k, (name, poly) in enumerate(polys):
        if not poly.points:
            continue
        pts = " ".join(f"{tx(float(p[i])):.3f},{ty(float(p[j])):.3f}" for p in poly.points)
        c = _COLORS[k % len(_COLORS)]
        out.append(f'  <polygon points="{pts}" fill="{c}" fill-opacity="0.25" stroke="{c}"><title>{name}</title></polygon>')
    for p in points:
        out.append(f'  <circle cx="{tx(float(p[i])):.3f}" cy="{ty(float(p[j])):.3f}" r="0.8" fill="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def trajectory_csv(tr, n: int) -> str:
    m = 0 if tr.casimirs is None else tr.casimirs.shape[1]
    header = ["t"] + [f"x{i + 1}" for i in range(n)] + (["h"] if tr.h is not None else []) + [f"h_w{k + 1}" for k in range(m)]
    rows = []
    for k, t in enumerate(tr.times):
        r = [ffmt(t)] + [ffmt(x) for x in tr.states[k]]
        if tr.h is not None:
            r.append(ffmt(tr.h[k]))
        if m:
            r += [ffmt(x) for x in tr.casimirs[k]]
        rows.append(r)
    return _csv(header, rows)


def convergence_csv(table) -> str:
    rows = [[ffmt(r.eps), r.sample + 1, ffmt(r.error), r.status] for r in table.rows]
    return _csv(["eps", "sample", "error", "status"], rows)
