"""Exact planar polygons over the rationals.

Polygons are lists of ``(Fraction, Fraction)`` vertices in counter-clockwise
order. Half-planes are ``(a, b, c)`` meaning ``a*x + b*y + c >= 0``.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import cmp_to_key
from typing import Sequence

Point = tuple[Fraction, Fraction]
HalfPlane = tuple[Fraction, Fraction, Fraction]


def area(poly: Sequence[Point]) -> Fraction:
    """Signed shoelace area (positive for counter-clockwise order)."""
    s = Fraction(0)
    for (x0, y0), (x1, y1) in zip(poly, list(poly[1:]) + list(poly[:1])):
        s += x0 * y1 - x1 * y0
    return s / 2


def clip(poly: Sequence[Point], hp: HalfPlane) -> list[Point]:
    """Sutherland-Hodgman clip of a convex polygon by one closed half-plane."""
    a, b, c = hp
    out: list[Point] = []
    m = len(poly)
    for k in range(m):
        P, Q = poly[k], poly[(k + 1) % m]
        fp = a * P[0] + b * P[1] + c
        fq = a * Q[0] + b * Q[1] + c
        if fp >= 0:
            out.append(P)
        if (fp > 0 and fq < 0) or (fp < 0 and fq > 0):
            s = fp / (fp - fq)
            out.append((P[0] + s * (Q[0] - P[0]), P[1] + s * (Q[1] - P[1])))
    # drop consecutive duplicates created by vertices lying on the line
    dedup: list[Point] = []
    for pt in out:
        if not dedup or dedup[-1] != pt:
            dedup.append(pt)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup


def cyclic_order(points: Sequence[Point]) -> list[Point]:
    """Sort the vertices of a convex polygon counter-clockwise around their centroid."""
    pts = list(dict.fromkeys(points))
    if len(pts) < 3:
        return pts
    cx = sum(p[0] for p in pts) / len(pts)
    cy = sum(p[1] for p in pts) / len(pts)

    def half(p):
        dx, dy = p[0] - cx, p[1] - cy
        return 0 if (dy > 0 or (dy == 0 and dx > 0)) else 1

    def cmp(p, q):
        hp, hq = half(p), half(q)
        if hp != hq:
            return hp - hq
        cross = (p[0] - cx) * (q[1] - cy) - (p[1] - cy) * (q[0] - cx)
        return -1 if cross > 0 else (1 if cross < 0 else 0)

    return sorted(pts, key=cmp_to_key(cmp))


def vertices_of(halfplanes: Sequence[HalfPlane]) -> list[Point]:
    """Vertex enumeration of a bounded intersection of half-planes.

    Every pair of non-parallel boundary lines is intersected and the points
    satisfying all constraints are kept, in counter-clockwise order.
    """
    pts = []
    for (a1, b1, c1), (a2, b2, c2) in itertools.combinations(halfplanes, 2):
        det = a1 * b2 - a2 * b1
        if det == 0:
            continue
        x = (-c1 * b2 + c2 * b1) / det
        y = (-a1 * c2 + a2 * c1) / det
        if all(a * x + b * y + c >= 0 for a, b, c in halfplanes):
            pts.append((x, y))
    return cyclic_order(pts)


def strictly_inside(pt: Point, halfplanes: Sequence[HalfPlane]) -> bool:
    return all(a * pt[0] + b * pt[1] + c > 0 for a, b, c in halfplanes)
