from fractions import Fraction

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import LEVEL, P0
from polyrep import rational as ra
from polyrep.game import enumerate_cells, make_game, vertex_point
from polyrep.skeleton import (
    branch_matrix,
    classify_edges,
    edge_section,
    enumerate_branches,
    invariant_values,
    facet_function,
    facet_nondegenerate,
    find_periodic_word,
    find_structural_set,
    iterate_skeleton,
    level_polygon,
    periodic_certificate,
    random_level_point,
    skeleton_character,
    spectrum,
    structural_set,
    transition_matrix,
    verify_structural_set,
    vertex_branch,
)


def flow_digraph(fg):
    G = nx.MultiDiGraph()
    G.add_nodes_from(fg.cells.vertices)
    for k in fg.flowing:
        G.add_edge(fg.source(k), fg.target(k), key=k)
    return G


def test_character_matches_facet_function(fish, ct):
    # in logarithmic coordinates the character is minus the growth rate of x_i at v
    cells = ct.cells
    for v in cells.vertices:
        x = vertex_point(fish, v)
        for i in cells.facets_at(v):
            assert ct.at(v, i) == -facet_function(fish, i, x)


def test_facets_nondegenerate(fish):
    assert all(facet_nondegenerate(fish, i) for i in range(fish.n))


def test_classification(fg):
    assert fg.regular
    assert len(fg.flowing) == 13 and len(fg.neutral) == 12 and not fg.singular
    for k in fg.flowing:
        s, t = fg.source(k), fg.target(k)
        e = fg.edge(k)
        assert fg.table.at(s, e.opposite(s)) < 0 < fg.table.at(t, e.opposite(t))


def test_structural_set_oracle(fg):
    cert = find_structural_set(fg)
    assert cert.ok and cert.edges == (0,)
    G = flow_digraph(fg)
    for S in [(), (0,)] + [(k,) for k in fg.flowing[1:4]]:
        H = G.copy()
        H.remove_edges_from([(fg.source(k), fg.target(k), k) for k in S])
        assert verify_structural_set(fg, S).ok == nx.is_directed_acyclic_graph(H)


def test_structural_set_rejects_and_witnesses(fg):
    cert = verify_structural_set(fg, [])
    assert not cert.ok and cert.cycle
    cyc = cert.cycle
    for a, b in zip(cyc, cyc[1:] + cyc[:1]):
        assert fg.target(a) == fg.source(b)
    with pytest.raises(ValueError):
        verify_structural_set(fg, [1])  # a neutral edge
    with pytest.raises(ValueError):
        structural_set(fg, "guess")


def test_all_flowing_edges_structural(fg):
    pl = enumerate_branches(fg, fg.flowing)
    assert all(len(b.edges) == 2 for b in pl.branches)


def test_transition_matrix_oracle(ct, fg):
    # L(y) = y - (y_s / c_s) c on the facets at v, identity elsewhere
    v = fg.target(5)
    s = fg.edge(0).opposite(v)
    L = transition_matrix(ct, v, s)
    c = ct.vector(v)
    y = ra.vec(range(1, 8))
    z = ra.matvec(L, y)
    on = set(ct.cells.facets_at(v))
    for i in range(7):
        want = y[i] - y[s] / c[s] * c[i] if i in on else y[i]
        assert z[i] == want
    assert z[s] == 0


def test_vertex_branch_rejects_non_adjacent(fg):
    with pytest.raises(ValueError):
        vertex_branch(fg, 0, 0)


def test_branch_matrices_respect_sections(pl):
    for b in pl.branches:
        w = b.sector.witness
        y = ra.matvec(b.matrix, w)
        assert edge_section(pl.flow, b.end).contains(y)


def test_branch_chain_error(pl):
    a = pl.branches[0]
    bad = [b for b in pl.branches if b.start != a.end]
    if bad:
        with pytest.raises(ValueError):
            branch_matrix(pl, [a.index, bad[0].index])


def test_invariants_preserved_by_branches(pl, level_rows):
    _, _, rows = level_rows
    for b in pl.branches:
        for r in rows:
            assert ra.vecmat(r, b.matrix) == r


def test_spectrum_example():
    M = ra.mat([[2, 0, 0], [0, 1, 0], [0, 0, 0]])
    sp = spectrum(M)
    assert sp.multiplicities == {0: 1, 1: 1}
    assert sp.cofactor == (-2, 1)
    assert sp.eigenvalues[-1] == pytest.approx(2)


def test_period_four(pl, published, level_rows):
    hs2, cas, _ = level_rows
    word = [published[k] for k in (4, 1, 3, 4)]
    cert = periodic_certificate(pl, P0, word)
    assert cert.ok and cert.minimal_period == 4 and not cert.strict
    assert invariant_values(hs2, cas, P0) == LEVEL
    found = find_periodic_word(pl, P0, 4)
    assert found is not None and found.minimal_period == 4


def test_boundary_policy(pl):
    rec = iterate_skeleton(pl, P0, 8)
    assert rec.status == "boundary_hit" and rec.steps == 0
    rec = iterate_skeleton(pl, P0, 8, boundary="closure", keep_points=True)
    assert rec.status == "complete" and rec.points[4] == P0 and rec.ties
    with pytest.raises(ValueError):
        iterate_skeleton(pl, P0, 1, boundary="nearest")


def test_level_polygons_cover_section(pl, level_rows):
    _, _, rows = level_rows
    whole = level_polygon(pl, None, rows, LEVEL)
    parts = [level_polygon(pl, b.index, rows, LEVEL) for b in pl.branches]
    assert whole.area == Fraction(1, 2)
    assert sorted(p.area for p in parts) == sorted(ra.vec(["5/48", "1/144", "1/16", "5/48", "2/9"]))
    assert sum(p.area for p in parts) == whole.area


def test_invariants_vanish_at_origin(level_rows):
    hs2, cas, _ = level_rows
    assert invariant_values(hs2, cas, (0,) * 7) == (0, 0)


def test_orbit_preserves_level(pl, level_rows):
    _, _, rows = level_rows
    y = random_level_point(pl, rows, LEVEL, seed=3)
    rec = iterate_skeleton(pl, y, 500, invariants=rows)
    assert rec.status == "complete" and set(rec.invariants) == {LEVEL}


@settings(max_examples=25)
@given(st.data())
def test_character_oracle_random(data):
    groups = data.draw(st.sampled_from([(3,), (2, 2), (3, 2)]))
    n = sum(groups)
    A = [[Fraction(data.draw(st.integers(-3, 3))) for _ in range(n)] for _ in range(n)]
    g = make_game(groups, A)
    cells = enumerate_cells(g)
    ct = skeleton_character(g, cells)
    # oracle: payoff of the vertex strategy minus payoff of i, against the pure profile
    for v in cells.vertices:
        x = vertex_point(g, v)
        Ax = ra.matvec(g.payoff, x)
        for i in cells.facets_at(v):
            a = g.group_of[i]
            assert ct.at(v, i) == Ax[v[a]] - Ax[i]
    fg = classify_edges(ct)
    assert len(fg.flowing) + len(fg.neutral) + len(fg.singular) == len(cells.edges)
    assert not set(fg.flowing) & set(fg.neutral)
