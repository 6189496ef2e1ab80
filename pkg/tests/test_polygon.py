from fractions import Fraction

from hypothesis import given
from hypothesis import strategies as st

from polyrep import polygon as pg

F = Fraction
UNIT = [(F(0), F(0)), (F(1), F(0)), (F(1), F(1)), (F(0), F(1))]


def test_area_orientation():
    assert pg.area(UNIT) == 1
    assert pg.area(UNIT[::-1]) == -1


def test_clip_half():
    half = pg.clip(UNIT, (F(-1), F(0), F(1, 2)))  # x <= 1/2
    assert pg.area(pg.cyclic_order(half)) == F(1, 2)


def test_vertices_of_triangle():
    hps = [(F(1), F(0), F(0)), (F(0), F(1), F(0)), (F(-1), F(-1), F(1))]
    verts = pg.vertices_of(hps)
    assert set(verts) == {(0, 0), (1, 0), (0, 1)}
    assert pg.area(verts) == F(1, 2)


def test_empty_intersection():
    hps = [(F(1), F(0), F(-2)), (F(-1), F(0), F(1)), (F(0), F(1), F(0))]
    assert len(pg.vertices_of(hps)) < 3


def test_strictly_inside():
    hps = [(F(1), F(0), F(0)), (F(0), F(1), F(0)), (F(-1), F(-1), F(1))]
    assert pg.strictly_inside((F(1, 4), F(1, 4)), hps)
    assert not pg.strictly_inside((F(0), F(1, 4)), hps)


@given(st.fractions(min_value=F(1, 10), max_value=F(9, 10), max_denominator=20))
def test_clip_splits_area(t):
    left = pg.clip(UNIT, (F(-1), F(0), t))
    right = pg.clip(UNIT, (F(1), F(0), -t))
    total = abs(pg.area(pg.cyclic_order(left))) + abs(pg.area(pg.cyclic_order(right)))
    assert total == 1
