from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from polyrep.conservative import conservative_data, formal_equilibria
from polyrep.game import fish_game, make_game
from polyrep.skeleton import (
    classify_edges,
    enumerate_branches,
    level_functionals,
    rebase_hamiltonian,
    skeleton_character,
)

settings.register_profile(
    "repo", deadline=None, derandomize=True, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")

P0 = tuple(Fraction(x) for x in ("0", "1/2", "1", "0", "0", "0", "0"))
LEVEL = (Fraction(1, 3), Fraction(-1, 2))
Q_PRINTED = tuple(Fraction(x) for x in ("1/9", "1/3", "1/9", "1/3", "1/9", "2/3", "1/3"))
W = tuple(Fraction(x) for x in (-2, 3, -2, 3, -2, -3, 3))


@pytest.fixture(scope="session")
def fish():
    return fish_game()


@pytest.fixture(scope="session")
def ct(fish):
    return skeleton_character(fish)


@pytest.fixture(scope="session")
def fg(ct):
    return classify_edges(ct)


@pytest.fixture(scope="session")
def pl(fg):
    return enumerate_branches(fg, [0])


@pytest.fixture(scope="session")
def cons(fish):
    """(skew model, Hamiltonian with the printed equilibrium, Casimirs)."""
    return conservative_data(fish)


@pytest.fixture(scope="session")
def level_rows(fish, cons):
    """Invariant rows with the equilibrium shifted so that p0 sits on LEVEL."""
    _, hs, cas = cons
    hs2 = rebase_hamiltonian(hs, formal_equilibria(fish).kernel_basis, P0, LEVEL[0])
    return hs2, cas, level_functionals(hs2, cas)


@pytest.fixture(scope="session")
def published(pl):
    """Published branch number (1-based) -> our branch index, by vertex itinerary."""
    table = [
        (1, 2, 10, 9, 7, 5, 3, 1, 2),
        (1, 2, 6, 10, 9, 7, 5, 3, 1, 2),
        (1, 2, 6, 4, 10, 9, 7, 5, 3, 1, 2),
        (1, 2, 8, 6, 10, 9, 7, 5, 3, 1, 2),
        (1, 2, 8, 6, 4, 10, 9, 7, 5, 3, 1, 2),
    ]
    ours = {pl.vertex_numbers(b): b.index for b in pl.branches}
    return {k + 1: ours[it] for k, it in enumerate(table)}


# ------------------------------------------------------- random games


@st.composite
def group_sizes(draw, max_n=6):
    p = draw(st.integers(1, 2))
    if p == 1:
        return (draw(st.integers(2, max_n)),)
    a = draw(st.integers(1, max_n - 1))
    b = draw(st.integers(1, max_n - a))
    if a + b < 3:
        b = 2
    return (a, b)


entries = st.integers(-4, 4).map(Fraction) | st.fractions(min_value=-3, max_value=3, max_denominator=4)


@st.composite
def games(draw, max_n=6):
    groups = draw(group_sizes(max_n))
    n = sum(groups)
    rows = [[draw(entries) for _ in range(n)] for _ in range(n)]
    return make_game(groups, rows)


def equal_rows_matrix(draw, groups):
    """A matrix whose every block has all rows equal (the kernel of the field map)."""
    n = sum(groups)
    starts = [sum(groups[:a]) for a in range(len(groups))]
    out = [[Fraction(0)] * n for _ in range(n)]
    for a, s in enumerate(starts):
        row = [draw(st.integers(-3, 3)) for _ in range(n)]
        for i in range(s, s + groups[a]):
            out[i] = [Fraction(x) for x in row]
    return out


@st.composite
def conservative_games(draw, max_n=6):
    """``A = A0 D + C`` with ``A0`` skew, ``D`` a nonzero group scaling and ``C`` in the kernel."""
    groups = draw(group_sizes(max_n))
    n = sum(groups)
    A0 = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            v = Fraction(draw(st.integers(-3, 3)))
            A0[i][j], A0[j][i] = v, -v
    lam = [Fraction(draw(st.sampled_from([-2, -1, 1, 2, 3]))) for _ in groups]
    gof = [a for a, k in enumerate(groups) for _ in range(k)]
    C = equal_rows_matrix(draw, groups)
    A = [[A0[i][j] * lam[gof[j]] + C[i][j] for j in range(n)] for i in range(n)]
    return make_game(groups, A), A0, tuple(lam)


@st.composite
def interior_points(draw, groups):
    x = []
    for k in groups:
        w = [Fraction(draw(st.integers(1, 20))) for _ in range(k)]
        s = sum(w)
        x += [v / s for v in w]
    return tuple(x)


# ---------------------------------------------------- acceptance lines

_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(key: str, ok: bool, detail: str = ""):
        _ACCEPTANCE[key] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: (int(k.rstrip("abc")), k)):
        ok, detail = _ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
