import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import Q_PRINTED, W, conservative_games, interior_points
from polyrep import rational as ra
from polyrep.conservative import (
    SkewDecomposition,
    casimir_basis,
    casimir_eval,
    conservative_data,
    conservativity,
    find_skew_decomposition,
    formal_equilibria,
    hamiltonian_eval,
    hamiltonian_gradient,
    hamiltonian_spec,
    is_formal_equilibrium,
    kernel_dimension,
    poisson_field_at,
    skew_decomposition,
    verify_skew_decomposition,
)
from polyrep.game import GameError, make_game, vector_field
from polyrep.ode import integrate


def test_fish_equilibria(fish):
    fes = formal_equilibria(fish)
    assert is_formal_equilibrium(fish, fes.particular)
    assert fes.interior and fes.margin > 0
    assert fes.dimension == 1 and fes.kernel_basis == (W,)
    assert fes.particular == ra.vec(["1/5"] * 5 + ["4/5", "1/5"])
    for w in fes.kernel_basis:
        shifted = tuple(a + b for a, b in zip(fes.particular, w))
        assert is_formal_equilibrium(fish, shifted)
    assert is_formal_equilibrium(fish, Q_PRINTED)


def test_fish_kernel_and_casimir(fish):
    assert kernel_dimension(fish) == 3
    basis = casimir_basis(fish)
    assert basis == (W,)
    assert all(x == 0 for x in ra.matvec(fish.payoff, W))


def test_zero_game_is_conservative():
    g = make_game([2, 2], [[0] * 4 for _ in range(4)])
    rec = conservativity(g)
    assert rec.conservative
    assert kernel_dimension(g) == 4


def test_rock_paper_scissors():
    g = make_game([3], [[0, 1, -1], [-1, 0, 1], [1, -1, 0]])
    rec = conservativity(g)
    assert rec.conservative and rec.q == (Fraction(1, 3),) * 3
    assert rec.scaling == (1,)


def test_find_scaled_bimatrix():
    g = make_game([2, 2], [[0, 0, 1, 2], [0, 0, 3, 1], [-2, -6, 0, 0], [-4, -2, 0, 0]])
    sd = find_skew_decomposition(g)
    assert sd is not None
    assert verify_skew_decomposition(g, sd.A0, sd.scaling).ok
    assert skew_decomposition(g, "verify", sd.A0, sd.scaling)


def test_find_rejects_nonconservative():
    g = make_game([2], [[1, 0], [0, 0]])
    assert find_skew_decomposition(g) is None
    assert not conservativity(g).conservative
    with pytest.raises(GameError):
        conservative_data(g)


def test_verify_names_failures(fish):
    bad = [list(r) for r in fish.payoff]
    bad[0][1] += 1
    res = verify_skew_decomposition(fish, bad, (1, 1))
    assert not res.ok
    assert "A0 is not skew-symmetric" in res.failures
    res = verify_skew_decomposition(fish, fish.payoff, (1, 0))
    assert "a scaling entry is zero" in res.failures
    with pytest.raises(ValueError):
        skew_decomposition(fish, "guess")


def test_hamiltonian_value_at_q(fish, cons):
    _, hs, _ = cons
    want = math.fsum(float(q) * math.log(float(q)) for q in Q_PRINTED)
    assert hamiltonian_eval(hs, Q_PRINTED) == pytest.approx(want, rel=1e-14)
    assert want == pytest.approx(-2.1013305531856, abs=1e-12)


def test_hamiltonian_boundary_error(cons):
    _, hs, cas = cons
    p = (0, Fraction(1, 2), Fraction(1, 2), 0, 0, 0, 1)
    with pytest.raises(ValueError):
        hamiltonian_eval(hs, p)
    with pytest.raises(ValueError):
        casimir_eval(cas[0], p)


def test_poisson_field_generates_flow(fish, cons):
    sd, hs, _ = cons
    x = ra.vec(["1/10", "1/5", "3/10", "1/5", "1/5", "1/3", "2/3"])
    P = poisson_field_at(fish, sd, x)
    assert ra.is_skew(P)
    assert ra.matvec(P, hamiltonian_gradient(hs, x)) == vector_field(fish, x)
    for w in casimir_basis(fish):
        grad = tuple(wi / xi for wi, xi in zip(w, x))
        assert all(v == 0 for v in ra.matvec(P, grad))


@settings(max_examples=30)
@given(conservative_games(), st.data())
def test_poisson_identity_random(case, data):
    g, A0, lam = case
    fes = formal_equilibria(g)
    if fes is None:
        return
    sd = SkewDecomposition(ra.mat(A0), lam)
    hs = hamiltonian_spec(g, fes.particular, sd)
    x = data.draw(interior_points(g.groups))
    P = poisson_field_at(g, sd, x)
    assert ra.is_skew(P)
    assert ra.matvec(P, hamiltonian_gradient(hs, x)) == vector_field(g, x)


def test_casimir_constant_along_flow(fish, cons):
    _, _, cas = cons
    x0 = ra.vec(["1/10", "1/5", "3/10", "1/5", "1/5", "1/3", "2/3"])
    tr = integrate(fish, x0, 20.0, casimirs=cas)
    assert tr.drift()["casimir"] < 1e-8
