from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from growthlab import ade, fnkit, verify
from growthlab.ade import (AlgebraicODE, HypothesisError, Index, NotASolutionError, admissible,
                           bound_lhs, bound_rhs, eval_P, minimal_M, proof_I, residual, theorem1_scan)
from growthlab.fnkit import PoleError
from growthlab.grid import DiscGrid

from oracles import random_disc_points

z = fnkit.identity()
SMALL = DiscGrid(rings=10)

RICCATI, F_RICCATI = verify.riccati(2.0)
WEIER, F_WEIER = verify.weierstrass_degenerate(2.0)
TAN2, F_TAN2 = verify.tangent_second_order()


# -- structure -----------------------------------------------------------------------------------

def test_index_validation():
    with pytest.raises(ValueError):
        AlgebraicODE(1, 1, {Index(2, (1,)): fnkit.const(1)})
    with pytest.raises(ValueError):
        AlgebraicODE(2, 1, {Index(1, (1,)): fnkit.const(1)})
    with pytest.raises(ValueError):
        AlgebraicODE(1, 1, {Index(1, (3,)): fnkit.const(1)}, caps=((2,),))


def test_caps_derived_from_coefficients():
    assert WEIER.caps == ((0,), (3,))
    assert TAN2.caps == ((3, 0),)


def test_from_rows_adds_repeated_indices():
    eq = AlgebraicODE.from_rows(1, 1, [(1, (2,), -1), (1, (2,), 0.5)])
    assert eval_P(eq, 1, z, 0.5) == pytest.approx(-0.5 * 0.25)


def test_coefficients_analytic_diagnostic():
    assert RICCATI.analytic_on(SMALL)
    bad = AlgebraicODE.from_rows(1, 1, [(1, (2,), 1 / (0.5 - z))])
    assert not bad.analytic_on(DiscGrid(rings=4, min_angular=8, angular_factor=1))


# -- eval_P and residual -------------------------------------------------------------------------

def test_eval_P_riccati():
    assert eval_P(RICCATI, 1, F_RICCATI, 0.0) == pytest.approx(-0.25, abs=1e-15)


def test_eval_P_weierstrass():
    # f(0) = 1/4, so -4 f(0)^3 = -1/16
    assert eval_P(WEIER, 2, F_WEIER, 0.0) == pytest.approx(-0.0625, abs=1e-15)


def test_eval_P_empty_row():
    assert eval_P(WEIER, 1, F_WEIER, 0.3) == 0


def test_eval_P_pole():
    eq, f = verify.riccati(0.5)
    with pytest.raises(PoleError):
        eval_P(eq, 1, f, 0.5)


def test_residual_examples():
    assert abs(residual(RICCATI, F_RICCATI, 0.3)) < 1e-12
    assert residual(RICCATI, z, 0.0) == pytest.approx(1.0)
    pts = random_disc_points(np.random.default_rng(3), 20)
    assert np.max(np.abs(residual(WEIER, F_WEIER, pts))) < 1e-11


def test_residual_of_zero_equation_is_leading_power():
    f = fnkit.scaled_tan(0.6)
    pts = random_disc_points(np.random.default_rng(4), 20)
    for N, n in ((1, 1), (1, 3), (2, 2)):
        eq = AlgebraicODE(N, n, {})
        assert np.array_equal(residual(eq, f, pts), fnkit.derivative(f, N)(pts) ** n)


@pytest.mark.parametrize("factory", [lambda: verify.riccati(1 + 1j), lambda: verify.tangent(0.3),
                                     lambda: verify.weierstrass_degenerate(1.5 + 0.5j),
                                     verify.tangent_second_order])
def test_catalog_solutions_solve_their_equations(factory):
    eq, f = factory()
    assert ade.residual_stats(eq, f, SMALL)["max_scaled_residual"] < ade.RESIDUAL_RTOL


# -- hypotheses ----------------------------------------------------------------------------------

def test_minimal_M_examples():
    assert minimal_M(RICCATI) == (0,)
    assert minimal_M(TAN2) == (1, 0)
    assert minimal_M(WEIER) == (0,)


def _below(eq, M):
    for l in range(len(M)):
        if M[l] > 0:
            yield tuple(m - (i == l) for i, m in enumerate(M))


@pytest.mark.parametrize("eq", [RICCATI, TAN2, WEIER])
def test_minimal_M_is_minimal(eq):
    M = minimal_M(eq)
    assert admissible(eq, M)
    for lower in _below(eq, M):
        assert not admissible(eq, lower)


caps_tables = st.integers(1, 3).flatmap(lambda N: st.integers(1, 4).flatmap(
    lambda n: st.lists(st.lists(st.integers(0, 9), min_size=N, max_size=N), min_size=n, max_size=n)))


@settings(max_examples=200, deadline=None)
@given(caps=caps_tables)
def test_hypothesis_set_monotone_and_sharp(caps):
    n, N = len(caps), len(caps[0])
    eq = AlgebraicODE(N, n, {}, caps=caps)
    M = minimal_M(eq)
    thresholds = [max(Fraction(caps[k][l], k + 1) for k in range(n)) - (2 if l == 0 else 1)
                  for l in range(N)]
    assert all(m >= t for m, t in zip(M, thresholds))
    assert admissible(eq, M)
    for l in range(N):
        up = tuple(m + (i == l) for i, m in enumerate(M))
        assert admissible(eq, up)
    for lower in _below(eq, M):
        assert not admissible(eq, lower)


# -- bounds --------------------------------------------------------------------------------------

def test_bound_rhs_examples():
    pts = random_disc_points(np.random.default_rng(5), 10)
    assert np.allclose(bound_rhs(WEIER, pts), 2.0)
    assert np.allclose(bound_rhs(RICCATI, pts), 1.0)
    eq, _ = verify.tangent(0.7)
    assert np.allclose(bound_rhs(eq, pts), 1.4)


def test_bound_lhs_examples():
    assert bound_lhs(F_RICCATI, (0,), 0.0) == pytest.approx(0.2)
    assert bound_lhs(z, (0,), 0.0) == pytest.approx(1.0)
    assert bound_lhs(F_TAN2, (1, 0), 0.0) == 0.0


def test_proof_I_examples():
    idx = Index(1, (2,))
    assert proof_I(RICCATI, idx, F_RICCATI, (0,), 0.0) == pytest.approx(0.2)
    assert proof_I(RICCATI, idx, z, (0,), 0.0) == 0.0
    assert proof_I(TAN2, Index(1, (3, 0)), F_TAN2, (1, 0), 0.0) == 0.0


@pytest.mark.parametrize("factory", [lambda: verify.riccati(1.1), lambda: verify.tangent(1.0),
                                     lambda: verify.weierstrass_degenerate(2.0),
                                     verify.tangent_second_order])
def test_proof_ceiling_exact(factory):
    eq, f = factory()
    M = minimal_M(eq)
    worst, ceiling = verify.proof_sweep(eq, f, M, SMALL)
    assert worst <= ceiling


def test_proof_I_large_values_do_not_overflow():
    f = 1e200 * z + 1e-3
    val = proof_I(RICCATI, Index(1, (2,)), f, (0,), np.array([0.5]))
    assert np.all(np.isfinite(val)) and val[0] <= 1


# -- scan ----------------------------------------------------------------------------------------

def test_scan_riccati():
    rep = theorem1_scan(RICCATI, F_RICCATI, (0,), SMALL)
    assert rep["sup_ratio"] == pytest.approx(0.5, abs=0.02)
    assert rep.quantities["sup_ratio"].argmax.real > 0.99
    assert rep.counts["low_rhs_violations"] == 0


def test_scan_tangent_bound():
    eq, f = verify.tangent(0.7)
    assert theorem1_scan(eq, f, (0,), SMALL)["sup_ratio"] <= 0.5 + 1e-12


def test_scan_refuses_non_solution():
    with pytest.raises(NotASolutionError) as info:
        theorem1_scan(RICCATI, z, (0,), SMALL)
    assert info.value.stats["max_scaled_residual"] > 0.5


def test_scan_checks_hypotheses():
    with pytest.raises(HypothesisError):
        theorem1_scan(TAN2, F_TAN2, (0, 0), SMALL)


def test_scan_parallel_matches_serial():
    a = theorem1_scan(WEIER, F_WEIER, (0,), SMALL, workers=1)
    b = theorem1_scan(WEIER, F_WEIER, (0,), SMALL, workers=4)
    assert a["sup_ratio"] == b["sup_ratio"]
    assert a.quantities["sup_ratio"].argmax == b.quantities["sup_ratio"].argmax
    assert a.counts == b.counts


def test_scan_argmax_is_first_maximal_node():
    eq, f = verify.tangent(1.0)
    rep = theorem1_scan(eq, f, (0,), SMALL, workers=3)
    zs, ratio = rep.fields["ratio"]
    first = int(np.flatnonzero(ratio == np.nanmax(ratio))[0])
    assert rep.quantities["sup_ratio"].argmax == zs[first]


def test_scan_counts_low_rhs_nodes():
    # constant f solves f' + a f^2 = 0 for any a; a tiny a puts every node below the floor
    eq = AlgebraicODE.from_rows(1, 1, [(1, (2,), fnkit.poly(0, 0, 0, 1e-12))])
    f = fnkit.const(0.0)
    rep = theorem1_scan(eq, f, (0,), SMALL)
    assert rep.counts["low_rhs_nodes"] == rep.counts["nodes"]
    assert rep.counts["low_rhs_violations"] == 0
