import json
import math

import numpy as np
import pytest

from growthlab import classes, fnkit, verify
from growthlab.ade import AlgebraicODE
from growthlab.grid import DiscGrid
from growthlab.verify import InsufficientDataError, Scenario

z = fnkit.identity()
GRID = DiscGrid()
SMALL = DiscGrid(rings=10)


# -- scenarios -----------------------------------------------------------------------------------

def test_builtin_names_unique():
    names = [s.name for s in verify.builtin_scenarios()]
    assert len(names) == len(set(names)) == 17


@pytest.mark.parametrize("s", verify.builtin_scenarios(), ids=lambda s: s.name)
def test_builtin_scenario_passes(s):
    rep = verify.run_scenario(s, GRID)
    assert rep.passed, rep.summary()


def test_riccati_closed_form_and_boundary_argmax():
    s = next(s for s in verify.builtin_scenarios() if s.name == "riccati-c1.5")
    rep = verify.run_scenario(s, GRID)
    assert rep["sup_ratio"] == pytest.approx(0.8, abs=0.02)
    assert abs(rep.quantities["sup_ratio"].argmax) > 0.99


def test_non_solution_fails_at_gate():
    eq, _ = verify.riccati(2.0)
    rep = verify.run_scenario(Scenario("bad", "theorem1", f=z, eq=eq, M=(0,)), SMALL)
    assert not rep.passed and rep.status == "failed"
    gate = [o for o in rep.outcomes if o.expectation.quantity == "max_scaled_residual"]
    assert gate and not gate[0].passed


def test_scenario_overrides_grid():
    eq, f = verify.riccati(2.0)
    rep = verify.run_scenario(Scenario("r", "theorem1", f=f, eq=eq, M=(0,), rings=8), GRID)
    assert rep.grid["rings"] == 8


def test_unknown_kind():
    with pytest.raises(ValueError):
        verify.run_scenario(Scenario("x", "nope"), SMALL)


def test_runs_are_deterministic():
    s = verify.builtin_scenarios()[0]
    a = verify.run_scenario(s, SMALL).to_dict()
    b = verify.run_scenario(s, SMALL).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


# -- boundary exponents -----------------------------------------------------------------------

@pytest.mark.parametrize("p", [0.2, 0.5, 0.8])
def test_boundary_exponent_fp(p):
    assert verify.estimate_boundary_exponent(verify.fp(p)) == pytest.approx(p - 1, abs=0.05)


def test_boundary_exponent_bounded_function():
    assert verify.estimate_boundary_exponent(1 / (2 - z)) == pytest.approx(0.0, abs=1e-3)


def test_boundary_exponent_input_checks():
    with pytest.raises(InsufficientDataError):
        verify.estimate_boundary_exponent(z, radii=[0.9, 0.99, 0.999])
    with pytest.raises(ValueError):
        verify.estimate_boundary_exponent(z, radii=[0.9, 0.8, 0.99, 0.999])
    with pytest.raises(ValueError):
        verify.estimate_boundary_exponent(z, approach=0.5)


# -- integrated comparisons ---------------------------------------------------------------------

def test_theorem2_suite_constant():
    rep = verify.run_theorem2_suite(fnkit.const(0.3), 2, SMALL)
    assert rep.passed
    for q in ("dirichlet1_ratio", "omega_ratio", "ubc_ratio", "chain_max_rel_residual"):
        assert rep[q] == 0


def test_theorem2_suite_rational():
    rep = verify.run_theorem2_suite(1 / (2 - z), 3, GRID)
    assert rep.passed
    assert rep["chain_max_rel_residual"] <= verify.CHAIN_RTOL
    for q in ("dirichlet1_ratio", "omega_ratio", "ubc_ratio"):
        assert 0 < rep[q] < 10


def test_family_sweep_stable():
    fams = [(f"1/({c}-z)", 1 / (c - z)) for c in (1.1, 2.0)]
    rep = verify.theorem2_family_sweep(fams, (2, 3), GRID)
    assert rep.passed and math.isfinite(rep["max_ratio"])


@pytest.mark.parametrize("f", [z, 1 / (2 - z), verify.fp(0.5)], ids=["z", "rational", "fp"])
def test_fubini(f):
    double, direct = verify.fubini_check(f, GRID)
    assert double == pytest.approx(direct, rel=1e-4)


# -- beta and the counterexample ----------------------------------------------------------------

@pytest.mark.parametrize("alpha,m", [(0.5, 2), (0.3, 3)])
def test_beta_explorer(alpha, m):
    rep = verify.beta_explorer(alpha, m)
    assert rep.passed
    assert rep["family_bound"] == pytest.approx(1 - (1 - alpha) / m, abs=1e-12)


def test_beta_explorer_validates():
    with pytest.raises(ValueError):
        verify.beta_explorer(1.2, 2)
    with pytest.raises(ValueError):
        verify.beta_explorer(0.5, 1)


def test_counterexample_report_shape():
    rep = verify.dirichlet_counterexample(-0.5, 2, DiscGrid(rings=8), steps=2)
    for J in (8, 9, 10):
        assert f"f_integral_J{J}" in rep.quantities and f"fm_integral_J{J}" in rep.quantities
    assert "contains" in rep.notes[0]
    assert len(rep.outcomes) == 2


def test_counterexample_outside_interval_has_no_verdict():
    rep = verify.dirichlet_counterexample(-1.0, 2, DiscGrid(rings=8), p=0.6, steps=1)
    assert rep.outcomes == [] and "excludes" in rep.notes[0]


def test_counterexample_needs_negative_alpha():
    with pytest.raises(ValueError):
        verify.dirichlet_counterexample(0.5, 2, SMALL)


def test_fp_integral_grows_for_divergent_case():
    rep = verify.dirichlet_counterexample(-0.5, 2, DiscGrid(rings=8), p=0.2, steps=2)
    vals = [rep[f"f_integral_J{J}"] for J in (8, 9, 10)]
    assert np.all(np.diff(vals) > 0)


# -- classification -------------------------------------------------------------------------------

def test_classify_collects_conclusions():
    eq, _ = verify.riccati(2.0)
    rep = verify.classify(eq, ("hinf", "bergman"), SMALL)
    assert rep["verdict:hinf"] == 1 and rep["verdict:bergman"] == 1
    assert rep.conclusions == [classes.CONCLUSIONS["hinf"], classes.CONCLUSIONS["bergman"]]


def test_classify_rejects_higher_order():
    eq, _ = verify.tangent_second_order()
    with pytest.raises(classes.UnsupportedEquationError):
        verify.classify(eq, ("hinf",), SMALL)


def test_classify_failing_coefficient():
    eq = AlgebraicODE.from_rows(1, 1, [(1, (1,), (1 - z) ** -2)])
    rep = verify.classify(eq, ("hinf",), GRID)
    assert rep["verdict:hinf"] == 0 and rep.conclusions == []
