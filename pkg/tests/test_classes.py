import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from growthlab import classes, fnkit, verify
from growthlab.ade import AlgebraicODE
from growthlab.classes import (RadialWeight, SmoothIncreasing, UnsupportedEquationError,
                               coefficient_condition, dirichlet_norm, mobius, normal_norm, omega_star,
                               phi_normal_norm, ubc_norm, yamashita_gap)
from growthlab.fnkit import DiscDomainError
from growthlab.grid import DiscGrid

from oracles import omega_star_const, radial_dirichlet

z = fnkit.identity()
GRID = DiscGrid()
SMALL = DiscGrid(rings=10)
CONST = fnkit.const(0.7 + 0.1j)


# -- weights -------------------------------------------------------------------------------------

def test_weight_builders():
    assert RadialWeight.constant(2.0).l1_norm == pytest.approx(2.0)
    assert RadialWeight.power(-0.5).l1_norm == pytest.approx(2.0, rel=1e-8)
    assert RadialWeight.standard(1.0).l1_norm == pytest.approx(2 / 3, rel=1e-10)


@pytest.mark.parametrize("fn", [lambda r: -r, lambda r: 1 / (1 - r), lambda r: (1 - r) ** -1.5])
def test_weight_validation(fn):
    with pytest.raises(ValueError):
        RadialWeight(fn)


def test_weight_builder_ranges():
    with pytest.raises(ValueError):
        RadialWeight.power(-1.0)
    with pytest.raises(ValueError):
        RadialWeight.standard(-1.2)


def test_omega_star_examples():
    one = RadialWeight.constant(1.0)
    assert omega_star(one, 0.5) == pytest.approx(0.159074, abs=1e-6)
    assert omega_star(one, 0.9) == pytest.approx(0.005180, abs=1e-6)
    assert omega_star(one, 1 - 1e-9) < 1e-17


def test_omega_star_closed_form_20_radii():
    rs = np.linspace(0.02, 0.98, 20)
    got = omega_star(RadialWeight.constant(1.0), rs)
    want = np.array([omega_star_const(r) for r in rs])
    assert np.max(np.abs(got - want)) < 1e-8


def test_omega_star_decreasing():
    rs = np.linspace(0.05, 0.999, 40)
    vals = omega_star(RadialWeight.power(-0.5), rs)
    assert np.all(np.diff(vals) < 0)


@pytest.mark.parametrize("r", [0.0, 1.0, -0.2, 1.3])
def test_omega_star_domain(r):
    with pytest.raises(DiscDomainError):
        omega_star(RadialWeight.constant(1.0), r)


def test_smooth_increasing_default_diagnostics():
    d = SmoothIncreasing.default().diagnostics()
    assert d["positive"] and d["increasing"] and d["phi_times_gap_increasing"]
    dev = d["ratio_deviation"]
    assert dev[12] < dev[3]


# -- normal norms --------------------------------------------------------------------------------

def test_normal_norm_identity():
    res = normal_norm(z, 1.0, GRID)
    assert res.value == pytest.approx(1.0, abs=1e-15)
    assert res.argmax == 0


def test_normal_norm_constant():
    assert normal_norm(CONST, 1.0, SMALL).value == 0


def test_normal_norm_fp_flat_tail():
    res = normal_norm(verify.fp(0.5), 0.5, GRID)
    assert math.isfinite(res.value) and res.trend == "flat" and res.bounded


def test_normal_norm_flags_growth():
    # f_p with p=0.5 is not 0.25-normal: the tail grows like (1-r)^(-1/4)
    assert normal_norm(verify.fp(0.5), 0.25, GRID).trend == "growing"


def test_phi_normal_examples():
    assert phi_normal_norm(CONST, SmoothIncreasing.default(), SMALL).value == 0
    phi = SmoothIncreasing(lambda r: (1 - r) ** -1.5)
    res = phi_normal_norm(z, phi, GRID)
    assert res.value == pytest.approx(1.0) and res.argmax == 0
    half = SmoothIncreasing(lambda r: (1 - r) ** -0.5)
    assert phi_normal_norm(verify.fp(0.5), half, GRID).bounded


@pytest.mark.parametrize("label,f", verify.rational_catalog())
def test_normal_norm_rotation_invariance(label, f):
    def rotated(theta):
        return normal_norm(fnkit.Compose(f, fnkit.poly(0, np.exp(1j * theta))), 1.0, GRID).value

    a = normal_norm(f, 1.0, GRID).value
    # quarter turns map the sup nodes onto themselves; other angles only up to sampling error
    assert rotated(np.pi / 2) == pytest.approx(a, rel=1e-12)
    assert rotated(0.7) == pytest.approx(a, rel=0.02)


# -- Dirichlet-type integrals -------------------------------------------------------------------

def test_dirichlet_constant_is_zero():
    assert dirichlet_norm(CONST, SMALL, alpha=1.0).value == 0


def test_dirichlet_identity_alpha_one():
    # int (1-|z|^2)/(1+|z|^2)^2 dA = int_0^1 (1-u)/(1+u)^2 du = 1 - ln 2
    val = dirichlet_norm(z, GRID, alpha=1.0).value
    assert val == pytest.approx(1 - math.log(2), abs=1e-10)
    oracle = radial_dirichlet(lambda r: 1 / (1 + r * r), lambda r: 1 - r * r)
    assert val == pytest.approx(oracle, abs=1e-10)


def test_dirichlet_fp_alpha_one_converges():
    res = dirichlet_norm(verify.fp(0.5), GRID, alpha=1.0)
    assert res.trend == "converging"


def test_dirichlet_omega_star_matches_radial_oracle():
    one = RadialWeight.constant(1.0)
    val = dirichlet_norm(z, GRID, omega=one).value
    oracle = radial_dirichlet(lambda r: 1 / (1 + r * r), omega_star_const)
    assert val == pytest.approx(oracle, rel=1e-8)


def test_dirichlet_needs_one_weight():
    with pytest.raises(ValueError):
        classes.dirichlet_integral(z, SMALL)


# -- Mobius and UBC ------------------------------------------------------------------------------

def test_mobius_examples():
    assert mobius(0, 0.3 + 0.1j) == -(0.3 + 0.1j)
    assert mobius(0.4j, 0.4j) == 0
    assert mobius(0.5, 0) == 0.5
    with pytest.raises(DiscDomainError):
        mobius(1.0, 0)


@settings(max_examples=100, deadline=None)
@given(a=st.complex_numbers(max_magnitude=0.95), w=st.complex_numbers(max_magnitude=0.95))
def test_mobius_is_involution(a, w):
    assert mobius(a, mobius(a, w)) == pytest.approx(w, abs=1e-9)


def test_ubc_constant_is_zero():
    assert ubc_norm(CONST, [0, 0.5], SMALL).value == 0


def test_ubc_identity_at_origin():
    oracle = radial_dirichlet(lambda r: 1 / (1 + r * r), lambda r: -math.log(r))
    assert ubc_norm(z, [0j], GRID).value == pytest.approx(oracle, rel=1e-9)


def test_ubc_off_centre_vs_direct_quadrature():
    # direct polar quadrature of f^#^2 log(1/|phi_a|) in z (singular at a, resolved by quad)
    from scipy import integrate
    a, f = 0.5, 1 / (2 - z)

    def inner(r):
        g = lambda t: (fnkit.spherical(f, r * np.exp(1j * t)) ** 2
                       * -np.log(abs(mobius(a, r * np.exp(1j * t)))))
        return integrate.quad(g, 0, 2 * np.pi, points=[0.0], limit=200)[0] * r / np.pi

    direct = integrate.quad(inner, 0, 1 - 1e-12, points=[a], limit=200)[0]
    assert ubc_norm(f, [a], GRID).value == pytest.approx(direct, rel=1e-6)


@pytest.mark.parametrize("label,f", verify.rational_catalog())
def test_kernel_comparison_at_origin(label, f):
    # 1 - t^2 <= 2 log(1/t), so the square kernel is dominated by twice the Green kernel
    green = ubc_norm(f, [0j], SMALL, "green").value
    square = ubc_norm(f, [0j], SMALL, "one-minus-square").value
    assert square <= 2 * green


def test_kernel_comparison_identity():
    # for f = z the Green value itself dominates: 1 - ln 2 < int 2r log(1/r)/(1+r^2)^2 dr
    assert ubc_norm(z, [0j], GRID, "one-minus-square").value < ubc_norm(z, [0j], GRID).value


@settings(max_examples=50, deadline=None)
@given(a=st.complex_numbers(max_magnitude=0.95))
def test_kernel_bracketing_on_nodes(a):
    zs, _ = SMALL.sup_nodes
    t = np.abs(mobius(a, zs))
    t = t[t > 1e-100]
    lower, mid, upper = 1 - t * t, -2 * np.log(t), (1 - t * t) / (t * t)
    assert np.all(lower <= mid * (1 + 1e-15)) and np.all(mid <= upper * (1 + 1e-15))


# -- Yamashita functionals -----------------------------------------------------------------------

def test_yamashita_constant():
    assert yamashita_gap(CONST, 2, 0.9, SMALL) == (0.0, 0.0)


def test_yamashita_chain_matches_direct():
    for f in (z, 1 / (1.5 - z), verify.weierstrass_degenerate(2.0)[1]):
        for m in (2, 3):
            A, B = yamashita_gap(f, m, 0.99, GRID)
            _, Bc = yamashita_gap(f, m, 0.99, GRID, via="chain")
            assert math.isfinite(A) and math.isfinite(B)
            assert Bc == pytest.approx(B, rel=1e-9)


def test_yamashita_family_bounded_and_stable():
    ratios = []
    for c in (1.1, 1.5, 2.0):
        f = 1 / (c - z)
        coarse = verify.yamashita_ratio(f, 2, 0.99, GRID)
        fine = verify.yamashita_ratio(f, 2, 0.99, GRID.refined())
        assert abs(fine - coarse) <= 0.10 * fine
        ratios.append(fine)
    assert max(ratios) < 10


def test_yamashita_domain():
    with pytest.raises(DiscDomainError):
        yamashita_gap(z, 2, 1.0, SMALL)
    with pytest.raises(ValueError):
        yamashita_gap(z, 1, 0.5, SMALL)


# -- coefficient conditions ----------------------------------------------------------------------

def test_hinf_examples():
    ok = AlgebraicODE.from_rows(1, 1, [(1, (2,), 1 / (1 - z))])
    bad = AlgebraicODE.from_rows(1, 1, [(1, (1,), (1 - z) ** -2)])
    rep_ok = coefficient_condition(ok, "hinf", GRID)
    assert rep_ok["verdict"] == 1 and rep_ok.conclusions == ["N"]
    assert rep_ok["hinf[k=1 j=(2)]"] <= 1.0
    rep_bad = coefficient_condition(bad, "hinf", GRID)
    assert rep_bad["verdict"] == 0 and rep_bad.conclusions == []


@pytest.mark.parametrize("kind", sorted(classes.CONCLUSIONS))
def test_constant_coefficients_pass(kind):
    eq, _ = verify.riccati(2.0)
    rep = coefficient_condition(eq, kind, SMALL)
    assert rep["verdict"] == 1
    assert rep.conclusions == [classes.CONCLUSIONS[kind]]


def test_coefficient_condition_first_order_only():
    eq, _ = verify.tangent_second_order()
    with pytest.raises(UnsupportedEquationError):
        coefficient_condition(eq, "hinf", SMALL)
