"""Scenario catalog and the harnesses that check the growth estimates on it."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import ade, classes, fnkit
from .ade import AlgebraicODE, NotASolutionError
from .classes import RadialWeight
from .fnkit import MeroFn, power_chain_factor, power_fn, spherical
from .grid import DiscGrid
from .report import Expectation, Report

REFINE_RTOL = 0.05
CHAIN_RTOL = 1e-10


class InsufficientDataError(ValueError):
    pass


@dataclass
class Scenario:
    """One catalog entry.

    ``kind`` selects the harness: ``theorem1`` (equation + solution + M),
    ``subject`` (a function studied for boundary growth, no equation) or
    ``classify`` (an equation whose coefficients are classified).
    """

    name: str
    kind: str
    f: MeroFn | None = None
    eq: AlgebraicODE | None = None
    M: tuple | None = None
    p: float | None = None
    powers: tuple = (2, 3)
    kinds: tuple = ()
    rings: int | None = None
    angular_factor: int | None = None
    expectations: list = field(default_factory=list)
    provenance: str = ""

    def grid(self, default: DiscGrid) -> DiscGrid:
        kw = {}
        if self.rings is not None:
            kw["rings"] = self.rings
        if self.angular_factor is not None:
            kw["angular_factor"] = self.angular_factor
        return DiscGrid(**{**default.metadata(), **kw}) if kw else default


# -- catalog ------------------------------------------------------------------------------

def riccati(c: complex) -> tuple:
    """``f' - f^2 = 0`` solved by ``1/(c - z)``."""
    z = fnkit.identity()
    return AlgebraicODE.from_rows(1, 1, [(1, (2,), -1.0)]), 1 / (c - z)


def tangent(kappa: float) -> tuple:
    """``f' - kappa - kappa f^2 = 0`` solved by ``tan(kappa z)``."""
    eq = AlgebraicODE.from_rows(1, 1, [(1, (0,), -kappa), (1, (2,), -kappa)])
    return eq, fnkit.scaled_tan(kappa)


def weierstrass_degenerate(c: complex) -> tuple:
    """``(f')^2 - 4 f^3 = 0`` solved by ``(z - c)^-2``."""
    z = fnkit.identity()
    return AlgebraicODE.from_rows(1, 2, [(2, (3,), -4.0)]), (z - c) ** -2


def tangent_second_order() -> tuple:
    """``f'' - 2f - 2f^3 = 0`` solved by ``tan z``."""
    eq = AlgebraicODE.from_rows(2, 1, [(1, (1, 0), -2.0), (1, (3, 0), -2.0)])
    return eq, fnkit.scaled_tan(1.0)


def fp(p: float) -> MeroFn:
    """``(1 - z)^(-p)``."""
    return fnkit.BranchPower(float(p))


def _label(c: complex) -> str:
    c = complex(c)
    if c.imag == 0:
        return f"{c.real:g}"
    return f"{c.real:g}{c.imag:+g}i"


def _weierstrass_sup_ratio(c: complex) -> float:
    # f^# = 2t/(1+t^4) with t = |z - c|, t ranging over [|c|-1, |c|+1]; rhs = 2
    lo, hi = abs(c) - 1.0, abs(c) + 1.0
    t_star = 3.0**-0.25
    t = min(max(t_star, lo), hi)
    return t / (1.0 + t**4)


RATIONAL_CATALOG_C = (1.1, 1.5, 2.0, 1 + 1j)
WEIERSTRASS_C = (2.0, 1.5 + 0.5j)


def rational_catalog() -> list:
    """Rational functions used by the identity and Yamashita checks."""
    z = fnkit.identity()
    out = [("z", z), ("z^2+1", z * z + 1)]
    out += [(f"1/({_label(c)}-z)", riccati(c)[1]) for c in RATIONAL_CATALOG_C]
    out += [(f"(z-({_label(c)}))^-2", weierstrass_degenerate(c)[1]) for c in WEIERSTRASS_C]
    out.append(("mobius(0.5)", fnkit.mobius_fn(0.5)))
    return out


def builtin_scenarios() -> list:
    out = []
    for c in RATIONAL_CATALOG_C:
        eq, f = riccati(c)
        exact = 1.0 / (1.0 + (abs(c) - 1.0) ** 2)
        out.append(Scenario(
            f"riccati-c{_label(c)}", "theorem1", f=f, eq=eq, M=(0,),
            expectations=[Expectation("sup_ratio", "approx", exact, 0.02,
                                      "closed form 1/(1+(|c|-1)^2), boundary limit")]))
    for kappa in (0.3, 0.7, 1.0):
        eq, f = tangent(kappa)
        out.append(Scenario(
            f"tangent-k{kappa:g}", "theorem1", f=f, eq=eq, M=(0,),
            expectations=[Expectation("sup_ratio", "le", 0.5, 0.01,
                                      "|1+f^2| <= 1+|f|^2 gives f^# <= kappa, rhs 2 kappa")]))
    for c in WEIERSTRASS_C:
        eq, f = weierstrass_degenerate(c)
        out.append(Scenario(
            f"weierstrass-c{_label(c)}", "theorem1", f=f, eq=eq, M=(0,),
            expectations=[Expectation("sup_ratio", "approx", _weierstrass_sup_ratio(c), 0.02,
                                      "closed form max of t/(1+t^4) over |z-c|")]))
    eq, f = tangent_second_order()
    out.append(Scenario(
        "tangent-order2", "theorem1", f=f, eq=eq, M=(1, 0),
        expectations=[Expectation("sup_ratio", "approx", 0.40144, 0.02,
                                  "pinned from first convergent run (J=14)")]))
    for p in (0.2, 0.3, 0.5, 0.8):
        exps = [Expectation("boundary_exponent", "approx", p - 1.0, 0.05, "f_p^# ~ |1-z|^(p-1)")]
        exps += [Expectation(f"boundary_exponent_m{m}", "approx", m * p - 1.0, 0.05,
                             "(f_p^m)^# ~ |1-z|^(mp-1)") for m in (2, 3)]
        out.append(Scenario(f"fp-{p:g}", "subject", f=fp(p), p=p, expectations=exps))

    z = fnkit.identity()
    all_kinds = ("hinf", "hinf-phi", "bergman", "ubc-type")
    eq, _ = riccati(2.0)
    out.append(Scenario(
        "classify-riccati-constant", "classify", eq=eq, kinds=all_kinds,
        expectations=[Expectation(f"verdict:{k}", "approx", 1.0, 0.0, "constant coefficients")
                      for k in all_kinds]))
    out.append(Scenario(
        "classify-hinf-pass", "classify",
        eq=AlgebraicODE.from_rows(1, 1, [(1, (2,), 1 / (1 - z))]), kinds=("hinf",),
        expectations=[Expectation("verdict:hinf", "approx", 1.0, 0.0, "|1-z| >= 1-|z|")]))
    out.append(Scenario(
        "classify-hinf-fail", "classify",
        eq=AlgebraicODE.from_rows(1, 1, [(1, (1,), (1 - z) ** -2)]), kinds=("hinf",),
        expectations=[Expectation("verdict:hinf", "approx", 0.0, 0.0, "radial divergence along z=r")]))
    return out


# -- pointwise bound -------------------------------------------------------------------------------

def proof_sweep(eq: AlgebraicODE, f: MeroFn, M, grid: DiscGrid) -> tuple:
    """Max of the proof functional over all stored indices and sup nodes, and its ceiling."""
    z, _ = grid.sup_nodes
    fs = [fnkit.derivative(f, l) for l in range(eq.order)]
    ok = np.all([np.isfinite(g(z)) for g in fs], axis=0)
    zo = z[ok]
    worst = 0.0
    for idx in eq.coeffs:
        worst = max(worst, float(np.max(ade.proof_I(eq, idx, f, M, zo))))
    return worst, ade.proof_ceiling(M)


_GATE = Expectation("max_scaled_residual", "le", ade.RESIDUAL_RTOL, 0.0, "residual gate")


def run_theorem1(s: Scenario, grid: DiscGrid, workers: int = 1) -> Report:
    grid = s.grid(grid)
    try:
        rep = ade.theorem1_scan(s.eq, s.f, s.M, grid, workers=workers, name=s.name)
        finer = ade.theorem1_scan(s.eq, s.f, s.M, grid.refined(), workers=workers, name=s.name)
    except NotASolutionError as exc:
        rep = Report(s.name, grid=grid.metadata())
        for k, v in exc.stats.items():
            if isinstance(v, float):
                rep.add(k, v)
            else:
                rep.counts[k] = v
        rep.fail(str(exc))
        return rep.check([_GATE] + list(s.expectations))
    coarse, fine = rep["sup_ratio"], finer["sup_ratio"]
    rep.add("sup_ratio_refined", fine, argmax=finer.quantities["sup_ratio"].argmax)
    rep.add("refinement_change", abs(fine - coarse) / abs(fine))
    worst, ceiling = proof_sweep(s.eq, s.f, s.M, grid)
    rep.add("proof_I_max", worst)
    rep.add("proof_I_ceiling", ceiling)
    rep.add("proof_I_excess", worst - ceiling)
    rep.add("low_rhs_violations", rep.counts["low_rhs_violations"])
    defaults = [
        _GATE,
        Expectation("refinement_change", "le", REFINE_RTOL, 0.0, "sup stable under refinement"),
        Expectation("proof_I_excess", "le", 0.0, 0.0, "proof functional ceiling, exact"),
        Expectation("low_rhs_violations", "le", 0.0, 0.0, "lhs vanishes where rhs does"),
    ]
    return rep.check(defaults + list(s.expectations))


# -- boundary exponents ------------------------------------------------------------------------

DEFAULT_EXPONENT_RADII = tuple(1.0 - 10.0**-k for k in range(3, 11))


def estimate_boundary_exponent(f: MeroFn, approach: complex = 1.0, radii=None) -> float:
    """Least-squares slope of ``log f^#(r*approach)`` against ``log(1 - r)``."""
    radii = np.asarray(DEFAULT_EXPONENT_RADII if radii is None else radii, dtype=float)
    if radii.size < 4:
        raise InsufficientDataError("need at least four radii")
    if np.any(np.diff(radii) <= 0) or radii[0] <= 0 or radii[-1] >= 1:
        raise ValueError("radii must increase strictly inside (0, 1)")
    zeta = complex(approach)
    if not math.isclose(abs(zeta), 1.0, rel_tol=1e-12):
        raise ValueError("approach point must lie on the unit circle")
    vals = spherical(f, radii * zeta)
    x = np.log(1.0 - radii)
    y = np.log(vals)
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def run_subject(s: Scenario, grid: DiscGrid) -> Report:
    grid = s.grid(grid)
    rep = Report(s.name, grid=grid.metadata())
    rep.add("boundary_exponent", estimate_boundary_exponent(s.f))
    for m in s.powers:
        rep.add(f"boundary_exponent_m{m}", estimate_boundary_exponent(power_fn(s.f, m)))
    if s.p is not None and 0 < s.p < 1:
        res = classes.normal_norm(s.f, 1.0 - s.p, grid)
        rep.add("normal_norm_1mp", res.value, argmax=res.argmax, note=f"trend {res.trend}")
    rep.add("chain_max_rel_residual", max(chain_identity_residual(s.f, m, grid) for m in s.powers))
    exps = list(s.expectations) + [Expectation("chain_max_rel_residual", "le", CHAIN_RTOL, 0.0,
                                               "power-chain identity")]
    return rep.check(exps)


# -- powers of f ----------------------------------------------------------------------------------------

def chain_identity_residual(f: MeroFn, m: int, points) -> float:
    """Max relative gap between ``(f^m)^#`` and ``factor(f) f^#`` at non-pole points."""
    z = points.sup_nodes[0] if isinstance(points, DiscGrid) else np.asarray(points, dtype=complex)
    v = f(z)
    z = z[np.isfinite(v)]
    direct = spherical(power_fn(f, m), z)
    chain = power_chain_factor(f(z), m) * spherical(f, z)
    scale = np.maximum(np.abs(direct), np.abs(chain))
    rel = np.where(scale > 0, np.abs(direct - chain) / np.where(scale > 0, scale, 1.0), 0.0)
    return float(rel.max()) if rel.size else 0.0


THEOREM2_A_SAMPLES = (0j, 0.5, -0.5, 0.5j, -0.5j, 0.9)


def run_theorem2_suite(f: MeroFn, m: int, grid: DiscGrid, *, a_samples=THEOREM2_A_SAMPLES,
                       name: str = "theorem2") -> Report:
    """Exact power-chain identity plus the three integrated comparisons for ``f`` vs ``f^m``."""
    rep = Report(name, grid=grid.metadata())
    fm = power_fn(f, m)
    rep.add("chain_max_rel_residual", chain_identity_residual(f, m, grid))

    A, B = classes.yamashita_gap(f, m, 1.0 - grid.resolution, grid)
    rep.add("dirichlet1_A", A)
    rep.add("dirichlet1_B", B)
    rep.add("dirichlet1_ratio", A / (B + 1.0))

    omega = RadialWeight.constant(1.0)
    Aw = classes.dirichlet_integral(f, grid, omega=omega)
    Bw = classes.dirichlet_integral(fm, grid, omega=omega)
    rep.add("omega_A", Aw)
    rep.add("omega_B", Bw)
    rep.add("omega_ratio", Aw / (Bw + omega.l1_norm))

    ua = classes.ubc_norm(f, a_samples, grid)
    ub = dict(classes.ubc_norm(fm, a_samples, grid).per_a)
    ratios = [(a, va / (ub[a] + 1.0)) for a, va in ua.per_a]
    a_worst, r_worst = max(ratios, key=lambda t: t[1])
    rep.add("ubc_A", ua.value, argmax=ua.argmax)
    rep.add("ubc_B", max(ub.values()))
    rep.add("ubc_ratio", r_worst, argmax=a_worst)
    rep.notes.append(f"m={m}; Dirichlet kernel log(1/|z|) at r = 1 - {grid.resolution:g}")
    return rep.check([Expectation("chain_max_rel_residual", "le", CHAIN_RTOL, 0.0, "power-chain identity")])


def yamashita_ratio(f: MeroFn, m: int, r: float, grid: DiscGrid) -> float:
    A, B = classes.yamashita_gap(f, m, r, grid)
    return A / (B + 1.0)


def theorem2_family_sweep(functions, powers, grid: DiscGrid, r: float = 0.99) -> Report:
    """A/(B+1) at radius ``r`` over a family, and its change under one refinement."""
    rep = Report("theorem2-family", grid=grid.metadata())
    worst_change, worst_ratio = 0.0, 0.0
    for label, f in functions:
        for m in powers:
            coarse = yamashita_ratio(f, m, r, grid)
            fine = yamashita_ratio(f, m, r, grid.refined())
            change = abs(fine - coarse) / fine if fine else 0.0
            rep.add(f"ratio[{label},m={m}]", fine)
            worst_change = max(worst_change, change)
            worst_ratio = max(worst_ratio, fine)
    rep.add("max_ratio", worst_ratio)
    rep.add("max_refinement_change", worst_change)
    return rep.check([Expectation("max_refinement_change", "le", 0.10, 0.0, "stable under refinement")])


def fubini_check(f: MeroFn, grid: DiscGrid, omega: RadialWeight | None = None,
                 inner: DiscGrid | None = None, outer_nodes: int = 48) -> tuple:
    """``(double, direct)``: the r-integrated log-kernel gap vs. the omega*-weighted integral.

    double = int_0^1 omega(r) [int_{D(0,r)} f^#^2 log(r/|z|) dA] r dr
    direct = int_D f^#^2 omega* dA
    """
    omega = omega or RadialWeight.constant(1.0)
    inner = inner or DiscGrid(rings=8, gauss=grid.gauss, angular_factor=grid.angular_factor)
    x, w = np.polynomial.legendre.leggauss(outer_nodes)
    rs, ws = 0.5 * (x + 1.0), 0.5 * w
    sq = classes.sharp_squared(f)
    inner_vals = np.array([inner.disc(r).integrate(sq, lambda s, r=r: np.log(r / s)) for r in rs])
    double = float(np.sum(ws * omega(rs) * rs * inner_vals))
    direct = classes.dirichlet_integral(f, grid, omega=omega)
    return double, direct


# -- beta explorer -----------------------------------------------------------------------------------

def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x))


def beta_explorer(alpha: float, m: int, p_grid=None, radii=None, slope_tol: float = 5e-3) -> Report:
    """Implied lower bound for beta_{alpha,m} from the family f_p.

    f_p is alpha'-normal for alpha' >= 1-p; f_p^m = f_{mp} is alpha-normal iff
    mp - 1 >= -alpha.  The family bound is max{1-p : mp - 1 >= -alpha}.
    """
    a, mm = _frac(alpha), int(m)
    if not 0 < a < 1 or mm < 2:
        raise ValueError("need 0 < alpha < 1 and m >= 2")
    threshold = (1 - a) / mm
    if p_grid is None:
        p_grid = [Fraction(i, 200) for i in range(1, 200)]
    cands = sorted({_frac(p) for p in p_grid} | {threshold})
    if any(not 0 < p < 1 for p in cands):
        raise ValueError("p values must lie in (0, 1)")

    rep = Report(f"beta-a{float(a):g}-m{mm}")
    exact_best, est_best, accepted = None, None, 0
    for p in cands:
        if mm * p - 1 >= -a:
            exact_best = max(exact_best, 1 - p) if exact_best is not None else 1 - p
        f = fp(float(p))
        slope_m = estimate_boundary_exponent(power_fn(f, mm), radii=radii)
        if slope_m + float(a) >= -slope_tol:
            accepted += 1
            gamma = -estimate_boundary_exponent(f, radii=radii)
            est_best = gamma if est_best is None else max(est_best, gamma)
    lower = 1 - (1 - a) / mm
    rep.add("bracket_lower", float(lower))
    rep.add("bracket_upper", 1.0)
    rep.add("family_bound", float(exact_best))
    rep.add("family_bound_estimated", float("nan") if est_best is None else est_best)
    rep.counts.update({"candidates": len(cands), "accepted_numerically": accepted})
    return rep.check([
        Expectation("family_bound_estimated", "approx", float(lower), 0.02, "1-(1-alpha)/m"),
        Expectation("family_bound", "ge", float(lower), 1e-12, "bracket lower end"),
        Expectation("family_bound", "le", 1.0, 1e-12, "bracket upper end"),
    ])


# -- Dirichlet counterexample ------------------------------------------------------------------

def dirichlet_counterexample(alpha: float, m: int, grid: DiscGrid, p: float | None = None,
                             f: MeroFn | None = None, steps: int = 2) -> Report:
    """Refinement trends of the weighted Dirichlet integrals of ``f_p`` and ``f_p^m``."""
    if alpha >= 0:
        raise ValueError("the counterexample needs alpha < 0")
    lo, hi = -alpha / (2 * m), -alpha / 2
    if p is None:
        p = 0.5 * (lo + hi)
    subject = fp(p) if f is None else f
    grids = [grid.refined(i) for i in range(steps + 1)]
    vf = [classes.dirichlet_integral(subject, g, alpha=alpha) for g in grids]
    vm = [classes.dirichlet_integral(power_fn(subject, m), g, alpha=alpha) for g in grids]

    def changes(v):
        return [(b - a_) / abs(b) if b else 0.0 for a_, b in zip(v[:-1], v[1:])]

    rep = Report(f"dirichlet-counterexample-a{alpha:g}-m{m}", grid=grid.metadata())
    for g, a_, b in zip(grids, vf, vm):
        rep.add(f"f_integral_J{g.rings}", a_)
        rep.add(f"fm_integral_J{g.rings}", b)
    cf, cm = changes(vf), changes(vm)
    rep.add("f_rel_growth", min(cf))
    rep.add("fm_rel_change", max(abs(c) for c in cm))
    inside = f is None and lo < p <= hi
    rep.notes.append(f"p={p:g}; counterexample interval ({lo:g}, {hi:g}] {'contains' if inside else 'excludes'} p")
    if alpha <= -1:
        rep.notes.append("alpha <= -1: the weight itself is not integrable near the circle")
    exps = []
    if inside:
        exps = [Expectation("fm_rel_change", "le", classes.CONVERGED_RTOL, 0.0, "f_p^m integral converges"),
                Expectation("f_rel_growth", "ge", classes.DIVERGED_RTOL, 0.0, "f_p integral diverges")]
    return rep.check(exps)


# -- classification ---------------------------------------------------------------------------------

def classify(eq: AlgebraicODE, kinds, grid: DiscGrid, name: str = "classify", **kw) -> Report:
    """Coefficient conditions per kind and the solution classes they imply."""
    if eq.order != 1:
        raise classes.UnsupportedEquationError("classification applies to first-order equations")
    rep = Report(name, grid=grid.metadata())
    for kind in kinds:
        sub = classes.coefficient_condition(eq, kind, grid, **kw)
        for qname, q in sub.quantities.items():
            key = f"verdict:{kind}" if qname == "verdict" else qname
            rep.add(key, q.value, argmax=q.argmax, note=q.note)
        rep.conclusions += sub.conclusions
        rep.notes += [n for n in sub.notes if n not in rep.notes]
    rep.counts["kinds"] = len(kinds)
    return rep


def run_scenario(s: Scenario, grid: DiscGrid, workers: int = 1) -> Report:
    if s.kind == "theorem1":
        return run_theorem1(s, grid, workers)
    if s.kind == "subject":
        return run_subject(s, grid)
    if s.kind == "classify":
        return classify(s.eq, s.kinds, s.grid(grid), name=s.name).check(s.expectations)
    raise ValueError(f"unknown scenario kind {s.kind!r}")
