"""Norms and integral functionals of the function classes on the disc.

Suprema are sampled on the rings of a :class:`~growthlab.grid.DiscGrid`;
integrals use its quadrature.  Membership is never decided outright: every
result carries the value at the finest resolution together with the trend
that supports (or undermines) finiteness.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate

from . import fnkit
from .ade import AlgebraicODE, minimal_M
from .fnkit import MeroFn, check_disc, power_chain_factor, power_fn, spherical
from .grid import DiscGrid, ring_maxima, trend
from .report import OVERFLOW_LIMIT, Report

CONVERGED_RTOL = 0.05
DIVERGED_RTOL = 0.20


class UnsupportedEquationError(ValueError):
    pass


# -- weights --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RadialWeight:
    """A nonnegative integrable function of ``r`` on ``[0, 1)``."""

    fn: Callable[[np.ndarray], np.ndarray]
    label: str = "omega"

    def __post_init__(self):
        r = np.linspace(0.0, 1.0 - 1e-9, 2001)
        v = np.asarray(self(r), dtype=float)
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError(f"weight {self.label} must be finite and nonnegative on [0, 1)")
        if not math.isfinite(self.l1_norm):
            raise ValueError(f"weight {self.label} is not integrable on (0, 1)")

    def __call__(self, r):
        return np.asarray(self.fn(np.asarray(r, dtype=float)), dtype=float)

    @cached_property
    def l1_norm(self) -> float:
        """``int_0^1 omega``; ``inf`` when adaptive quadrature does not converge."""
        with np.errstate(all="ignore"), warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            out = integrate.quad(lambda s: float(self(s)), 0.0, 1.0, limit=200, full_output=1)
        converged = len(out) == 3  # a fourth entry carries the failure message
        return out[0] if converged and math.isfinite(out[0]) else math.inf

    @classmethod
    def constant(cls, c: float = 1.0) -> "RadialWeight":
        return cls(lambda r: np.full(np.shape(r), float(c)), f"{c:g}")

    @classmethod
    def power(cls, beta: float) -> "RadialWeight":
        """``(1 - r)^beta`` with ``beta > -1``."""
        if beta <= -1:
            raise ValueError("(1-r)^beta is integrable only for beta > -1")
        return cls(lambda r: (1.0 - r) ** beta, f"(1-r)^{beta:g}")

    @classmethod
    def standard(cls, alpha: float) -> "RadialWeight":
        """``(1 - r^2)^alpha`` with ``alpha > -1``."""
        if alpha <= -1:
            raise ValueError("(1-r^2)^alpha is integrable only for alpha > -1")
        return cls(lambda r: (1.0 - r * r) ** alpha, f"(1-r^2)^{alpha:g}")


@dataclass(frozen=True, eq=False)
class SmoothIncreasing:
    """Positive increasing gauge with ``phi(r)(1-r) -> infinity``."""

    fn: Callable[[np.ndarray], np.ndarray]
    label: str = "phi"

    def __call__(self, r):
        return np.asarray(self.fn(np.asarray(r, dtype=float)), dtype=float)

    def diagnostics(self, depth: int = 12) -> dict:
        """Numerical evidence for the two defining conditions; not a verdict.

        ``ratio_deviation[k]`` is ``max |phi(|a + w/phi(|a|)|)/phi(|a|) - 1|``
        over ``|w| <= 1`` at ``|a| = 1 - 10^-k``; it should shrink with ``k``.
        """
        r = 1.0 - np.logspace(0, -depth, 4 * depth + 1)[1:]
        v = self(r)
        growth = v * (1.0 - r)
        w = np.concatenate([[0.0], np.exp(2j * np.pi * np.arange(16) / 16),
                            0.5 * np.exp(2j * np.pi * np.arange(16) / 16)])
        dev = {}
        for k in range(1, depth + 1):
            a = 1.0 - 10.0**-k
            pa = float(self(a))
            pts = np.abs(a + w / pa)
            pts = pts[pts < 1.0]
            dev[k] = float(np.max(np.abs(self(pts) / pa - 1.0))) if pts.size else float("nan")
        return {
            "positive": bool(np.all(v > 0)),
            "increasing": bool(np.all(np.diff(v) >= 0)),
            "phi_times_gap_increasing": bool(np.all(np.diff(growth) > 0)),
            "phi_times_gap_tail": float(growth[-1]),
            "ratio_deviation": dev,
        }

    @classmethod
    def default(cls) -> "SmoothIncreasing":
        return cls(lambda r: np.log(np.e / (1.0 - r)) / (1.0 - r), "log(e/(1-r))/(1-r)")


def omega_star(omega: RadialWeight, r):
    """``int_r^1 omega(s) log(s/r) s ds`` by adaptive quadrature (abs tol 1e-10)."""
    arr = np.asarray(r, dtype=float)
    if np.any(~((arr > 0) & (arr < 1))):
        raise fnkit.DiscDomainError("omega_star is defined for 0 < r < 1")
    out = np.empty(arr.shape)
    for i, ri in np.ndenumerate(arr):
        out[i], _ = integrate.quad(lambda s: float(omega(s)) * math.log(s / ri) * s, ri, 1.0,
                                   epsabs=1e-10, epsrel=1e-12, limit=200)
    return float(out) if arr.ndim == 0 else out


# -- results ---------------------------------------------------------------------------

@dataclass
class SupResult:
    value: float
    argmax: complex
    ring_values: np.ndarray = field(repr=False)
    trend: str = "unknown"

    @property
    def overflow(self) -> bool:
        return not math.isfinite(self.value) or self.value > OVERFLOW_LIMIT

    @property
    def bounded(self) -> bool:
        return not self.overflow and self.trend != "growing"


@dataclass
class IntegralResult:
    value: float
    coarse_value: float

    @property
    def rel_change(self) -> float:
        if self.value == self.coarse_value:
            return 0.0
        return (self.value - self.coarse_value) / abs(self.value)

    @property
    def overflow(self) -> bool:
        return not math.isfinite(self.value) or self.value > OVERFLOW_LIMIT

    @property
    def trend(self) -> str:
        if self.overflow:
            return "diverging"
        rc = abs(self.rel_change)
        if rc <= CONVERGED_RTOL:
            return "converging"
        if self.rel_change >= DIVERGED_RTOL:
            return "diverging"
        return "inconclusive"

    @property
    def bounded(self) -> bool:
        return self.trend == "converging"


def _sup(values_fn, grid: DiscGrid) -> SupResult:
    z, ring = grid.sup_nodes
    vals = np.asarray(values_fn(z), dtype=float)
    i = int(np.nanargmax(vals))
    rings = ring_maxima(vals, ring, grid.rings)
    return SupResult(float(vals[i]), complex(z[i]), rings, trend(rings))


def _two_level(integral: Callable[[DiscGrid], float], grid: DiscGrid) -> IntegralResult:
    return IntegralResult(integral(grid), integral(grid.coarsened()))


# -- norms -----------------------------------------------------------------------------

def normal_norm(f: MeroFn, alpha: float, grid: DiscGrid) -> SupResult:
    """``sup f^#(z) (1-|z|^2)^alpha`` with ring trend."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return _sup(lambda z: spherical(f, z) * (1.0 - np.abs(z) ** 2) ** alpha, grid)


def phi_normal_norm(f: MeroFn, phi: SmoothIncreasing, grid: DiscGrid) -> SupResult:
    """``sup f^#(z) / phi(|z|)`` with ring trend."""
    return _sup(lambda z: spherical(f, z) / phi(np.abs(z)), grid)


def sharp_squared(f: MeroFn) -> Callable[[np.ndarray], np.ndarray]:
    return lambda z: spherical(f, z) ** 2


def dirichlet_integral(f: MeroFn, grid: DiscGrid, *, alpha: float | None = None,
                       omega: RadialWeight | None = None) -> float:
    """Single-resolution ``int f^#^2 W dA`` with ``W = (1-|z|^2)^alpha`` or ``omega*``."""
    if (alpha is None) == (omega is None):
        raise ValueError("give exactly one of alpha or omega")
    if alpha is not None:
        radial = lambda r: (1.0 - r * r) ** alpha
    else:
        radial = omega_star(omega, grid.radial_nodes()[0])
    return grid.integrate(sharp_squared(f), radial)


def dirichlet_norm(f: MeroFn, grid: DiscGrid, *, alpha: float | None = None,
                   omega: RadialWeight | None = None) -> IntegralResult:
    """Dirichlet-type integral at the grid and at one ring fewer."""
    return _two_level(lambda g: dirichlet_integral(f, g, alpha=alpha, omega=omega), grid)


def mobius(a, z):
    """Disc automorphism ``(a - z)/(1 - conj(a) z)``."""
    a = complex(a)
    if abs(a) >= 1:
        raise fnkit.DiscDomainError("|a| must be < 1")
    z = check_disc(z)
    out = (a - z) / (1.0 - a.conjugate() * z)
    return complex(out) if out.ndim == 0 else out


def default_a_samples() -> list:
    out = [0j]
    for rho in (0.5, 0.75, 0.9, 0.99):
        out += [rho * np.exp(2j * np.pi * k / 8) for k in range(8)]
    return out


KERNELS = {
    "green": lambda t: -np.log(t),
    "one-minus-square": lambda t: 1.0 - t * t,
}


@dataclass
class UBCResult:
    value: float
    argmax: complex
    per_a: list = field(repr=False)

    @property
    def level_values(self) -> list:
        """Max over samples with the same ``|a|``, ordered by ``|a|``."""
        levels = {}
        for a, v in self.per_a:
            key = round(abs(a), 12)
            levels[key] = max(levels.get(key, -np.inf), v)
        return [levels[k] for k in sorted(levels)]

    @property
    def trend(self) -> str:
        return trend(np.array(self.level_values))

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.value) and self.value <= OVERFLOW_LIMIT and self.trend != "growing"


def _conformal_integral(integrand_w, grid: DiscGrid, kernel: str) -> float:
    k = KERNELS[kernel]
    return grid.integrate(integrand_w, lambda r: k(r))


def ubc_norm(f: MeroFn, a_samples, grid: DiscGrid, kernel: str = "green") -> UBCResult:
    """``max_a int f^#(z)^2 K(|phi_a(z)|) dA(z)``.

    Substituting ``z = phi_a(w)`` turns the integral into
    ``int (f o phi_a)^#(w)^2 K(|w|) dA(w)``, which moves the logarithmic
    singularity of the Green kernel to the origin of the polar grid.
    """
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}")
    per_a = []
    for a in a_samples:
        g = fnkit.mobius_pre(f, complex(a))
        per_a.append((complex(a), _conformal_integral(sharp_squared(g), grid, kernel)))
    i = int(np.argmax([v for _, v in per_a]))
    return UBCResult(per_a[i][1], per_a[i][0], per_a)


def yamashita_gap(f: MeroFn, m: int, r: float, grid: DiscGrid, via: str = "direct") -> tuple:
    """``(A, B)``: ``int_{D(0,r)} g^#^2 log(r/|z|) dA`` for ``g = f`` and ``g = f^m``.

    ``via="chain"`` evaluates ``(f^m)^#`` through the power-chain factor
    instead of differentiating ``f^m``.
    """
    if not 0 < r < 1:
        raise fnkit.DiscDomainError("r must lie in (0, 1)")
    if m < 2:
        raise ValueError("m must be at least 2")
    sub = grid.disc(r)
    kernel = lambda s: np.log(r / s)
    A = sub.integrate(sharp_squared(f), kernel)
    if via == "direct":
        B = sub.integrate(sharp_squared(power_fn(f, m)), kernel)
    elif via == "chain":
        B = sub.integrate(lambda z: (power_chain_factor(f(z), m) * spherical(f, z)) ** 2, kernel)
    else:
        raise ValueError("via must be 'direct' or 'chain'")
    return A, B


# -- coefficient conditions ---------------------------------------------------------------

CONCLUSIONS = {
    "hinf": "N",
    "hinf-phi": "N^phi",
    "bergman": "D#_omega*",
    "ubc-type": "UBC",
}


def coefficient_condition(eq: AlgebraicODE, kind: str, grid: DiscGrid, *,
                          phi: SmoothIncreasing | None = None,
                          omega: RadialWeight | None = None,
                          a_samples=None) -> Report:
    """Check every coefficient of a first-order equation against one class condition.

    hinf      sup |a| (1-|z|)^k            -> solutions normal
    hinf-phi  sup |a| / phi(|z|)^k         -> solutions phi-normal
    bergman   int |a|^(2/k) omega* dA      -> solutions in D#_omega*
    ubc-type  sup_b int |a|^(2/k) log(1/|phi_b|) dA -> solutions in UBC
    """
    if eq.order != 1:
        raise UnsupportedEquationError("coefficient conditions are stated for first-order equations")
    if kind not in CONCLUSIONS:
        raise ValueError(f"unknown condition kind {kind!r}")
    phi = phi or SmoothIncreasing.default()
    omega = omega or RadialWeight.constant(1.0)
    a_samples = default_a_samples() if a_samples is None else a_samples

    rep = Report(f"coefficients:{kind}", grid=grid.metadata())
    all_pass = True
    for idx, a in sorted(eq.coeffs.items(), key=lambda kv: (kv[0].k, kv[0].j)):
        k = idx.k
        name = f"{kind}[{idx}]"
        if kind == "hinf":
            res = _sup(lambda z: np.abs(a(z)) * (1.0 - np.abs(z)) ** k, grid)
            rep.add(name, res.value, argmax=res.argmax, note=f"trend {res.trend}")
        elif kind == "hinf-phi":
            res = _sup(lambda z: np.abs(a(z)) / phi(np.abs(z)) ** k, grid)
            rep.add(name, res.value, argmax=res.argmax, note=f"trend {res.trend}")
        elif kind == "bergman":
            res = _two_level(lambda g: g.integrate(lambda z: np.abs(a(z)) ** (2.0 / k),
                                                   omega_star(omega, g.radial_nodes()[0])), grid)
            rep.add(name, res.value, note=f"trend {res.trend}, rel change {res.rel_change:.3g}")
        else:
            per_a = []
            for b in a_samples:
                b = complex(b)
                phib = fnkit.mobius_fn(b)
                jac = (1.0 - abs(b) ** 2) ** 2
                integrand = (lambda z, phib=phib, b=b:
                             np.abs(a(phib(z))) ** (2.0 / k) * jac / np.abs(1.0 - b.conjugate() * z) ** 4)
                per_a.append((b, _conformal_integral(integrand, grid, "green")))
            i = int(np.argmax([v for _, v in per_a]))
            res = UBCResult(per_a[i][1], per_a[i][0], per_a)
            rep.add(name, res.value, argmax=res.argmax, note=f"trend {res.trend}")
        ok = res.bounded
        all_pass &= ok
        rep.add(f"{name}:pass", 1.0 if ok else 0.0)
    rep.add("verdict", 1.0 if all_pass else 0.0)
    rep.counts["coefficients"] = len(eq.coeffs)
    M0 = minimal_M(eq)[0]
    rep.notes.append(f"M_0 = {M0} satisfies max_k m_k/k <= M_0 + 2")
    if kind == "hinf":
        rep.notes.append("little-o variant H^inf_{k,0} not implemented (no definition available)")
    if all_pass:
        rep.conclusions.append(CONCLUSIONS[kind])
    return rep
