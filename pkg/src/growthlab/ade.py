"""Algebraic differential equations

    (f^(N))^n + sum_{k=1}^n P_k(f) (f^(N))^(n-k) = 0,
    P_k(f) = sum_j a_{k,j}(z) prod_l (f^(l))^(j_l),

and both sides of the pointwise growth bound for their meromorphic solutions

    prod_l ((f^(l))^(M_l+1))^#  <~  sum_k sum_j |a_{k,j}|^(1/k).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import fnkit
from .fnkit import MeroFn, PoleError, check_disc, derivative, power_fn, spherical
from .grid import DiscGrid
from .report import Report

RHS_FLOOR = 1e-9
RESIDUAL_RTOL = 1e-9
LOW_RHS_LHS_LIMIT = 1e-6


class NotASolutionError(ValueError):
    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = stats or {}


class HypothesisError(ValueError):
    """An exponent vector M that violates the admissibility conditions."""


@dataclass(frozen=True)
class Index:
    """Multi-index ``(k; j_0, ..., j_{N-1})`` of a coefficient."""

    k: int
    j: tuple

    def __str__(self):
        return f"k={self.k} j=({','.join(map(str, self.j))})"


@dataclass(frozen=True, eq=False)
class AlgebraicODE:
    order: int
    degree: int
    coeffs: dict = field(default_factory=dict)  # Index -> MeroFn
    caps: tuple | None = None  # caps[k-1][l] = m_{k,l}

    def __post_init__(self):
        N, n = self.order, self.degree
        if N < 1 or n < 1:
            raise ValueError("order and degree must be positive")
        coeffs = {}
        for idx, a in self.coeffs.items():
            if not isinstance(idx, Index):
                idx = Index(idx[0], tuple(idx[1]))
            if not 1 <= idx.k <= n:
                raise ValueError(f"row {idx.k} outside 1..{n}")
            if len(idx.j) != N or min(idx.j) < 0:
                raise ValueError(f"multi-index {idx} must have {N} nonnegative entries")
            coeffs[idx] = fnkit.as_fn(a)
        object.__setattr__(self, "coeffs", coeffs)
        if self.caps is None:
            caps = [[0] * N for _ in range(n)]
            for idx in coeffs:
                for l, jl in enumerate(idx.j):
                    caps[idx.k - 1][l] = max(caps[idx.k - 1][l], jl)
            object.__setattr__(self, "caps", tuple(tuple(c) for c in caps))
        else:
            caps = tuple(tuple(int(x) for x in row) for row in self.caps)
            if len(caps) != n or any(len(row) != N for row in caps):
                raise ValueError("caps table must be n rows of N entries")
            object.__setattr__(self, "caps", caps)
            for idx in coeffs:
                if any(jl > caps[idx.k - 1][l] for l, jl in enumerate(idx.j)):
                    raise ValueError(f"multi-index {idx} exceeds its caps")

    @classmethod
    def from_rows(cls, order, degree, rows, caps=None):
        """Build from ``(k, (j_0, ..), coefficient)`` triples; repeated indices add up."""
        coeffs = {}
        for k, j, a in rows:
            idx = Index(int(k), tuple(int(x) for x in j))
            a = fnkit.as_fn(a)
            coeffs[idx] = coeffs[idx] + a if idx in coeffs else a
        return cls(order, degree, coeffs, caps)

    def row(self, k: int):
        return [(idx, a) for idx, a in self.coeffs.items() if idx.k == k]

    def analytic_on(self, grid: DiscGrid) -> bool:
        """Diagnostic: no coefficient has a detected pole on the sup nodes."""
        z, _ = grid.sup_nodes
        return all(np.all(np.isfinite(a(z))) for a in self.coeffs.values())


# -- hypotheses ------------------------------------------------------------------

def _thresholds(eq: AlgebraicODE) -> list:
    out = []
    for l in range(eq.order):
        best = max(Fraction(eq.caps[k - 1][l], k) for k in range(1, eq.degree + 1))
        out.append(best - (2 if l == 0 else 1))
    return out


def admissible(eq: AlgebraicODE, M) -> bool:
    """Exact check of M_0 >= max_k m_{k,0}/k - 2 and M_l >= max_k m_{k,l}/k - 1."""
    M = tuple(M)
    if len(M) != eq.order or any(int(x) != x or x < 0 for x in M):
        return False
    return all(Fraction(int(m)) >= t for m, t in zip(M, _thresholds(eq)))


def minimal_M(eq: AlgebraicODE) -> tuple:
    return tuple(max(0, math.ceil(t)) for t in _thresholds(eq))


# -- pointwise evaluation ----------------------------------------------------------

def _derivatives(f: MeroFn, upto: int):
    return [derivative(f, l) for l in range(upto + 1)]


def _require_finite(values, what):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise PoleError(f"pole encountered while evaluating {what}")


def _P(eq, k, dvals, z):
    total = np.zeros(np.shape(z), dtype=complex)
    for idx, a in eq.row(k):
        term = a(z)
        for l, jl in enumerate(idx.j):
            if jl:
                term = term * dvals[l] ** jl
        total = total + term
    return total


def _maybe_scalar(z, out):
    return complex(out) if np.ndim(z) == 0 else out


def eval_P(eq: AlgebraicODE, k: int, f: MeroFn, z):
    """``P_k(f)(z)``."""
    if not 1 <= k <= eq.degree:
        raise ValueError(f"row {k} outside 1..{eq.degree}")
    z = check_disc(z)
    fs = _derivatives(f, eq.order - 1)
    dvals = [g(z) for g in fs]
    _require_finite(dvals, "P_k")
    out = _P(eq, k, dvals, z)
    _require_finite([out], "P_k")
    return _maybe_scalar(z, out)


def _residual(eq, dvals, z):
    lead = dvals[eq.order]
    n = eq.degree
    out = lead**n
    for k in range(1, n + 1):
        out = out + _P(eq, k, dvals, z) * lead ** (n - k)
    return out, np.abs(lead) ** n


def residual(eq: AlgebraicODE, f: MeroFn, z):
    """Left side of the equation evaluated at ``z``."""
    z = check_disc(z)
    dvals = [g(z) for g in _derivatives(f, eq.order)]
    _require_finite(dvals, "the residual")
    out, _ = _residual(eq, dvals, z)
    return _maybe_scalar(z, out)


def bound_rhs(eq: AlgebraicODE, z):
    """``sum_k sum_j |a_{k,j}(z)|^(1/k)``."""
    z = check_disc(z)
    total = np.zeros(np.shape(z))
    for idx, a in eq.coeffs.items():
        total = total + np.abs(a(z)) ** (1.0 / idx.k)
    return float(total) if np.ndim(z) == 0 else total


def bound_lhs(f: MeroFn, M, z):
    """``prod_l ((f^(l))^(M_l+1))^#``."""
    z = check_disc(z)
    out = np.ones(np.shape(z))
    for l, Ml in enumerate(M):
        out = out * spherical(power_fn(derivative(f, l), Ml + 1), z)
    return float(out) if np.ndim(z) == 0 else out


def _log_capped(x, M):
    # log of x^M / (1 + x^(2M+2)), written in 1/x where x > 1 so nothing overflows
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        lx = np.log(x)
        small = (M * lx if M else 0.0) - np.log1p(x ** (2 * M + 2))  # avoid 0 * log 0
        large = -(M + 2) * lx - np.log1p((1.0 / x) ** (2 * M + 2))
    return np.where(x > 1.0, large, small)


def proof_I(eq: AlgebraicODE, idx: Index, f: MeroFn, M, z):
    """The auxiliary functional bounding each coefficient's contribution:

    prod_l |f^(l)|^(j_l/k) * prod_{l<=N-2} ((f^(l))^(M_l+1))^#
        * |f^(N-1)|^M_{N-1} / (1 + |f^(N-1)|^(2(M_{N-1}+1))).
    """
    if not isinstance(idx, Index):
        idx = Index(idx[0], tuple(idx[1]))
    M = tuple(M)
    N = eq.order
    if len(M) != N or len(idx.j) != N:
        raise ValueError("M and the multi-index must both have length N")
    z = check_disc(z)
    fs = _derivatives(f, N - 1)
    vals = [g(z) for g in fs]
    _require_finite(vals, "proof_I")
    # summed in log space: the power factors alone can overflow near poles
    with np.errstate(divide="ignore"):
        log_out = np.zeros(np.shape(z))
        for l, jl in enumerate(idx.j):
            if jl:
                log_out = log_out + (jl / idx.k) * np.log(np.abs(vals[l]))
        for l in range(N - 1):
            log_out = log_out + np.log(spherical(power_fn(fs[l], M[l] + 1), z))
        log_out = log_out + _log_capped(np.abs(vals[N - 1]), M[N - 1])
    out = np.exp(log_out)
    return float(out) if np.ndim(z) == 0 else out


def proof_ceiling(M) -> int:
    return math.prod(m + 1 for m in tuple(M)[1:])


# -- grid scan -----------------------------------------------------------------------

def _chunks(n, workers):
    step = max(1, -(-n // max(1, workers)))
    return [slice(i, min(n, i + step)) for i in range(0, n, step)]


def _map_chunks(fn, n, workers):
    """Apply ``fn`` to contiguous index slices and concatenate in order."""
    slices = _chunks(n, workers)
    if workers <= 1 or len(slices) == 1:
        parts = [fn(s) for s in slices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(fn, slices))
    return [np.concatenate(p) for p in zip(*parts)]


def residual_stats(eq: AlgebraicODE, f: MeroFn, grid: DiscGrid, workers: int = 1) -> dict:
    """Scale-aware residual ``|res| / (1 + |f^(N)|^n)`` on the sup nodes."""
    z, _ = grid.sup_nodes
    fs = _derivatives(f, eq.order)

    def work(s):
        zz = z[s]
        dvals = [g(zz) for g in fs]
        ok = np.all([np.isfinite(v) for v in dvals], axis=0)
        res, scale = _residual(eq, [v[ok] for v in dvals], zz[ok])
        return np.abs(res) / (1.0 + scale), ok

    scaled, ok = _map_chunks(work, z.size, workers)
    return {
        "max_scaled_residual": float(scaled.max()) if scaled.size else 0.0,
        "mean_scaled_residual": float(scaled.mean()) if scaled.size else 0.0,
        "pole_nodes": int((~ok).sum()),
        "nodes": int(z.size),
    }


def theorem1_scan(eq: AlgebraicODE, f: MeroFn, M, grid: DiscGrid, *, delta: float = RHS_FLOOR,
                  workers: int = 1, name: str = "theorem1") -> Report:
    """Sup over the sup nodes of bound_lhs/bound_rhs for a verified solution."""
    M = tuple(M)
    if not admissible(eq, M):
        raise HypothesisError(f"M={M} violates the admissibility conditions (minimal {minimal_M(eq)})")
    stats = residual_stats(eq, f, grid, workers)
    if stats["max_scaled_residual"] >= RESIDUAL_RTOL:
        raise NotASolutionError(
            f"residual gate failed: max scaled residual {stats['max_scaled_residual']:.3e} >= {RESIDUAL_RTOL:g}",
            stats)

    z, _ = grid.sup_nodes
    fs = _derivatives(f, eq.order)
    powered = [power_fn(fs[l], M[l] + 1) for l in range(eq.order)]

    def work(s):
        zz = z[s]
        ok = np.all([np.isfinite(g(zz)) for g in fs], axis=0)
        lhs = np.full(zz.size, np.nan)
        rhs = np.full(zz.size, np.nan)
        if ok.any():
            zo = zz[ok]
            val = np.ones(zo.size)
            for g in powered:
                val = val * spherical(g, zo)
            lhs[ok] = val
            rhs[ok] = bound_rhs(eq, zo)
        return lhs, rhs

    lhs, rhs = _map_chunks(work, z.size, workers)
    evaluated = np.isfinite(lhs)
    low = evaluated & (rhs <= delta)
    use = evaluated & ~low
    ratio = np.full(z.size, np.nan)
    ratio[use] = lhs[use] / rhs[use]

    rep = Report(name, grid=grid.metadata())
    if use.any():
        i = int(np.nanargmax(ratio))  # first maximal node on ties
        rep.add("sup_ratio", ratio[i], argmax=z[i])
    else:
        rep.add("sup_ratio", float("nan"), note="no node with bound_rhs above the floor")
    rep.add("max_scaled_residual", stats["max_scaled_residual"])
    rep.counts.update({
        "nodes": int(z.size),
        "skipped_pole_nodes": int((~evaluated).sum()),
        "low_rhs_nodes": int(low.sum()),
        "low_rhs_violations": int((lhs[low] >= LOW_RHS_LHS_LIMIT).sum()),
    })
    rep.notes.append(f"M={M}, delta={delta:g}")
    rep.fields["ratio"] = (z, ratio)
    return rep
