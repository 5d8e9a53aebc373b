"""Polar quadrature and sampling grids on the unit disc.

Radial panels are dyadic towards the boundary (``1 - 2^-j``) and, optionally,
towards the origin; each panel carries Gauss-Legendre nodes.  The angular
rule is the periodic trapezoid rule with a node count proportional to
``1/(1 - r)`` so that boundary features of width ``1 - r`` stay resolved.
Measures are normalised as ``dA = r dr dtheta / pi`` (area of the disc is 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Panel:
    radii: np.ndarray  # radial Gauss nodes
    weights: np.ndarray  # weights for the measure 2 r dr (angular mean taken separately)
    n_theta: int

    @property
    def thetas(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta

    def points(self) -> np.ndarray:
        return self.radii[:, None] * np.exp(1j * self.thetas)[None, :]


@dataclass(frozen=True)
class DiscGrid:
    """Quadrature and supremum grid for ``D(0, radius)``.

    ``rings`` is J: boundary panels end at ``1 - 2^-j`` for ``j = 1..J``
    followed by a final panel reaching the rim.  Suprema are taken on the
    origin plus the rings ``r_j = 1 - 2^-j``.
    """

    rings: int = 14
    gauss: int = 6
    angular_factor: int = 4
    min_angular: int = 32
    inner_levels: int = 12
    radius: float = 1.0

    def __post_init__(self):
        if self.rings < 1:
            raise ValueError("need at least one ring")
        if not 0 < self.radius <= 1:
            raise ValueError("radius must lie in (0, 1]")

    def angular_count(self, level: int) -> int:
        n = max(self.min_angular, self.angular_factor * 2**level)
        return int(-(-n // 8) * 8)  # multiple of 8 keeps the diagonals on the grid

    def _panel_angular(self, level: int, outer: float) -> int:
        # resolution follows the distance of the panel to the unit circle
        gap = max(1.0 - self.radius * outer, 2.0 ** -level)
        return self.angular_count(min(level, max(1, math.ceil(-math.log2(gap)))))

    @cached_property
    def panels(self) -> tuple:
        x, w = np.polynomial.legendre.leggauss(self.gauss)
        edges = [0.0] + [2.0 ** -(i + 1) for i in range(self.inner_levels, 0, -1)]
        levels = [1] * (len(edges) - 1)
        edges += [1.0 - 2.0**-j for j in range(1, self.rings + 1)] + [1.0]
        levels += list(range(1, self.rings + 2))
        out = []
        for a, b, lev in zip(edges[:-1], edges[1:], levels):
            r = 0.5 * (a + b) + 0.5 * (b - a) * x
            wr = 0.5 * (b - a) * w * 2.0 * r
            out.append(Panel(self.radius * r, self.radius**2 * wr, self._panel_angular(lev, b)))
        return tuple(out)

    @property
    def resolution(self) -> float:
        return 2.0 ** -self.rings

    def refined(self, steps: int = 1) -> "DiscGrid":
        return replace(self, rings=self.rings + steps)

    def coarsened(self, steps: int = 1) -> "DiscGrid":
        return replace(self, rings=self.rings - steps)

    def disc(self, r: float) -> "DiscGrid":
        """Same panel structure mapped onto ``D(0, r)``."""
        return replace(self, radius=float(r))

    @property
    def node_count(self) -> int:
        return sum(len(p.radii) * p.n_theta for p in self.panels)

    def radial_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """All radial nodes and their ``2 r dr`` weights."""
        return (np.concatenate([p.radii for p in self.panels]),
                np.concatenate([p.weights for p in self.panels]))

    def angular_means(self, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Mean of ``fn`` over each quadrature circle, in radial-node order."""
        return np.concatenate([np.mean(fn(p.points()), axis=1) for p in self.panels])

    def integrate(self, fn: Callable[[np.ndarray], np.ndarray],
                  radial: Callable[[np.ndarray], np.ndarray] | np.ndarray | None = None) -> float:
        """``int fn(z) radial(|z|) dA(z)`` over the grid's disc (complex if ``fn`` is)."""
        r, w = self.radial_nodes()
        means = self.angular_means(fn)
        if radial is not None:
            w = w * (radial(r) if callable(radial) else np.asarray(radial))
        total = np.sum(means * w)
        return complex(total) if np.iscomplexobj(total) else float(total)

    def mass(self) -> float:
        return float(np.sum(self.radial_nodes()[1]))

    # -- sampling for suprema ---------------------------------------------------

    @cached_property
    def ring_radii(self) -> np.ndarray:
        return self.radius * (1.0 - 2.0 ** -np.arange(1, self.rings + 1))

    @cached_property
    def sup_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """``(points, ring_index)``; ring 0 is the origin, ring ``j`` is ``r_j``."""
        pts = [np.zeros(1, dtype=complex)]
        idx = [np.zeros(1, dtype=int)]
        for j, r in enumerate(self.ring_radii, start=1):
            n = self.angular_count(j)
            pts.append(r * np.exp(2j * np.pi * np.arange(n) / n))
            idx.append(np.full(n, j))
        return np.concatenate(pts), np.concatenate(idx)

    def metadata(self) -> dict:
        return {"rings": self.rings, "gauss": self.gauss, "angular_factor": self.angular_factor,
                "min_angular": self.min_angular, "inner_levels": self.inner_levels,
                "radius": self.radius}


def ring_maxima(values: np.ndarray, ring_index: np.ndarray, rings: int) -> np.ndarray:
    """Per-ring maxima of ``values`` (NaN where a ring has no finite value)."""
    out = np.full(rings + 1, np.nan)
    for j in range(rings + 1):
        v = values[ring_index == j]
        v = v[np.isfinite(v)]
        if v.size:
            out[j] = v.max()
    return out


def trend(ring_values: np.ndarray, tol: float = 0.02) -> str:
    """Classify the last three ring values as growing, flat or decaying."""
    v = np.asarray(ring_values, dtype=float)[-3:]
    if v.size < 3 or not np.all(np.isfinite(v)):
        return "unknown"
    scale = max(abs(v[-1]), 1e-300)
    d1, d2 = v[1] - v[0], v[2] - v[1]
    if d1 > tol * scale and d2 > tol * scale:
        return "growing"
    if d1 < -tol * scale and d2 < -tol * scale:
        return "decaying"
    return "flat"
