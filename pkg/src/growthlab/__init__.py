"""Numerical growth estimates for meromorphic solutions of algebraic ODEs on the unit disc."""

from .ade import AlgebraicODE, Index, minimal_M, residual, theorem1_scan
from .classes import RadialWeight, SmoothIncreasing, omega_star
from .fnkit import MeroFn, derivative, eval_extended, power_fn, spherical
from .grid import DiscGrid
from .report import Expectation, Report

__version__ = "0.1.0"

__all__ = [
    "AlgebraicODE", "DiscGrid", "Expectation", "Index", "MeroFn", "RadialWeight", "Report",
    "SmoothIncreasing", "derivative", "eval_extended", "minimal_M", "omega_star", "power_fn",
    "residual", "spherical", "theorem1_scan",
]
