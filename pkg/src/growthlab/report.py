"""Structured harness output: measured quantities plus checked expectations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

OVERFLOW_LIMIT = 1e12
SCHEMA_VERSION = 1


@dataclass
class Quantity:
    name: str
    value: float
    argmax: complex | None = None
    note: str = ""

    @property
    def overflow(self) -> bool:
        return not math.isfinite(self.value) or abs(self.value) > OVERFLOW_LIMIT

    def display_value(self):
        """The JSON/CSV value: a float, or the tagged sentinel for huge values."""
        if math.isnan(self.value):
            return "nan"
        if self.overflow:
            return f"exceeds {OVERFLOW_LIMIT:g}"
        return float(self.value)


@dataclass
class Expectation:
    """A pinned constant: ``approx`` is value +- tol, ``le``/``ge`` are one-sided."""

    quantity: str
    op: str
    value: float
    tol: float = 0.0
    provenance: str = ""

    def __post_init__(self):
        if self.op not in ("approx", "le", "ge"):
            raise ValueError(f"unknown expectation operator {self.op!r}")

    def check(self, measured: Quantity | None) -> bool:
        if measured is None or math.isnan(measured.value):
            return False
        if measured.overflow:
            return self.op == "ge"
        x = measured.value
        if self.op == "approx":
            return abs(x - self.value) <= self.tol
        if self.op == "le":
            return x <= self.value + self.tol
        return x >= self.value - self.tol

    def describe(self) -> str:
        if self.op == "approx":
            return f"{self.quantity} = {self.value:g} +- {self.tol:g}"
        sym = "<=" if self.op == "le" else ">="
        return f"{self.quantity} {sym} {self.value:g}" + (f" (tol {self.tol:g})" if self.tol else "")


@dataclass
class Outcome:
    expectation: Expectation
    measured: float | None
    passed: bool


@dataclass
class Report:
    scenario: str
    grid: dict = field(default_factory=dict)
    quantities: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    outcomes: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    conclusions: list = field(default_factory=list)
    error: str | None = None
    # large per-node data (heatmaps); never serialised
    fields: dict = field(default_factory=dict, repr=False)

    def add(self, name: str, value: float, argmax: complex | None = None, note: str = "") -> Quantity:
        q = Quantity(name, float(value), None if argmax is None else complex(argmax), note)
        self.quantities[name] = q
        return q

    def __getitem__(self, name: str) -> float:
        return self.quantities[name].value

    def check(self, expectations) -> "Report":
        seen = {(o.expectation.quantity, o.expectation.op) for o in self.outcomes}
        for e in expectations:
            key = (e.quantity, e.op)
            if key in seen:
                raise ValueError(f"expectation {e.describe()} listed twice")
            seen.add(key)
            q = self.quantities.get(e.quantity)
            self.outcomes.append(Outcome(e, None if q is None else q.value, e.check(q)))
        return self

    def fail(self, message: str) -> "Report":
        self.error = message
        return self

    @property
    def passed(self) -> bool:
        return self.error is None and all(o.passed for o in self.outcomes)

    @property
    def status(self) -> str:
        return "passed" if self.passed else "failed"

    def to_dict(self) -> dict:
        def cplx(c):
            return None if c is None else [c.real, c.imag]

        return {
            "schema": SCHEMA_VERSION,
            "scenario": self.scenario,
            "status": self.status,
            "error": self.error,
            "grid": self.grid,
            "quantities": {
                k: {"value": q.display_value(), "argmax": cplx(q.argmax), "note": q.note}
                for k, q in self.quantities.items()
            },
            "counts": self.counts,
            "expectations": [
                {"check": o.expectation.describe(), "quantity": o.expectation.quantity,
                 "measured": None if o.measured is None else self.quantities[o.expectation.quantity].display_value(),
                 "pass": o.passed, "provenance": o.expectation.provenance}
                for o in self.outcomes
            ],
            "notes": self.notes,
            "conclusions": self.conclusions,
        }

    def summary(self) -> str:
        lines = [f"[{self.status.upper()}] {self.scenario}"]
        if self.error:
            lines.append(f"  error: {self.error}")
        for o in self.outcomes:
            mark = "ok  " if o.passed else "FAIL"
            lines.append(f"  {mark} {o.expectation.describe()}  (measured {o.measured!r})")
        return "\n".join(lines)
