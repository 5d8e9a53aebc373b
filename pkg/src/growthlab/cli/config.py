"""Run configuration and the text format for scenarios.

A config file is UTF-8 text: ``key = value`` lines, then any number of
``[scenario]`` sections.  ``#`` starts a comment.  Example::

    command = scenarios
    grid_rings = 12
    format = json
    tolerance.sup_ratio = 0.03

    [scenario]
    name = weierstrass-c2
    kind = theorem1
    f = (z-2)^-2
    order = 1
    degree = 2
    M = (0)
    caps k=1 m=(0)
    caps k=2 m=(3)
    coeff k=2 j=(3) expr="-4"
    expect sup_ratio = 0.5 +- 0.02
"""

from __future__ import annotations

import re
import shlex
from dataclasses import dataclass, field, replace

from ..ade import AlgebraicODE
from ..report import Expectation
from ..verify import Scenario
from .expr import ParseError, parse_function

FORMATS = ("csv", "json", "svg+json")
RINGS_RANGE = (4, 24)
KINDS = ("theorem1", "subject", "classify")


class ConfigError(ParseError):
    kind = "config error"


@dataclass
class RunConfig:
    command: str = "scenarios"
    rings: int = 14
    angular_factor: int = 4
    scenarios: list = field(default_factory=list)  # names to select; empty means all
    format: str = "json"
    output: str | None = None
    tolerances: dict = field(default_factory=dict)  # quantity -> tolerance override
    threads: int = 1

    def __post_init__(self):
        lo, hi = RINGS_RANGE
        if not lo <= self.rings <= hi:
            raise ValueError(f"grid rings must lie in [{lo}, {hi}], got {self.rings}")
        if self.angular_factor < 1:
            raise ValueError("angular factor must be positive")
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {', '.join(FORMATS)}")

    def apply_tolerances(self, s: Scenario) -> Scenario:
        if not self.tolerances:
            return s
        exps = [replace(e, tol=self.tolerances[e.quantity]) if e.quantity in self.tolerances else e
                for e in s.expectations]
        return replace(s, expectations=exps)


# -- parsing ---------------------------------------------------------------------------------

_TUPLE = re.compile(r"^\(\s*(-?\d+(?:\s*,\s*-?\d+)*)?\s*,?\s*\)$")
_EXPECT = re.compile(
    r"^(?P<q>\S+)\s*(?:(?P<op>=|<=|>=)\s*(?P<v>\S+))(?:\s*\+-\s*(?P<tol>\S+))?$")


def _int_tuple(text: str, line: int, col: int) -> tuple:
    m = _TUPLE.match(text.strip())
    if m is None:
        raise ConfigError(f"expected an integer tuple like (1,0), got {text!r}", line, col)
    return tuple(int(x) for x in m.group(1).split(",")) if m.group(1) else ()


def _number(text: str, line: int, col: int, cast=float):
    try:
        return cast(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}", line, col) from None


def parse_expect(text: str, line: int = 1, col: int = 1) -> Expectation:
    m = _EXPECT.match(text.strip())
    if m is None:
        raise ConfigError("expectation must read 'q = v +- tol', 'q <= v' or 'q >= v'", line, col)
    op = {"=": "approx", "<=": "le", ">=": "ge"}[m.group("op")]
    tol = _number(m.group("tol"), line, col) if m.group("tol") else 0.0
    if op == "approx" and m.group("tol") is None:
        raise ConfigError("'=' expectations need a tolerance: q = v +- tol", line, col)
    return Expectation(m.group("q"), op, _number(m.group("v"), line, col), tol, "config")


def _fields(rest: str, line: int, col: int) -> dict:
    try:
        parts = shlex.split(rest)
    except ValueError as exc:
        raise ConfigError(str(exc), line, col) from None
    out = {}
    for p in parts:
        key, sep, val = p.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value, got {p!r}", line, col)
        out[key] = val
    return out


def _expr_fn(text: str, line: int, col: int):
    try:
        return parse_function(text)
    except ParseError as exc:
        # report the position inside the config file, not inside the expression
        raise ConfigError(exc.message, line + exc.line - 1, col + exc.column - 1) from None


class _Section:
    def __init__(self, line: int):
        self.line = line
        self.values: dict = {}
        self.coeffs: list = []
        self.caps: dict = {}
        self.expects: list = []

    def build(self) -> Scenario:
        v, line = self.values, self.line
        name = v.get("name")
        if not name:
            raise ConfigError("scenario needs a name", line, 1)
        kind = v.get("kind", "theorem1")
        if kind not in KINDS:
            raise ConfigError(f"scenario kind must be one of {', '.join(KINDS)}", line, 1)
        eq = None
        if self.coeffs or kind in ("theorem1", "classify"):
            order = int(v.get("order", 1))
            degree = int(v.get("degree", 1))
            caps = None
            if self.caps:
                caps = [self.caps.get(k, (0,) * order) for k in range(1, degree + 1)]
            try:
                eq = AlgebraicODE.from_rows(order, degree, self.coeffs, caps)
            except ValueError as exc:
                raise ConfigError(str(exc), line, 1) from None
        kw = {}
        if "M" in v:
            kw["M"] = v["M"]
        if "p" in v:
            kw["p"] = v["p"]
        if "powers" in v:
            kw["powers"] = v["powers"]
        if "kinds" in v:
            kw["kinds"] = v["kinds"]
        if "rings" in v:
            kw["rings"] = v["rings"]
        if "angular_factor" in v:
            kw["angular_factor"] = v["angular_factor"]
        if kind == "theorem1" and ("f" not in v or "M" not in v):
            raise ConfigError("theorem1 scenarios need f and M", line, 1)
        if kind == "subject" and "f" not in v:
            raise ConfigError("subject scenarios need f", line, 1)
        return Scenario(name, kind, f=v.get("f"), eq=eq, expectations=list(self.expects),
                        provenance=v.get("provenance", "config"), **kw)


def parse_config(text: str) -> tuple[dict, list]:
    """Return ``(settings, scenarios)``; settings are the raw top-level values."""
    settings: dict = {}
    sections: list[_Section] = []
    cur = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].rstrip()
        stripped = body.strip()
        if not stripped:
            continue
        col = len(body) - len(body.lstrip()) + 1
        if stripped.startswith("["):
            if stripped != "[scenario]":
                raise ConfigError(f"unknown section {stripped}", lineno, col)
            cur = _Section(lineno)
            sections.append(cur)
            continue
        word, _, rest = stripped.partition(" ")
        if cur is not None and word in ("coeff", "caps", "expect"):
            rcol = col + len(word) + 1 + (len(rest) - len(rest.lstrip()))
            if word == "expect":
                cur.expects.append(parse_expect(rest, lineno, rcol))
                continue
            f = _fields(rest, lineno, rcol)
            if "k" not in f:
                raise ConfigError(f"{word} line needs k=", lineno, rcol)
            k = _number(f["k"], lineno, rcol, int)
            if word == "caps":
                cur.caps[k] = _int_tuple(f.get("m", ""), lineno, rcol)
                continue
            if "j" not in f or "expr" not in f:
                raise ConfigError("coeff line needs k=, j= and expr=", lineno, rcol)
            ecol = rcol + rest.strip().find(f["expr"])
            cur.coeffs.append((k, _int_tuple(f["j"], lineno, rcol), _expr_fn(f["expr"], lineno, ecol)))
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", lineno, col)
        key, value = key.strip(), value.strip()
        after = body.split("=", 1)[1]
        vcol = body.index("=") + 2 + len(after) - len(after.lstrip())
        if cur is None:
            settings[key] = (value, lineno, vcol)
            continue
        cur.values[key] = _section_value(key, value, lineno, vcol)
    return settings, [s.build() for s in sections]


def _section_value(key: str, value: str, line: int, col: int):
    if key == "f":
        return _expr_fn(value, line, col)
    if key in ("M", "powers"):
        return _int_tuple(value, line, col)
    if key == "kinds":
        return tuple(x.strip() for x in value.split(",") if x.strip())
    if key == "p":
        return _number(value, line, col)
    if key in ("rings", "angular_factor", "order", "degree"):
        return _number(value, line, col, int)
    if key in ("name", "kind", "provenance"):
        return value
    raise ConfigError(f"unknown scenario key {key!r}", line, col)


def run_config(settings: dict, **overrides) -> RunConfig:
    """Build a RunConfig from parsed settings; non-None overrides (flags) win."""
    kw: dict = {"tolerances": {}}
    for key, (value, line, col) in settings.items():
        if key.startswith("tolerance."):
            kw["tolerances"][key.split(".", 1)[1]] = _number(value, line, col)
        elif key in ("grid_rings", "rings"):
            kw["rings"] = _number(value, line, col, int)
        elif key in ("angular_factor", "threads"):
            kw[key] = _number(value, line, col, int)
        elif key in ("command", "format", "output"):
            kw[key] = value
        elif key == "scenarios":
            kw["scenarios"] = [x.strip() for x in value.split(",") if x.strip()]
        else:
            raise ConfigError(f"unknown setting {key!r}", line, 1)
    for key, value in overrides.items():
        if value is not None:
            kw[key] = value
    return RunConfig(**kw)


# -- dumping -----------------------------------------------------------------------------------

def _tuple_text(t) -> str:
    return "(" + ",".join(str(int(x)) for x in t) + ")"


def dump_scenario(s: Scenario) -> str:
    lines = ["[scenario]", f"name = {s.name}", f"kind = {s.kind}"]
    if s.provenance:
        lines.append(f"provenance = {s.provenance}")
    if s.f is not None:
        lines.append(f"f = {s.f.source()}")
    if s.p is not None:
        lines.append(f"p = {s.p!r}")
    if s.kind == "subject":
        lines.append(f"powers = {_tuple_text(s.powers)}")
    if s.kinds:
        lines.append("kinds = " + ", ".join(s.kinds))
    if s.M is not None:
        lines.append(f"M = {_tuple_text(s.M)}")
    if s.rings is not None:
        lines.append(f"rings = {s.rings}")
    if s.angular_factor is not None:
        lines.append(f"angular_factor = {s.angular_factor}")
    if s.eq is not None:
        lines += [f"order = {s.eq.order}", f"degree = {s.eq.degree}"]
        lines += [f"caps k={k} m={_tuple_text(row)}" for k, row in enumerate(s.eq.caps, start=1)]
        lines += [f'coeff k={idx.k} j={_tuple_text(idx.j)} expr="{a.source()}"'
                  for idx, a in s.eq.coeffs.items()]
    for e in s.expectations:
        sym = {"approx": "=", "le": "<=", "ge": ">="}[e.op]
        tol = f" +- {e.tol!r}" if e.op == "approx" or e.tol else ""
        lines.append(f"expect {e.quantity} {sym} {e.value!r}{tol}")
    return "\n".join(lines) + "\n"


def dump_catalog(scenarios) -> str:
    return "\n".join(dump_scenario(s) for s in scenarios)
