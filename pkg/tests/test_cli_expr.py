import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from growthlab import fnkit
from growthlab.cli.expr import (ContextError, ExprSyntaxError, LexError, ParseError, evaluate,
                                parse_expr, parse_function, parse_phi, parse_weight, to_source)

from oracles import random_disc_points

PTS = random_disc_points(np.random.default_rng(11), 20, rmax=0.9)


# -- pinned examples -----------------------------------------------------------------------------

def test_rational_example():
    f = parse_function("1/(2-z)")
    assert f(0.0) == 0.5
    assert isinstance(f, fnkit.Rational)


def test_tangent_square_example():
    f = parse_function("tan(0.7*z)^2 + 1")
    d2 = fnkit.derivative(f, 2)
    # (tan^2)'' = 2 k^2 sec^2 (1 + 3 tan^2) at k z
    t = np.tan(0.7 * PTS)
    assert np.allclose(d2(PTS), 2 * 0.49 * (1 + t * t) * (1 + 3 * t * t), rtol=1e-12)


def test_powp_in_weight_is_context_error():
    with pytest.raises(ContextError) as info:
        parse_expr("powp(0.5)", "weight")
    assert (info.value.line, info.value.column) == (1, 1)


# -- grammar details -----------------------------------------------------------------------------

@pytest.mark.parametrize("src,want", [
    ("1 - 2 - 3", -4), ("8/4/2", 1), ("2*3^2", 18), ("-2^2", -4), ("(1+2i)*(1-2i)", 5),
    ("i*i", -1), ("1e-1 * 10", 1), ("2^-1", 0.5), ("  3\t*\n2 ", 6),
])
def test_constant_values(src, want):
    assert evaluate(parse_expr(src), 0.0) == pytest.approx(want, abs=1e-15)


def test_branch_power_and_mobius():
    assert evaluate(parse_expr("powp(0.5)"), 0.75) == pytest.approx(2.0)
    assert evaluate(parse_expr("powp(-1, z^2)"), 0.5) == pytest.approx(0.75)
    assert evaluate(parse_expr("mobius(0.5)(z)"), 0.5) == 0
    assert parse_function("recip(tan(z))")(0.5) == pytest.approx(1 / np.tan(0.5))


def test_weight_context():
    w = parse_weight("(1 - r)^2")
    assert w(0.5) == pytest.approx(0.25)
    assert parse_phi("(1-r)^-1")(0.5) == pytest.approx(2.0)
    with pytest.raises(ContextError):
        parse_expr("1 - z", "weight")
    with pytest.raises(ContextError):
        parse_expr("r", "function")


@pytest.mark.parametrize("src,cls,col", [
    ("1 + $", LexError, 5),
    ("1/(2-z", ExprSyntaxError, 7),
    ("z^1.5", ExprSyntaxError, 3),
    ("z + * 2", ExprSyntaxError, 5),
    ("foo(z)", ExprSyntaxError, 1),
    ("powp(z)", ExprSyntaxError, 6),
    ("mobius(2)(z)", ContextError, 8),
    ("mobius(z)(z)", ContextError, 8),
    ("", ExprSyntaxError, 1),
    ("2 3", ExprSyntaxError, 3),
])
def test_error_positions(src, cls, col):
    with pytest.raises(cls) as info:
        parse_expr(src)
    assert info.value.column == col
    assert f"column {col}" in str(info.value)


def test_error_line_numbers():
    with pytest.raises(ParseError) as info:
        parse_expr("1 +\n  2 + $")
    assert (info.value.line, info.value.column) == (2, 7)


# -- round trip ----------------------------------------------------------------------------------

reals = st.floats(0.05, 3.0, allow_nan=False).map(lambda x: float(f"{x:.6g}"))
literals = st.one_of(
    reals.map(repr),
    reals.map(lambda x: f"{x!r}i"),
    st.tuples(reals, reals).map(lambda t: f"({t[0]!r}+{t[1]!r}i)"),
    st.just("i"),
)
leaves = st.one_of(st.just("z"), literals)


def _extend(sub):
    ops = st.sampled_from(["+", "-", "*", "/"])
    return st.one_of(
        st.tuples(sub, ops, sub).map(lambda t: f"{t[0]} {t[1]} {t[2]}"),
        st.tuples(sub, ops, sub).map(lambda t: f"({t[0]}){t[1]}({t[2]})"),
        sub.map(lambda s: f"-({s})"),
        st.tuples(sub, st.integers(-3, 3)).map(lambda t: f"({t[0]})^{t[1]}"),
        sub.map(lambda s: f"tan(0.3*({s}))"),
        sub.map(lambda s: f"recip({s})"),
        st.sampled_from(["-0.5", "0.25", "0.7", "-1.5"]).map(lambda p: f"powp({p})"),
        st.tuples(st.sampled_from(["0.3", "-0.5i", "(0.2+0.1i)"]), sub)
          .map(lambda t: f"mobius({t[0]})(0.2*({t[1]}))"),
    )


expressions = st.recursive(leaves, _extend, max_leaves=8)


def _agree(a, b):
    fa, fb = np.isfinite(a), np.isfinite(b)
    if not np.array_equal(fa, fb):
        return False
    scale = np.maximum(np.maximum(np.abs(a[fa]), np.abs(b[fa])), 1.0)
    return bool(np.all(np.abs(a[fa] - b[fa]) <= 1e-14 * scale))


@settings(max_examples=200, deadline=None)
@given(src=expressions)
def test_round_trip_evaluates_identically(src):
    tree = parse_expr(src)
    again = parse_expr(to_source(tree))
    with np.errstate(all="ignore"):
        assert _agree(evaluate(tree, PTS), evaluate(again, PTS))
    assert to_source(again) == to_source(parse_expr(to_source(again)))


@pytest.mark.parametrize("f", [
    fnkit.rational([1.0], [2.0, -1.0]), fnkit.BranchPower(0.3), fnkit.tan_of(fnkit.identity()).recip,
    (1.5 - fnkit.identity()) ** -2, fnkit.scaled_tan(0.7),
])
def test_merofn_source_parses_back(f):
    g = parse_function(f.source())
    assert np.max(np.abs(g(PTS) - f(PTS))) <= 1e-14 * np.max(np.abs(f(PTS)))
