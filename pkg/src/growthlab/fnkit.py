"""Meromorphic functions on the unit disc as immutable expression trees.

Every node evaluates vectorised over numpy arrays of complex points and
knows its exact symbolic derivative and reciprocal.  The reciprocal is what
makes the spherical derivative finite at poles: where ``|f| > 1`` (or ``f``
is infinite) we evaluate ``(1/f)^#`` instead, which is the same quantity.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from functools import cached_property
from numbers import Number

import numpy as np
from numpy.polynomial import polynomial as npoly

POLE_RTOL = 1e-12
DEFAULT_MAX_ORDER = 8


class DiscDomainError(ValueError):
    """A point outside the open unit disc (or outside a branch domain)."""


class IndeterminateError(ArithmeticError):
    """0/0 encountered; the representation must be reduced or the point moved."""


class PoleError(ArithmeticError):
    """A finite value was required but a pole was hit."""


class UnsupportedOrderError(ValueError):
    pass


@dataclass(frozen=True)
class Extended:
    """A point of the Riemann sphere; ``value is None`` is the point at infinity."""

    value: complex | None

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    @classmethod
    def infinity(cls) -> "Extended":
        return cls(None)

    def __repr__(self):
        return "Extended(inf)" if self.value is None else f"Extended({self.value!r})"


def _fmt_number(c: complex) -> str:
    c = complex(c)
    if c.imag == 0:
        s = repr(float(c.real))
    elif c.real == 0:
        s = repr(float(c.imag)) + "i"
    else:
        s = f"{float(c.real)!r}+{float(c.imag)!r}i".replace("+-", "-")
    return f"({s})" if s.startswith("-") or "+" in s or "-" in s[1:] else s


def safe_divide(num, den):
    """Elementwise ``num/den`` with scale-aware pole detection.

    ``|den| < POLE_RTOL * (1 + |num|)`` is a pole (complex infinity) unless
    ``|num|`` is also below ``POLE_RTOL``, which is reported as NaN.
    """
    num = np.asarray(num, dtype=complex)
    den = np.asarray(den, dtype=complex)
    with np.errstate(all="ignore"):
        out = num / den
        small = np.abs(den) < POLE_RTOL * (1.0 + np.abs(num))
        if np.any(small):
            out = np.where(small, complex(np.inf, 0.0), out)
            out = np.where(small & (np.abs(num) < POLE_RTOL), complex(np.nan, np.nan), out)
    return out


def _const(x) -> "Poly":
    return Poly((complex(x),))


def as_fn(x) -> "MeroFn":
    if isinstance(x, MeroFn):
        return x
    if isinstance(x, Number):
        return _const(x)
    raise TypeError(f"cannot interpret {x!r} as a meromorphic function")


class MeroFn:
    """Base class for expression nodes.  Instances are never mutated."""

    def __call__(self, z):
        arr = np.asarray(z, dtype=complex)
        with np.errstate(all="ignore"):
            out = np.asarray(self._eval(arr), dtype=complex)
        if arr.ndim == 0:
            return complex(out.reshape(()))
        return np.broadcast_to(out, arr.shape).copy() if out.shape != arr.shape else out

    @property
    def max_order(self) -> int:
        return self.__dict__.get("_max_order", DEFAULT_MAX_ORDER)

    def _eval(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _diff(self) -> "MeroFn":
        raise NotImplementedError

    def _recip(self) -> "MeroFn":
        return Quotient(_const(1.0), self)

    def source(self, var: str = "z") -> str:
        raise NotImplementedError

    @cached_property
    def d(self) -> "MeroFn":
        """First derivative (memoised)."""
        return self._diff()

    @cached_property
    def recip(self) -> "MeroFn":
        """The reciprocal ``1/f`` built symbolically, finite at poles of ``f``."""
        return self._recip()

    def derivative(self, order: int = 1) -> "MeroFn":
        return derivative(self, order)

    def __str__(self):
        return self.source()

    def __add__(self, other):
        return add(self, as_fn(other))

    def __radd__(self, other):
        return add(as_fn(other), self)

    def __sub__(self, other):
        return add(self, neg(as_fn(other)))

    def __rsub__(self, other):
        return add(as_fn(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_fn(other))

    def __rmul__(self, other):
        return mul(as_fn(other), self)

    def __truediv__(self, other):
        return div(self, as_fn(other))

    def __rtruediv__(self, other):
        return div(as_fn(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, m):
        if not isinstance(m, (int, np.integer)):
            raise TypeError("only integer powers of a MeroFn are supported")
        return IntPower(self, int(m))


@dataclass(frozen=True, eq=False)
class Poly(MeroFn):
    """Polynomial with ascending complex coefficients."""

    coeffs: tuple

    def __post_init__(self):
        c = [complex(x) for x in self.coeffs] or [0j]
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return self.coeffs == (0j,)

    def is_constant(self) -> bool:
        return len(self.coeffs) == 1

    def _eval(self, z):
        return npoly.polyval(z, np.array(self.coeffs))

    def _diff(self):
        return Poly(tuple(npoly.polyder(np.array(self.coeffs))) or (0j,))

    def _recip(self):
        return Rational(_const(1.0), self)

    def source(self, var="z"):
        terms = []
        for k, c in enumerate(self.coeffs):
            if c == 0 and len(self.coeffs) > 1:
                continue
            lit = _fmt_number(c)
            if k == 0:
                terms.append(lit)
            elif k == 1:
                terms.append(f"{lit}*{var}")
            else:
                terms.append(f"{lit}*{var}^{k}")
        return "(" + " + ".join(terms) + ")"


@dataclass(frozen=True, eq=False)
class Rational(MeroFn):
    num: Poly
    den: Poly

    def __post_init__(self):
        if self.den.is_zero():
            raise ZeroDivisionError("rational denominator is the zero polynomial")

    def _eval(self, z):
        return safe_divide(self.num._eval(z), self.den._eval(z))

    def _diff(self):
        n, d = np.array(self.num.coeffs), np.array(self.den.coeffs)
        top = npoly.polysub(npoly.polymul(npoly.polyder(n), d), npoly.polymul(n, npoly.polyder(d)))
        return Rational(Poly(tuple(top)), Poly(tuple(npoly.polymul(d, d))))

    def _recip(self):
        return Rational(self.den, self.num)

    def source(self, var="z"):
        return f"({self.num.source(var)}/{self.den.source(var)})"


def mobius_fn(a: complex) -> Rational:
    """The disc automorphism ``(a - z)/(1 - conj(a) z)`` as a rational node."""
    a = complex(a)
    if abs(a) >= 1:
        raise DiscDomainError(f"Mobius parameter must lie in the unit disc, got {a}")
    return Rational(Poly((a, -1.0)), Poly((1.0, -a.conjugate())))


@dataclass(frozen=True, eq=False)
class BranchPower(MeroFn):
    """``(1 - z)^(-p)`` on the principal branch; needs ``Re(1 - z) > 0``."""

    p: float

    def _eval(self, z):
        w = 1.0 - z
        if np.any(~(w.real > 0)):
            raise DiscDomainError("branch power evaluated where Re(1 - z) <= 0")
        return np.power(w, -self.p)

    def _diff(self):
        if self.p == 0:
            return _const(0.0)
        return Scale(self.p, BranchPower(self.p + 1.0))

    def _recip(self):
        return BranchPower(-self.p)

    def source(self, var="z"):
        if var == "z":
            return f"powp({self.p!r})"
        return f"powp({self.p!r}, {var})"


@dataclass(frozen=True, eq=False)
class Tan(MeroFn):
    def _eval(self, z):
        return np.tan(z)

    def _diff(self):
        return add(_const(1.0), IntPower(Tan(), 2))

    def _recip(self):
        return Cot()

    def source(self, var="z"):
        return f"tan({var})"


@dataclass(frozen=True, eq=False)
class Cot(MeroFn):
    def _eval(self, z):
        return safe_divide(np.cos(z), np.sin(z))

    def _diff(self):
        return neg(add(_const(1.0), IntPower(Cot(), 2)))

    def _recip(self):
        return Tan()

    def source(self, var="z"):
        return f"recip(tan({var}))"


@dataclass(frozen=True, eq=False)
class Compose(MeroFn):
    """``outer(inner(z))``; Mobius pre/post-composition and ``tan(g)`` use this."""

    outer: MeroFn
    inner: MeroFn

    def _eval(self, z):
        return self.outer._eval(np.asarray(self.inner._eval(z), dtype=complex))

    def _diff(self):
        return mul(Compose(self.outer.d, self.inner), self.inner.d)

    def _recip(self):
        return Compose(self.outer.recip, self.inner)

    def source(self, var="z"):
        return self.outer.source(f"{self.inner.source(var)}")


@dataclass(frozen=True, eq=False)
class IntPower(MeroFn):
    base: MeroFn
    m: int

    def _eval(self, z):
        b = self.base._eval(z)
        if self.m >= 0:
            return b**self.m
        return safe_divide(np.ones_like(b), b ** (-self.m))

    def _diff(self):
        if self.m == 0:
            return _const(0.0)
        if self.m == 1:
            return self.base.d
        return mul(Scale(float(self.m), IntPower(self.base, self.m - 1)), self.base.d)

    def _recip(self):
        return IntPower(self.base.recip, self.m)

    def source(self, var="z"):
        return f"({self.base.source(var)}^{self.m})"


@dataclass(frozen=True, eq=False)
class Scale(MeroFn):
    c: complex
    f: MeroFn

    def _eval(self, z):
        return complex(self.c) * self.f._eval(z)

    def _diff(self):
        return Scale(self.c, self.f.d)

    def _recip(self):
        return Scale(1.0 / complex(self.c), self.f.recip)

    def source(self, var="z"):
        return f"({_fmt_number(self.c)}*{self.f.source(var)})"


@dataclass(frozen=True, eq=False)
class Sum(MeroFn):
    terms: tuple

    def _eval(self, z):
        out = self.terms[0]._eval(z)
        for t in self.terms[1:]:
            out = out + t._eval(z)
        return out

    def _diff(self):
        out = self.terms[0].d
        for t in self.terms[1:]:
            out = add(out, t.d)
        return out

    def source(self, var="z"):
        return "(" + " + ".join(t.source(var) for t in self.terms) + ")"


@dataclass(frozen=True, eq=False)
class Product(MeroFn):
    factors: tuple

    def _eval(self, z):
        out = self.factors[0]._eval(z)
        for t in self.factors[1:]:
            out = out * t._eval(z)
        return out

    def _diff(self):
        terms = []
        for i, fi in enumerate(self.factors):
            others = self.factors[:i] + self.factors[i + 1:]
            term = fi.d
            for o in others:
                term = mul(term, o)
            terms.append(term)
        out = terms[0]
        for t in terms[1:]:
            out = add(out, t)
        return out

    def _recip(self):
        return Product(tuple(f.recip for f in self.factors))

    def source(self, var="z"):
        return "(" + "*".join(f.source(var) for f in self.factors) + ")"


@dataclass(frozen=True, eq=False)
class Quotient(MeroFn):
    num: MeroFn
    den: MeroFn

    def _eval(self, z):
        return safe_divide(self.num._eval(z), self.den._eval(z))

    def _diff(self):
        top = add(mul(self.num.d, self.den), neg(mul(self.num, self.den.d)))
        return Quotient(top, IntPower(self.den, 2))

    def _recip(self):
        return Quotient(self.den, self.num)

    def source(self, var="z"):
        return f"({self.num.source(var)}/{self.den.source(var)})"


# -- arithmetic with light folding (no GCD reduction) -------------------------

def _as_rational(f):
    if isinstance(f, Poly):
        return f, _const(1.0)
    if isinstance(f, Rational):
        return f.num, f.den
    return None


def _pmul(a: Poly, b: Poly) -> Poly:
    return Poly(tuple(npoly.polymul(np.array(a.coeffs), np.array(b.coeffs))))


def _padd(a: Poly, b: Poly) -> Poly:
    return Poly(tuple(npoly.polyadd(np.array(a.coeffs), np.array(b.coeffs))))


def _is_zero(f) -> bool:
    return isinstance(f, Poly) and f.is_zero()


def _const_value(f):
    if isinstance(f, Poly) and f.is_constant():
        return f.coeffs[0]
    return None


def add(a: MeroFn, b: MeroFn) -> MeroFn:
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    if isinstance(a, Poly) and isinstance(b, Poly):
        return _padd(a, b)
    ra, rb = _as_rational(a), _as_rational(b)
    if ra and rb:
        if isinstance(a, Poly):
            return Rational(_padd(_pmul(a, rb[1]), rb[0]), rb[1])
        if isinstance(b, Poly):
            return Rational(_padd(ra[0], _pmul(b, ra[1])), ra[1])
        return Rational(_padd(_pmul(ra[0], rb[1]), _pmul(rb[0], ra[1])), _pmul(ra[1], rb[1]))
    terms = (a.terms if isinstance(a, Sum) else (a,)) + (b.terms if isinstance(b, Sum) else (b,))
    return Sum(terms)


def neg(a: MeroFn) -> MeroFn:
    if isinstance(a, Poly):
        return Poly(tuple(-c for c in a.coeffs))
    if isinstance(a, Rational):
        return Rational(neg(a.num), a.den)
    if isinstance(a, Scale):
        return Scale(-complex(a.c), a.f)
    return Scale(-1.0, a)


def mul(a: MeroFn, b: MeroFn) -> MeroFn:
    if _is_zero(a) or _is_zero(b):
        return _const(0.0)
    ca, cb = _const_value(a), _const_value(b)
    if ca == 1:
        return b
    if cb == 1:
        return a
    if isinstance(a, Poly) and isinstance(b, Poly):
        return _pmul(a, b)
    ra, rb = _as_rational(a), _as_rational(b)
    if ra and rb:
        return Rational(_pmul(ra[0], rb[0]), _pmul(ra[1], rb[1]))
    if ca is not None:
        return Scale(ca * complex(b.c), b.f) if isinstance(b, Scale) else Scale(ca, b)
    if cb is not None:
        return Scale(cb * complex(a.c), a.f) if isinstance(a, Scale) else Scale(cb, a)
    factors = (a.factors if isinstance(a, Product) else (a,)) + (b.factors if isinstance(b, Product) else (b,))
    return Product(factors)


def div(a: MeroFn, b: MeroFn) -> MeroFn:
    cb = _const_value(b)
    if cb is not None:
        if cb == 0:
            raise ZeroDivisionError("division by the zero function")
        return mul(a, _const(1.0 / cb))
    ra, rb = _as_rational(a), _as_rational(b)
    if ra and rb:
        return Rational(_pmul(ra[0], rb[1]), _pmul(ra[1], rb[0]))
    return Quotient(a, b)


# -- builders -----------------------------------------------------------------

def const(c) -> Poly:
    return _const(c)


def identity() -> Poly:
    return Poly((0.0, 1.0))


def poly(*coeffs) -> Poly:
    return Poly(tuple(coeffs))


def rational(num, den) -> Rational:
    return Rational(Poly(tuple(num)), Poly(tuple(den)))


def tan_of(g: MeroFn) -> MeroFn:
    return Compose(Tan(), g)


def scaled_tan(kappa: complex) -> MeroFn:
    """``tan(kappa * z)``."""
    return Compose(Tan(), Poly((0.0, kappa)))


def mobius_post(a: complex, g: MeroFn) -> MeroFn:
    return Compose(mobius_fn(a), g)


def mobius_pre(f: MeroFn, a: complex) -> MeroFn:
    return Compose(f, mobius_fn(a))


# -- public operations ----------------------------------------------------------

def check_disc(z) -> np.ndarray:
    arr = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise DiscDomainError("points must have finite components")
    if np.any(np.abs(arr) >= 1.0):
        raise DiscDomainError("points must lie in the open unit disc |z| < 1")
    return arr


def derivative(f: MeroFn, order: int = 1) -> MeroFn:
    """Exact symbolic derivative of the given order."""
    if order < 0:
        raise ValueError("derivative order must be nonnegative")
    if order > f.max_order:
        raise UnsupportedOrderError(f"order {order} exceeds the supported maximum {f.max_order}")
    if order == 0:
        return f
    out = f
    for _ in range(order):
        out = out.d
    out = copy.copy(out)
    # drop memoised children of the copy so the limit is attached to a fresh object
    out.__dict__.pop("d", None)
    out.__dict__.pop("recip", None)
    object.__setattr__(out, "_max_order", f.max_order - order)
    return out


def eval_extended(f: MeroFn, z: complex) -> Extended:
    """Value of ``f`` at ``z`` on the Riemann sphere."""
    z = complex(check_disc(z))
    v = f(z)
    if np.isfinite(v.real) and np.isfinite(v.imag):
        return Extended(v)
    w = f.recip(z)
    if np.isfinite(w.real) and np.isfinite(w.imag):
        if abs(w) <= 1e-6:
            return Extended.infinity()
        return Extended(1.0 / w)
    raise IndeterminateError(f"indeterminate value of {f} at z={z}")


def _sharp(v, dv):
    return np.abs(dv) / (1.0 + np.abs(v) ** 2)


def spherical(f: MeroFn, z):
    """Spherical derivative ``|f'|/(1+|f|^2)``, finite and continuous at poles."""
    arr = check_disc(z)
    flat = arr.reshape(-1)
    with np.errstate(all="ignore"):
        v = np.asarray(f(flat))
        dv = np.asarray(f.d(flat))
        out = _sharp(v, dv)
        switch = ~(np.isfinite(v) & np.isfinite(dv)) | (np.abs(v) > 1.0)
        if np.any(switch):
            zs = flat[switch]
            out[switch] = _sharp(f.recip(zs), f.recip.d(zs))
    bad = ~np.isfinite(out)
    if np.any(bad):
        raise IndeterminateError(f"spherical derivative of {f} undefined at {flat[bad][:3]}")
    out = out.reshape(arr.shape)
    return float(out) if arr.ndim == 0 else out


def power_fn(f: MeroFn, m: int) -> MeroFn:
    """The ``m``-th power ``f^m`` as a node (derivative via ``m f^(m-1) f'``)."""
    if m < 1:
        raise ValueError("power must be a positive integer")
    return IntPower(f, int(m))


def power_chain_factor(w, m: int):
    """``m|w|^(m-1)(1+|w|^2)/(1+|w|^(2m))``, the factor with ``(f^m)^# = factor(f) f^#``.

    The expression is invariant under ``w -> 1/w``; evaluating it at
    ``min(|w|, 1/|w|)`` avoids overflow.
    """
    t = np.abs(np.asarray(w, dtype=complex))
    with np.errstate(divide="ignore"):
        u = np.where(t > 1.0, 1.0 / t, t)
    return m * u ** (m - 1) * (1.0 + u**2) / (1.0 + u ** (2 * m))
