"""Expression language for functions of ``z`` and radial weights of ``r``.

Grammar (whitespace insensitive, binary operators left associative)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := ('+' | '-') factor | atom ('^' int)?
    atom   := var | literal | '(' expr ')' | call
    call   := 'tan' '(' expr ')' | 'recip' '(' expr ')'
            | 'powp' '(' real (',' expr)? ')' | 'mobius' '(' expr ')' '(' expr ')'

Literals are ``2``, ``0.5``, ``1e-3``, ``3i`` and ``i``; ``a+bi`` is ordinary
addition.  ``powp(p)`` is ``(1-z)^-p`` and ``powp(p, g)`` is ``(1-g)^-p``.
The argument of ``mobius`` must be a constant inside the unit disc.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .. import fnkit
from ..classes import RadialWeight, SmoothIncreasing
from ..fnkit import MeroFn

FUNCTION, WEIGHT = "function", "weight"
VARIABLE = {FUNCTION: "z", WEIGHT: "r"}


class ParseError(ValueError):
    """Base class; carries a 1-based line and column."""

    kind = "parse error"

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{self.kind} at line {line}, column {column}: {message}")
        self.message, self.line, self.column = message, line, column


class LexError(ParseError):
    kind = "lexical error"


class ExprSyntaxError(ParseError):
    kind = "syntax error"


class ContextError(ParseError):
    kind = "context error"


# -- AST ------------------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: complex


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    k: int


@dataclass(frozen=True)
class Call:
    """``tan``/``recip`` take ``arg``; ``powp`` has real ``param``; ``mobius`` complex ``param``."""

    name: str
    arg: object | None
    param: complex | None = None


# -- lexer ------------------------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?i?)
  | (?P<name>[A-Za-z_]\w*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # num, name, op, end
    text: str
    line: int
    column: int


def tokenize(source: str) -> list[Token]:
    out, pos, line, line_start = [], 0, 1, 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise LexError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind, text = m.lastgroup, m.group()
        if kind == "ws":
            for i, ch in enumerate(text):
                if ch == "\n":
                    line, line_start = line + 1, pos + i + 1
        else:
            out.append(Token(kind, text, line, pos - line_start + 1))
        pos = m.end()
    out.append(Token("end", "", line, pos - line_start + 1))
    return out


def _number(text: str) -> complex:
    if text.endswith("i"):
        return complex(0.0, float(text[:-1]))
    return complex(float(text), 0.0)


# -- parser -------------------------------------------------------------------------------------

class _Parser:
    def __init__(self, source: str, context: str):
        if context not in VARIABLE:
            raise ValueError(f"unknown context {context!r}")
        self.toks = tokenize(source)
        self.i = 0
        self.context = context

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.tok
        if t.text != text or t.kind == "num":
            found = "end of input" if t.kind == "end" else repr(t.text)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", t.line, t.column)
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.tok.text!r}", self.tok.line, self.tok.column)
        return node

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.advance().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self.tok.kind == "op" and self.tok.text in ("+", "-"):
            sign = self.advance().text
            arg = self.factor()
            return Neg(arg) if sign == "-" else arg
        node = self.atom()
        if self.tok.text == "^":
            self.advance()
            node = Pow(node, self.integer())
        return node

    def integer(self) -> int:
        sign = 1
        if self.tok.text in ("+", "-"):
            sign = -1 if self.advance().text == "-" else 1
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            raise ExprSyntaxError("exponent must be an integer literal", t.line, t.column)
        self.advance()
        return sign * int(t.text)

    def real(self) -> float:
        sign = 1.0
        if self.tok.text in ("+", "-"):
            sign = -1.0 if self.advance().text == "-" else 1.0
        t = self.tok
        if t.kind != "num" or t.text.endswith("i"):
            raise ExprSyntaxError("powp takes a real literal", t.line, t.column)
        self.advance()
        return sign * float(t.text)

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(_number(t.text))
        if t.kind == "op" and t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if t.kind == "name":
            return self.name()
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise ExprSyntaxError(f"expected an operand, found {found}", t.line, t.column)

    def name(self):
        t = self.advance()
        if t.text == "i":
            return Num(1j)
        if t.text in ("z", "r"):
            if t.text != VARIABLE[self.context]:
                raise ContextError(f"variable {t.text!r} is not allowed in a {self.context} expression",
                                   t.line, t.column)
            return Var(t.text)
        if t.text in ("tan", "recip"):
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return Call(t.text, arg)
        if t.text in ("powp", "mobius") and self.context == WEIGHT:
            raise ContextError(f"{t.text} is a function of z and cannot appear in a weight",
                               t.line, t.column)
        if t.text == "powp":
            self.expect("(")
            p = self.real()
            arg = None
            if self.tok.text == ",":
                self.advance()
                arg = self.expr()
            self.expect(")")
            return Call("powp", arg, complex(p))
        if t.text == "mobius":
            self.expect("(")
            at = self.tok
            a = _constant(self.expr(), at)
            self.expect(")")
            if abs(a) >= 1:
                raise ContextError("mobius parameter must lie in the unit disc", at.line, at.column)
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return Call("mobius", arg, a)
        raise ExprSyntaxError(f"unknown name {t.text!r}", t.line, t.column)


def _constant(node, at: Token) -> complex:
    if _has_var(node):
        raise ContextError("expected a constant", at.line, at.column)
    return complex(evaluate(node, 0.0))


def _has_var(node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, Num):
        return False
    if isinstance(node, Neg):
        return _has_var(node.arg)
    if isinstance(node, BinOp):
        return _has_var(node.left) or _has_var(node.right)
    if isinstance(node, Pow):
        return _has_var(node.base)
    if node.arg is None:
        return True  # bare powp(p) is a function of z
    return _has_var(node.arg)


def parse_expr(source: str, context: str = FUNCTION):
    """Parse ``source``; raises a :class:`ParseError` subclass with line/column."""
    return _Parser(source, context).parse()


# -- printing and evaluation -----------------------------------------------------------------

def _literal(c: complex) -> str:
    c = complex(c)
    if c.imag == 0:
        s = repr(c.real)
    elif c.real == 0:
        s = f"{c.imag!r}i"
    else:
        s = f"{c.real!r}+{c.imag!r}i".replace("+-", "-")
    return f"({s})"


def to_source(node) -> str:
    """Fully parenthesised source that parses back to an equivalent tree."""
    if isinstance(node, Num):
        return _literal(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Pow):
        return f"({to_source(node.base)}^{node.k})"
    if node.name == "powp":
        p = repr(node.param.real)
        return f"powp({p})" if node.arg is None else f"powp({p}, {to_source(node.arg)})"
    if node.name == "mobius":
        return f"mobius({_literal(node.param)})({to_source(node.arg)})"
    return f"{node.name}({to_source(node.arg)})"


def evaluate(node, x):
    """Evaluate directly with numpy (independent of the MeroFn conversion)."""
    x = np.asarray(x, dtype=complex)
    if isinstance(node, Num):
        return np.full(x.shape, node.value, dtype=complex)
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -evaluate(node.arg, x)
    if isinstance(node, BinOp):
        a, b = evaluate(node.left, x), evaluate(node.right, x)
        return {"+": np.add, "-": np.subtract, "*": np.multiply, "/": np.divide}[node.op](a, b)
    if isinstance(node, Pow):
        b = evaluate(node.base, x)
        return b**node.k if node.k >= 0 else 1.0 / b ** (-node.k)
    if node.name == "tan":
        return np.tan(evaluate(node.arg, x))
    if node.name == "recip":
        return 1.0 / evaluate(node.arg, x)
    inner = x if node.arg is None else evaluate(node.arg, x)
    if node.name == "powp":
        return np.power(1.0 - inner, -node.param.real)
    a = node.param
    return (a - inner) / (1.0 - np.conj(a) * inner)


def to_merofn(node) -> MeroFn:
    if isinstance(node, Num):
        return fnkit.const(node.value)
    if isinstance(node, Var):
        return fnkit.identity()
    if isinstance(node, Neg):
        return fnkit.neg(to_merofn(node.arg))
    if isinstance(node, BinOp):
        a, b = to_merofn(node.left), to_merofn(node.right)
        return {"+": fnkit.add, "-": lambda u, v: fnkit.add(u, fnkit.neg(v)),
                "*": fnkit.mul, "/": fnkit.div}[node.op](a, b)
    if isinstance(node, Pow):
        return to_merofn(node.base) ** node.k
    if node.name == "tan":
        return fnkit.tan_of(to_merofn(node.arg))
    if node.name == "recip":
        return to_merofn(node.arg).recip
    if node.name == "powp":
        base = fnkit.BranchPower(node.param.real)
        return base if node.arg is None else fnkit.Compose(base, to_merofn(node.arg))
    return fnkit.mobius_post(node.param, to_merofn(node.arg))


def parse_function(source: str) -> MeroFn:
    return to_merofn(parse_expr(source, FUNCTION))


def _real_fn(node):
    return lambda r: np.real(evaluate(node, r))


def parse_weight(source: str) -> RadialWeight:
    return RadialWeight(_real_fn(parse_expr(source, WEIGHT)), source.strip())


def parse_phi(source: str) -> SmoothIncreasing:
    return SmoothIncreasing(_real_fn(parse_expr(source, WEIGHT)), source.strip())
