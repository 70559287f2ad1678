"""Scalar expressions over chart coordinates.

Grammar (whitespace is insignificant)::

    expr     := term (("+" | "-") term)*
    term     := unary (("*" | "/") unary)*
    unary    := "-" unary | power
    power    := primary ["^" exponent]
    exponent := ["-"] NUMBER | "(" ["-"] NUMBER ")"
    primary  := NUMBER | NAME | FUNC "(" expr ")" | "(" expr ")"

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``.  Exponents
are numeric constants and ``^`` does not chain (write ``(x^2)^3``).  Implicit
multiplication (``2x``) is a syntax error.  NAME is a chart coordinate or the
constant ``pi``; FUNC is one of sin, cos, tan, exp, log, sqrt, sinh, cosh.

Evaluation is vectorized over a batch of points: ``points`` has shape
``(..., n)`` and results have shape ``(...)``.  Non-finite results are
errors, never values.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DomainError, ExprSyntaxError, UnknownFunctionError, UnknownIdentifierError
from .tensor import FUNCTION_NAMES, ChartSpec, as_points


def _cached_hash(self) -> int:
    return self._hash


def _init_hash(self, *key) -> None:
    object.__setattr__(self, "_hash", hash((type(self).__name__,) + key))


# Nodes hash structurally (source offsets excluded) and cache the hash, so
# identical subtrees can share one evaluation.


@dataclass(frozen=True)
class Const:
    value: float
    pos: int = field(default=0, compare=False, repr=False)

    def __post_init__(self):
        _init_hash(self, self.value)

    __hash__ = _cached_hash


@dataclass(frozen=True)
class Coord:
    name: str
    index: int
    pos: int = field(default=0, compare=False, repr=False)

    def __post_init__(self):
        _init_hash(self, self.name, self.index)

    __hash__ = _cached_hash


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or a function name
    arg: "Node"
    pos: int = field(default=0, compare=False, repr=False)

    def __post_init__(self):
        _init_hash(self, self.op, self.arg)

    __hash__ = _cached_hash


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * /
    left: "Node"
    right: "Node"
    pos: int = field(default=0, compare=False, repr=False)

    def __post_init__(self):
        _init_hash(self, self.op, self.left, self.right)

    __hash__ = _cached_hash


@dataclass(frozen=True)
class Power:
    base: "Node"
    exponent: float
    pos: int = field(default=0, compare=False, repr=False)

    def __post_init__(self):
        _init_hash(self, self.base, self.exponent)

    __hash__ = _cached_hash


Node = Union[Const, Coord, Unary, Binary, Power]


@dataclass(frozen=True)
class Expression:
    """A parsed expression bound to the chart whose coordinates it references."""

    root: Node
    chart: ChartSpec = field(compare=False)
    source: str = field(default="", compare=False)

    def __str__(self) -> str:
        return to_source(self)


# --- lexing ----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


@dataclass
class _Token:
    kind: str  # "num", "name", "op", "end"
    text: str
    pos: int  # character offset


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    i = 0
    n = len(source)
    while True:
        while i < n and source[i].isspace():
            i += 1
        if i >= n:
            break
        m = _TOKEN_RE.match(source, i)
        if m is None or m.end() == i:
            raise ExprSyntaxError(f"unexpected character {source[i]!r}", _byte_offset(source, i), source)
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(kind), m.start(kind)))
        i = m.end()
    tokens.append(_Token("end", "", n))
    return tokens


def _byte_offset(source: str, char_index: int) -> int:
    return len(source[:char_index].encode("utf-8"))


class _Parser:
    def __init__(self, source: str, chart: ChartSpec):
        self.source = source
        self.chart = chart
        self.tokens = _tokenize(source)
        self.i = 0
        self.coords = {name: k for k, name in enumerate(chart.coordinate_names)}

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: _Token | None = None, cls=ExprSyntaxError):
        tok = tok or self.tok
        return cls(message, _byte_offset(self.source, tok.pos), self.source)

    def describe(self, tok: _Token) -> str:
        return "end of input" if tok.kind == "end" else repr(tok.text)

    def accept_op(self, text: str) -> _Token | None:
        tok = self.tok
        if tok.kind == "op" and tok.text == text:
            self.i += 1
            return tok
        return None

    def expect_op(self, text: str) -> _Token:
        tok = self.accept_op(text)
        if tok is None:
            raise self.error(f"expected {text!r}, found {self.describe(self.tok)}")
        return tok

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.describe(self.tok)}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            tok = self.tok
            self.i += 1
            node = Binary(tok.text, node, self.term(), tok.pos)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            tok = self.tok
            self.i += 1
            node = Binary(tok.text, node, self.unary(), tok.pos)
        return node

    def unary(self) -> Node:
        tok = self.accept_op("-")
        if tok is not None:
            return Unary("neg", self.unary(), tok.pos)
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        tok = self.accept_op("^")
        if tok is None:
            return base
        node = Power(base, self.exponent(), tok.pos)
        if self.tok.kind == "op" and self.tok.text == "^":
            raise self.error("chained '^' is not allowed; parenthesize the base")
        return node

    def exponent(self) -> float:
        paren = self.accept_op("(")
        sign = -1.0 if self.accept_op("-") else 1.0
        tok = self.tok
        if tok.kind != "num":
            raise self.error(f"exponent must be a numeric constant, found {self.describe(tok)}")
        self.i += 1
        value = sign * self.number(tok)
        if paren:
            self.expect_op(")")
        return value

    def number(self, tok: _Token) -> float:
        value = float(tok.text)
        if not math.isfinite(value):
            raise self.error(f"numeric literal {tok.text!r} is not finite", tok)
        return value

    def primary(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Const(self.number(tok), tok.pos)
        if tok.kind == "name":
            self.i += 1
            if self.tok.kind == "op" and self.tok.text == "(":
                if tok.text not in FUNCTION_NAMES:
                    raise self.error(f"unknown function {tok.text!r}", tok, UnknownFunctionError)
                self.i += 1
                arg = self.expr()
                self.expect_op(")")
                return Unary(tok.text, arg, tok.pos)
            if tok.text in self.coords:
                return Coord(tok.text, self.coords[tok.text], tok.pos)
            if tok.text == "pi":
                return Const(math.pi, tok.pos)
            if tok.text in FUNCTION_NAMES:
                raise self.error(f"function {tok.text!r} needs a parenthesized argument", tok)
            raise self.error(f"unknown identifier {tok.text!r}", tok, UnknownIdentifierError)
        if self.accept_op("("):
            node = self.expr()
            self.expect_op(")")
            return node
        raise self.error(f"expected an operand, found {self.describe(tok)}")


def parse(source: str, chart: ChartSpec) -> Expression:
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0, source)
    return Expression(_Parser(source, chart).parse(), chart, source)


def constant(value: float, chart: ChartSpec) -> Expression:
    return Expression(Const(float(value)), chart, repr(float(value)))


# --- printing --------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_PREC_NEG = 3
_PREC_ATOM = 5


def _format_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _prec(node: Node) -> int:
    if isinstance(node, Binary):
        return _PREC[node.op]
    if isinstance(node, Unary) and node.op == "neg":
        return _PREC_NEG
    if isinstance(node, Power):
        return 4
    if isinstance(node, Const) and node.value < 0:
        return _PREC_NEG
    return _PREC_ATOM


def _show(node: Node, min_prec: int) -> str:
    text = _render(node)
    return f"({text})" if _prec(node) < min_prec else text


def _render(node: Node) -> str:
    if isinstance(node, Const):
        return _format_number(node.value)
    if isinstance(node, Coord):
        return node.name
    if isinstance(node, Unary):
        if node.op == "neg":
            return "-" + _show(node.arg, _PREC_NEG)
        return f"{node.op}({_render(node.arg)})"
    if isinstance(node, Binary):
        p = _PREC[node.op]
        return f"{_show(node.left, p)} {node.op} {_show(node.right, p + 1)}"
    if isinstance(node, Power):
        return f"{_show(node.base, _PREC_ATOM)}^{_format_number(node.exponent)}"
    raise TypeError(f"not an expression node: {node!r}")


def to_source(expr: Expression | Node) -> str:
    """Print with the minimum parentheses needed to re-parse to the same tree."""
    return _render(expr.root if isinstance(expr, Expression) else expr)


# --- evaluation ------------------------------------------------------------


@dataclass
class Dual2:
    """Second-order dual number: value, gradient and Hessian.

    Arrays carry batch axes in front: ``value`` (...), ``first`` (..., n),
    ``second`` (..., n, n).
    """

    value: np.ndarray
    first: np.ndarray | None = None
    second: np.ndarray | None = None


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


def _chain(u: Dual2, value, d1, d2) -> Dual2:
    """Compose a scalar function with derivatives (d1, d2) at u onto u."""
    if u.first is None:
        return Dual2(value)
    d1 = np.asarray(d1)[..., None]
    first = d1 * u.first
    second = np.asarray(d2)[..., None, None] * _outer(u.first, u.first) + d1[..., None] * u.second
    return Dual2(value, first, second)


class _Evaluator:
    """Evaluates one or more expressions at a batch of points.

    Structurally identical subtrees are evaluated once.  With ``strict`` off,
    finiteness is only verified on the final results; a failure there reruns
    the offending expression strictly to locate the node.
    """

    def __init__(self, expr: Expression, points: np.ndarray, derivatives: bool, strict: bool = False):
        self.expr = expr
        self.points = points
        self.n = points.shape[-1]
        self.derivatives = derivatives
        self.strict = strict
        self.memo: dict = {}

    def fail(self, message: str, node: Node, mask=None):
        point = None
        if mask is not None:
            bad = np.argwhere(np.broadcast_to(mask, self.points.shape[:-1]))
            if len(bad):
                point = self.points[tuple(bad[0])]
        elif self.points.ndim == 1:
            point = self.points
        offset = _byte_offset(self.expr.source, node.pos) if self.expr.source else node.pos
        return DomainError(message, offset, self.expr.source, point)

    def check_finite(self, r: Dual2, node: Node, what: str) -> Dual2:
        if not self.strict:
            return r
        if not np.all(np.isfinite(r.value)):
            raise self.fail(f"non-finite value in {what}", node, ~np.isfinite(r.value))
        if r.first is not None:
            ok = np.all(np.isfinite(r.first), axis=-1) & np.all(np.isfinite(r.second), axis=(-2, -1))
            if not np.all(ok):
                raise self.fail(f"non-finite derivative in {what}", node, ~ok)
        return r

    def visit(self, node: Node) -> Dual2:
        r = self.memo.get(node)
        if r is None:
            r = self.memo[node] = self._visit(node)
        return r

    def _visit(self, node: Node) -> Dual2:
        with np.errstate(all="ignore"):
            if isinstance(node, Const):
                return self.const(node.value)
            if isinstance(node, Coord):
                value = self.points[..., node.index]
                if not self.derivatives:
                    return Dual2(value)
                first = np.zeros(self.n)
                first[node.index] = 1.0
                return Dual2(value, first, np.zeros((self.n, self.n)))
            if isinstance(node, Unary):
                return self.unary(node, self.visit(node.arg))
            if isinstance(node, Binary):
                return self.binary(node, self.visit(node.left), self.visit(node.right))
            if isinstance(node, Power):
                return self.power(node, self.visit(node.base))
        raise TypeError(f"not an expression node: {node!r}")

    def const(self, value: float) -> Dual2:
        v = np.float64(value)
        if not self.derivatives:
            return Dual2(v)
        return Dual2(v, np.zeros(self.n), np.zeros((self.n, self.n)))

    def unary(self, node: Unary, u: Dual2) -> Dual2:
        x = u.value
        op = node.op
        if op == "neg":
            if u.first is None:
                return Dual2(-x)
            return Dual2(-x, -u.first, -u.second)
        if op == "log":
            bad = x <= 0
            if np.any(bad):
                raise self.fail("log of non-positive value", node, bad)
            r = _chain(u, np.log(x), 1.0 / x, -1.0 / (x * x))
        elif op == "sqrt":
            bad = x < 0 if u.first is None else x <= 0
            if np.any(bad):
                what = "sqrt of negative value" if np.any(x < 0) else "sqrt is not differentiable at 0"
                raise self.fail(what, node, bad)
            s = np.sqrt(x)
            r = _chain(u, s, 0.5 / s, -0.25 / (s * x))
        elif op == "sin":
            s, c = np.sin(x), np.cos(x)
            r = _chain(u, s, c, -s)
        elif op == "cos":
            s, c = np.sin(x), np.cos(x)
            r = _chain(u, c, -s, -c)
        elif op == "tan":
            t = np.tan(x)
            sec2 = 1.0 + t * t
            r = _chain(u, t, sec2, 2.0 * t * sec2)
        elif op == "exp":
            e = np.exp(x)
            r = _chain(u, e, e, e)
        elif op == "sinh":
            sh, ch = np.sinh(x), np.cosh(x)
            r = _chain(u, sh, ch, sh)
        elif op == "cosh":
            sh, ch = np.sinh(x), np.cosh(x)
            r = _chain(u, ch, sh, ch)
        else:
            raise self.fail(f"unknown function {op!r}", node)
        return self.check_finite(r, node, op)

    def binary(self, node: Binary, a: Dual2, b: Dual2) -> Dual2:
        op = node.op
        d = a.first is not None
        if op == "+":
            r = Dual2(a.value + b.value)
            if d:
                r.first, r.second = a.first + b.first, a.second + b.second
        elif op == "-":
            r = Dual2(a.value - b.value)
            if d:
                r.first, r.second = a.first - b.first, a.second - b.second
        elif op == "*":
            value = a.value * b.value
            if not d:
                r = Dual2(value)
            else:
                av, bv = np.asarray(a.value)[..., None], np.asarray(b.value)[..., None]
                first = a.first * bv + av * b.first
                second = (
                    a.second * bv[..., None]
                    + _outer(a.first, b.first)
                    + _outer(b.first, a.first)
                    + av[..., None] * b.second
                )
                r = Dual2(value, first, second)
        elif op == "/":
            bad = b.value == 0
            if np.any(bad):
                raise self.fail("division by zero", node, bad)
            q = a.value / b.value
            if not d:
                r = Dual2(q)
            else:
                # a = q b, differentiated once and twice
                qv, bv = np.asarray(q)[..., None], np.asarray(b.value)[..., None]
                first = (a.first - qv * b.first) / bv
                second = (
                    a.second - qv[..., None] * b.second - _outer(first, b.first) - _outer(b.first, first)
                ) / bv[..., None]
                r = Dual2(q, first, second)
        else:
            raise self.fail(f"unknown operator {op!r}", node)
        return self.check_finite(r, node, f"'{op}'")

    def power(self, node: Power, u: Dual2) -> Dual2:
        k = node.exponent
        x = u.value
        integral = float(k).is_integer()
        if k < 0:
            bad = x == 0
            if np.any(bad):
                raise self.fail("zero raised to a negative power", node, bad)
        if not integral:
            bad = x < 0
            if np.any(bad):
                raise self.fail("negative base with non-integer exponent", node, bad)
        value = np.power(x, k)
        if u.first is None:
            return self.check_finite(Dual2(value), node, "'^'")
        if not integral and k < 2 and np.any(x == 0):
            raise self.fail("power is not twice differentiable at 0", node, x == 0)
        if k == 0:
            d1 = d2 = np.zeros_like(x)
        elif k == 1:
            d1 = np.ones_like(x)
        else:
            d1 = k * np.power(x, k - 1)
        if k in (0, 1):
            d2 = np.zeros_like(x)
        elif k == 2:
            d2 = np.full_like(x, 2.0)
        else:
            d2 = k * (k - 1) * np.power(x, k - 2)
        return self.check_finite(_chain(u, value, d1, d2), node, "'^'")

    def run(self, expr: Expression | None = None) -> Dual2:
        expr = expr or self.expr
        self.expr = expr
        r = self.visit(expr.root)
        if not self.strict and not _all_finite(r):
            _Evaluator(expr, self.points, self.derivatives, strict=True).visit(expr.root)
            raise DomainError("non-finite result", 0, expr.source)  # strict pass always raises first
        batch = self.points.shape[:-1]
        value = np.broadcast_to(r.value, batch).copy() if batch else np.float64(r.value)
        if r.first is None:
            return Dual2(value)
        first = np.broadcast_to(r.first, batch + (self.n,)).copy()
        second = np.broadcast_to(r.second, batch + (self.n, self.n)).copy()
        return Dual2(value, first, second)


def _all_finite(r: Dual2) -> bool:
    ok = bool(np.all(np.isfinite(r.value)))
    if ok and r.first is not None:
        ok = bool(np.all(np.isfinite(r.first)) and np.all(np.isfinite(r.second)))
    return ok


def _prepare(expr: Expression, points) -> np.ndarray:
    return as_points(points, expr.chart.dimension)


def evaluate(expr: Expression, points) -> np.ndarray | float:
    """Value of ``expr`` at one point (returns a float) or a batch of points."""
    pts = _prepare(expr, points)
    value = _Evaluator(expr, pts, derivatives=False).run().value
    return float(value) if pts.ndim == 1 else value


def evaluate_dual2(expr: Expression, points) -> Dual2:
    """Value, exact gradient and exact Hessian by second-order dual arithmetic.

    The value part is computed by exactly the same floating-point operations as
    :func:`evaluate`, so the two agree bit for bit.
    """
    pts = _prepare(expr, points)
    return _Evaluator(expr, pts, derivatives=True).run()


def evaluate_many(exprs, points, derivatives: bool = False) -> list[Dual2]:
    """Evaluate several expressions on one chart, sharing common subtrees.

    Returns one :class:`Dual2` per expression (``first``/``second`` are
    ``None`` unless ``derivatives``).
    """
    exprs = list(exprs)
    if not exprs:
        return []
    pts = _prepare(exprs[0], points)
    ev = _Evaluator(exprs[0], pts, derivatives)
    return [ev.run(e) for e in exprs]


def evaluate_constant(source: str) -> float:
    """Evaluate a coordinate-free expression such as ``"pi/3"``."""
    chart = ChartSpec(("_",))
    return evaluate(parse(source, chart), [0.0])
