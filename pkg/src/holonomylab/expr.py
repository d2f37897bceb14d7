"""Arithmetic expressions over chart coordinates.

Metric entries, contact-form coefficients and curve coordinates are all
written in a small infix language::

    expr    := sum
    sum     := product (("+" | "-") product)*
    product := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" unary)?          # right-associative
    atom    := NUMBER | "pi" | VAR | FUNC "(" expr ")" | "(" expr ")"
    VAR     := "x1" | "x2" | ...          # 1-based coordinate index
    FUNC    := sin | cos | tan | exp | log | sqrt | abs

The exponent of ``^`` must be a literal-only subtree (no coordinates, no
``pi``, no function calls).  Expressions are immutable trees; evaluation
works on batches of points so that callers along a curve can evaluate a
whole coefficient field in one pass.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import ExprDomainError, ExprSyntaxError, UnknownIdentifierError

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs")
TAN_POLE_TOL = 1e-12


@dataclass(frozen=True)
class Num:
    value: float
    name: str | None = None


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Call]

ZERO = Num(0.0)
ONE = Num(1.0)
PI = Num(math.pi, "pi")


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)
_VAR_RE = re.compile(r"x([1-9][0-9]*)")


@dataclass
class _Token:
    kind: str
    text: str
    offset: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", _byte_offset(source, pos))
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), _byte_offset(source, pos)))
        pos = m.end()
    tokens.append(_Token("eof", "", _byte_offset(source, len(source))))
    return tokens


def _byte_offset(source: str, pos: int) -> int:
    return len(source[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, source, dim, aliases):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.dim = dim
        self.aliases = aliases

    @property
    def tok(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text):
        if self.tok.text != text or self.tok.kind == "eof":
            what = "end of input" if self.tok.kind == "eof" else repr(self.tok.text)
            raise ExprSyntaxError(f"expected {text!r}, found {what}", self.tok.offset)
        return self.advance()

    def parse(self):
        node = self.sum()
        if self.tok.kind != "eof":
            raise ExprSyntaxError(f"unexpected token {self.tok.text!r}", self.tok.offset)
        return node

    def sum(self):
        node = self.product()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.product())
        return node

    def product(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            start = self.tok.offset
            exponent = self.unary()
            if not _is_literal(exponent, allow_pi=False):
                raise ExprSyntaxError("exponent must be a constant number", start)
            return BinOp("^", base, exponent)
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.advance()
            name = tok.text
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.sum()
                self.expect(")")
                return Call(name, arg)
            if name == "pi":
                return PI
            if name in self.aliases:
                return Var(self.aliases[name])
            m = _VAR_RE.fullmatch(name)
            if m is None or (self.dim is not None and int(m.group(1)) > self.dim):
                raise UnknownIdentifierError(name, tok.offset)
            return Var(int(m.group(1)))
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.sum()
            self.expect(")")
            return node
        what = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ExprSyntaxError(f"unexpected {what}", tok.offset)


def parse(source: str, dim: int | None = None, aliases: Mapping[str, int] | None = None) -> Expr:
    """Parse ``source`` into an expression tree.

    ``dim`` bounds the admissible coordinate indices; ``aliases`` maps extra
    identifiers onto coordinate indices (curves use ``{"t": 1}``).
    """
    return _Parser(source, dim, dict(aliases or {})).parse()


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


def to_source(node: Expr, names: Mapping[int, str] | None = None) -> str:
    """Render ``node`` so that :func:`parse` rebuilds the same tree."""
    if isinstance(node, Num):
        if node.name is not None:
            return node.name
        text = repr(float(node.value))
        return f"({text})" if node.value < 0 or text.startswith("-") else text
    if isinstance(node, Var):
        if names and node.index in names:
            return names[node.index]
        return f"x{node.index}"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg, names)})"
    if isinstance(node, Neg):
        inner = to_source(node.operand, names)
        return f"-{inner}" if _prec(node.operand) >= 3 else f"-({inner})"
    p = _PREC[node.op]
    left = to_source(node.left, names)
    right = to_source(node.right, names)
    if node.op == "^":
        if _prec(node.left) <= 4:
            left = f"({left})"
        if _prec(node.right) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


# ---------------------------------------------------------------------------
# structure helpers


def _is_literal(node: Expr, allow_pi: bool = True) -> bool:
    if isinstance(node, Num):
        return allow_pi or node.name is None
    if isinstance(node, Var):
        return False
    if isinstance(node, Neg):
        return _is_literal(node.operand, allow_pi)
    if isinstance(node, BinOp):
        return _is_literal(node.left, allow_pi) and _is_literal(node.right, allow_pi)
    if isinstance(node, Call):
        return allow_pi and _is_literal(node.arg, allow_pi)
    raise TypeError(node)


def variables(node: Expr) -> frozenset[int]:
    """Coordinate indices referenced by ``node``."""
    if isinstance(node, Var):
        return frozenset((node.index,))
    if isinstance(node, Num):
        return frozenset()
    if isinstance(node, Neg):
        return variables(node.operand)
    if isinstance(node, Call):
        return variables(node.arg)
    return variables(node.left) | variables(node.right)


def is_zero(node: Expr) -> bool:
    return isinstance(node, Num) and node.value == 0.0


def substitute(node: Expr, index: int, value: Expr) -> Expr:
    """Replace every occurrence of coordinate ``index`` by ``value``."""
    if isinstance(node, Var):
        return value if node.index == index else node
    if isinstance(node, Num):
        return node
    if isinstance(node, Neg):
        return Neg(substitute(node.operand, index, value))
    if isinstance(node, Call):
        return Call(node.func, substitute(node.arg, index, value))
    return BinOp(node.op, substitute(node.left, index, value), substitute(node.right, index, value))


def as_expr(value) -> Expr:
    if isinstance(value, (Num, Var, Neg, BinOp, Call)):
        return value
    if isinstance(value, str):
        return parse(value)
    return Num(float(value))


# ---------------------------------------------------------------------------
# evaluation


def _domain_fail(message, mask, points):
    idx = int(np.flatnonzero(mask)[0])
    raise ExprDomainError(message, points[idx])


def _eval(node: Expr, points: np.ndarray) -> np.ndarray:
    if isinstance(node, Num):
        return np.full(points.shape[0], node.value)
    if isinstance(node, Var):
        if node.index > points.shape[1]:
            raise ExprDomainError(f"x{node.index} outside a {points.shape[1]}-dimensional chart")
        return points[:, node.index - 1]
    if isinstance(node, Neg):
        return -_eval(node.operand, points)
    if isinstance(node, Call):
        a = _eval(node.arg, points)
        f = node.func
        if f == "sin":
            return np.sin(a)
        if f == "cos":
            return np.cos(a)
        if f == "tan":
            c = np.cos(a)
            bad = np.abs(c) < TAN_POLE_TOL
            if bad.any():
                _domain_fail("tan at a pole", bad, points)
            return np.sin(a) / c
        if f == "exp":
            return np.exp(a)
        if f == "log":
            bad = a <= 0.0
            if bad.any():
                _domain_fail("log of a non-positive number", bad, points)
            return np.log(a)
        if f == "sqrt":
            bad = a < 0.0
            if bad.any():
                _domain_fail("sqrt of a negative number", bad, points)
            return np.sqrt(a)
        if f == "abs":
            return np.abs(a)
        raise ValueError(f"unknown function {f}")
    a = _eval(node.left, points)
    b = _eval(node.right, points)
    op = node.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        bad = b == 0.0
        if bad.any():
            _domain_fail("division by zero", bad, points)
        return a / b
    # "^": exponent is constant by construction
    c = float(b[0])
    if c == int(c) and abs(c) < 2**31:
        if c < 0:
            bad = a == 0.0
            if bad.any():
                _domain_fail("division by zero in negative power", bad, points)
        return a ** int(c)
    bad = (a < 0.0) | ((a == 0.0) & (c < 0))
    if bad.any():
        _domain_fail("fractional power of a negative number", bad, points)
    return a**c


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[np.newaxis, :]
    return pts


def evaluate_batch(node: Expr, points) -> np.ndarray:
    """Evaluate ``node`` at every row of ``points`` (shape ``(P, n)``)."""
    pts = _as_points(points)
    with np.errstate(all="ignore"):
        out = np.array(_eval(node, pts), dtype=float, copy=True)
    bad = ~np.isfinite(out)
    if bad.any():
        _domain_fail("non-finite result", bad, pts)
    return out


def evaluate(node: Expr, point) -> float:
    """Evaluate ``node`` at a single point; domain violations raise."""
    return float(evaluate_batch(node, np.asarray(point, dtype=float).reshape(1, -1))[0])


def evaluate_many(nodes: Iterable[Expr], points) -> list[np.ndarray]:
    """Batch-evaluate several trees, computing each distinct tree once."""
    pts = _as_points(points)
    cache: dict[Expr, np.ndarray] = {}
    out = []
    for node in nodes:
        if isinstance(node, Num):
            out.append(np.full(pts.shape[0], node.value))
            continue
        if node not in cache:
            cache[node] = evaluate_batch(node, pts)
        out.append(cache[node])
    return out


# ---------------------------------------------------------------------------
# differentiation


def _fold(node: Expr) -> Expr:
    if _is_literal(node) and not isinstance(node, Num):
        try:
            return Num(evaluate(node, np.zeros(1)))
        except ExprDomainError:
            return node
    return node


def add(a: Expr, b: Expr) -> Expr:
    if is_zero(a):
        return _fold(b)
    if is_zero(b):
        return _fold(a)
    return _fold(BinOp("+", a, b))


def sub(a: Expr, b: Expr) -> Expr:
    if is_zero(b):
        return _fold(a)
    if is_zero(a):
        return _fold(neg(b))
    return _fold(BinOp("-", a, b))


def mul(a: Expr, b: Expr) -> Expr:
    if is_zero(a) or is_zero(b):
        return ZERO
    if a == ONE:
        return _fold(b)
    if b == ONE:
        return _fold(a)
    return _fold(BinOp("*", a, b))


def div(a: Expr, b: Expr) -> Expr:
    if is_zero(a):
        return ZERO
    if b == ONE:
        return _fold(a)
    return _fold(BinOp("/", a, b))


def neg(a: Expr) -> Expr:
    if isinstance(a, Num) and a.name is None:
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def power(a: Expr, c: float) -> Expr:
    if c == 0.0:
        return ONE
    if c == 1.0:
        return _fold(a)
    return _fold(BinOp("^", a, Num(c)))


def differentiate(node: Expr, k: int) -> Expr:
    """Exact partial derivative with respect to coordinate ``k`` (1-based)."""
    if k < 1:
        raise ValueError(f"coordinate index must be >= 1, got {k}")
    return _diff(node, k)


def _diff(node: Expr, k: int) -> Expr:
    if isinstance(node, Num):
        return ZERO
    if isinstance(node, Var):
        return ONE if node.index == k else ZERO
    if isinstance(node, Neg):
        return neg(_diff(node.operand, k))
    if isinstance(node, Call):
        u = node.arg
        du = _diff(u, k)
        if is_zero(du):
            return ZERO
        f = node.func
        if f == "sin":
            outer = Call("cos", u)
        elif f == "cos":
            outer = neg(Call("sin", u))
        elif f == "tan":
            outer = div(ONE, power(Call("cos", u), 2.0))
        elif f == "exp":
            outer = node
        elif f == "log":
            return div(du, u)
        elif f == "sqrt":
            return div(du, mul(Num(2.0), node))
        elif f == "abs":
            outer = div(u, node)
        else:
            raise ValueError(f"unknown function {f}")
        return mul(outer, du)
    a, b = node.left, node.right
    op = node.op
    if op == "+":
        return add(_diff(a, k), _diff(b, k))
    if op == "-":
        return sub(_diff(a, k), _diff(b, k))
    if op == "*":
        return add(mul(_diff(a, k), b), mul(a, _diff(b, k)))
    if op == "/":
        da, db = _diff(a, k), _diff(b, k)
        if is_zero(db):
            return div(da, b)
        return div(sub(mul(da, b), mul(a, db)), power(b, 2.0))
    c = evaluate(b, np.zeros(1))
    return mul(mul(Num(c), power(a, c - 1.0)), _diff(a, k))


def gradient_check(node: Expr, point, h: float = 1e-5) -> float:
    """Largest gap between symbolic partials and central differences at ``point``."""
    p = np.asarray(point, dtype=float)
    worst = 0.0
    for k in range(1, p.size + 1):
        symbolic = evaluate(differentiate(node, k), p)
        hi, lo = p.copy(), p.copy()
        hi[k - 1] += h
        lo[k - 1] -= h
        # divide by the representable step, not 2h
        fd = (evaluate(node, hi) - evaluate(node, lo)) / (hi[k - 1] - lo[k - 1])
        worst = max(worst, abs(symbolic - fd))
    return worst
