"""Coefficient expressions over x1..xn and t.

Small arithmetic language with a precedence-climbing parser, a float
evaluator and exact symbolic partial derivatives.  Expressions are
immutable trees; derivatives are returned unsimplified apart from the
trivial zero/one folding done by the node constructors.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

FUNCTIONS = ("exp", "ln", "sin", "cos", "sqrt", "abs")


class ExprError(ValueError):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, pos: int, text: str):
        super().__init__(f"{message} at position {pos} in {text!r}")
        self.pos = pos
        self.text = text


class UnknownIdentifierError(ParseError):
    pass


class DomainError(ExprError):
    """Evaluation left the real domain of some subexpression."""

    def __init__(self, message: str, subexpr: "Expr"):
        super().__init__(f"{message} in {to_text(subexpr)}")
        self.subexpr = subexpr


# --------------------------------------------------------------------------
# nodes


class Expr:
    __slots__ = ()

    def eval(self, x: Sequence[float], t: float) -> float:
        raise NotImplementedError

    def __str__(self) -> str:
        return to_text(self)

    def free_vars(self) -> frozenset[str]:
        raise NotImplementedError

    def depends_on(self, var: str) -> bool:
        return var in self.free_vars()


@dataclass(frozen=True, slots=True)
class Num(Expr):
    value: float

    def eval(self, x, t):
        return self.value

    def free_vars(self):
        return frozenset()


@dataclass(frozen=True, slots=True)
class Var(Expr):
    name: str  # "t" or "x<i>"

    @property
    def index(self) -> int:
        return 0 if self.name == "t" else int(self.name[1:])

    def eval(self, x, t):
        if self.name == "t":
            return float(t)
        return float(x[self.index - 1])

    def free_vars(self):
        return frozenset((self.name,))


@dataclass(frozen=True, slots=True)
class Neg(Expr):
    arg: Expr

    def eval(self, x, t):
        return -self.arg.eval(x, t)

    def free_vars(self):
        return self.arg.free_vars()


@dataclass(frozen=True, slots=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def eval(self, x, t):
        a = self.left.eval(x, t)
        b = self.right.eval(x, t)
        op = self.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0.0:
                raise DomainError("division by zero", self)
            return a / b
        # "^"
        if a == 0.0 and b < 0.0:
            raise DomainError("zero to a negative power", self)
        if a < 0.0 and not float(b).is_integer():
            raise DomainError("negative base with non-integer exponent", self)
        try:
            return math.pow(a, b)
        except OverflowError:
            raise DomainError("overflow", self) from None

    def free_vars(self):
        return self.left.free_vars() | self.right.free_vars()


@dataclass(frozen=True, slots=True)
class Func(Expr):
    name: str
    arg: Expr

    def eval(self, x, t):
        a = self.arg.eval(x, t)
        name = self.name
        if name == "exp":
            try:
                return math.exp(a)
            except OverflowError:
                raise DomainError("overflow", self) from None
        if name == "ln":
            if a <= 0.0:
                raise DomainError("logarithm of a non-positive value", self)
            return math.log(a)
        if name == "sqrt":
            if a < 0.0:
                raise DomainError("square root of a negative value", self)
            return math.sqrt(a)
        if name == "sin":
            return math.sin(a)
        if name == "cos":
            return math.cos(a)
        return abs(a)

    def free_vars(self):
        return self.arg.free_vars()


ZERO = Num(0.0)
ONE = Num(1.0)


def _is_num(e: Expr, value: float) -> bool:
    return isinstance(e, Num) and e.value == value


def add(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return Neg(b)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return ZERO
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0):
        return ZERO
    if _is_num(b, 1.0):
        return a
    return BinOp("/", a, b)


def power(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 1.0):
        return a
    return BinOp("^", a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    return Neg(a)


# --------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)

# binary precedence; unary minus sits between * / and ^
_BINARY = {"+": (1, "left"), "-": (1, "left"), "*": (2, "left"), "/": (2, "left"), "^": (4, "right")}
_UNARY_PREC = 3


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, n: int):
        self.text = text
        self.n = n
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.tok
        where = "end of input" if tok[0] == "end" else repr(tok[1])
        return ParseError(f"{message} (found {where})", tok[2], self.text)

    def expect(self, value):
        if self.tok[1] != value or self.tok[0] != "op":
            raise self.error(f"expected {value!r}")
        self.advance()

    def parse(self) -> Expr:
        e = self.binary(0)
        if self.tok[0] != "end":
            raise self.error("unexpected token")
        return e

    def binary(self, min_prec: int) -> Expr:
        left = self.unary()
        while True:
            kind, value, _ = self.tok
            if kind != "op" or value not in _BINARY:
                return left
            prec, assoc = _BINARY[value]
            if prec < min_prec:
                return left
            self.advance()
            right = self.binary(prec if assoc == "right" else prec + 1)
            left = BinOp(value, left, right)

    def unary(self) -> Expr:
        kind, value, _ = self.tok
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.binary(_UNARY_PREC))
        return self.atom()

    def atom(self) -> Expr:
        kind, value, pos = self.tok
        if kind == "num":
            self.advance()
            return Num(float(value))
        if kind == "ident":
            self.advance()
            if value in FUNCTIONS:
                if self.tok[1] != "(":
                    raise self.error(f"function {value!r} requires parentheses")
                self.advance()
                arg = self.binary(0)
                self.expect(")")
                return Func(value, arg)
            if self.tok[1] == "(" and self.tok[0] == "op":
                raise UnknownIdentifierError(f"unknown function {value!r}", pos, self.text)
            return self.variable(value, pos)
        if kind == "op" and value == "(":
            self.advance()
            e = self.binary(0)
            self.expect(")")
            return e
        raise self.error("expected a number, variable, function or '('")

    def variable(self, name: str, pos: int) -> Var:
        if name == "t":
            return Var("t")
        m = re.fullmatch(r"x([1-9]\d*)", name)
        if m is None or int(m.group(1)) > self.n:
            raise UnknownIdentifierError(
                f"unknown identifier {name!r} (allowed: x1..x{self.n}, t)", pos, self.text
            )
        return Var(name)


def parse(text: str, n: int) -> Expr:
    """Parse ``text`` into an expression over x1..xn and t."""
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression", 0, str(text))
    if n < 1:
        raise ValueError("dimension must be positive")
    return _Parser(text, n).parse()


def check_dimension(e: Expr, n: int) -> None:
    for v in e.free_vars():
        if v != "t" and int(v[1:]) > n:
            raise UnknownIdentifierError(f"variable {v!r} outside x1..x{n}", 0, to_text(e))


# --------------------------------------------------------------------------
# printing


def to_text(e: Expr) -> str:
    """Canonical serializer; ``parse(to_text(e))`` rebuilds an equivalent tree."""
    if isinstance(e, Num):
        s = repr(float(e.value))
        return f"({s})" if e.value < 0 or s.startswith("-") else s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_text(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})"
    raise TypeError(f"not an expression: {e!r}")


# --------------------------------------------------------------------------
# differentiation


def partial(e: Expr, var: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to ``var`` ("t" or "x<i>")."""
    if not e.depends_on(var):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Neg):
        return neg(partial(e.arg, var))
    if isinstance(e, BinOp):
        a, b = e.left, e.right
        da, db = partial(a, var), partial(b, var)
        if e.op == "+":
            return add(da, db)
        if e.op == "-":
            return sub(da, db)
        if e.op == "*":
            return add(mul(da, b), mul(a, db))
        if e.op == "/":
            return div(sub(mul(da, b), mul(a, db)), mul(b, b))
        # a ^ b
        if not b.depends_on(var):
            reduced = Num(b.value - 1.0) if isinstance(b, Num) else sub(b, ONE)
            return mul(mul(b, power(a, reduced)), da)
        if not a.depends_on(var):
            return mul(mul(e, Func("ln", a)), db)
        return mul(e, add(mul(db, Func("ln", a)), div(mul(b, da), a)))
    if isinstance(e, Func):
        a = e.arg
        da = partial(a, var)
        name = e.name
        if name == "exp":
            outer = e
        elif name == "ln":
            return div(da, a)
        elif name == "sin":
            outer = Func("cos", a)
        elif name == "cos":
            outer = neg(Func("sin", a))
        elif name == "sqrt":
            return div(da, mul(Num(2.0), e))
        else:  # abs: sign(a) written as a/|a|
            outer = div(a, e)
        return mul(outer, da)
    raise TypeError(f"not an expression: {e!r}")


def gradient(e: Expr, n: int) -> tuple[Expr, ...]:
    return tuple(partial(e, f"x{i}") for i in range(1, n + 1))


def laplacian(e: Expr, n: int) -> Expr:
    out: Expr = ZERO
    for i in range(1, n + 1):
        v = f"x{i}"
        out = add(out, partial(partial(e, v), v))
    return out


def evaluate(e: Expr, p) -> float:
    """Evaluate at an :class:`EvalPoint`-like ``(x, t)`` pair."""
    x, t = p
    return e.eval(x, t)
