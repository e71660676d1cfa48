"""Tiny arithmetic expression language for problem data.

Initial data u0(x), u1(x), forcing f(x, t) and formula-defined relaxation
moduli G(t) are all ingested as expression strings over the variables
``x`` and ``t``.  The grammar is deliberately small:

    expr    :=  term  (('+' | '-') term)*
    term    :=  unary (('*' | '/') unary)*
    unary   :=  '-' unary | power
    power   :=  atom ('^' unary)?          # right associative
    atom    :=  NUMBER | 'pi' | 'x' | 't'
             |  FUNC '(' expr ')' | '(' expr ')'

with FUNC one of sin, cos, exp, sqrt, abs.  Precedence, strongest first:
``^``, unary ``-``, ``* /``, ``+ -``.  Consequently ``2^3^2`` is 512 and
``-2^2`` is -4.  Every node remembers its byte offset in the source so
parse and evaluation errors can point at the offending token.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union


class ParseError(ValueError):
    """Syntax or name error, with the byte offset of the bad token."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalError(ArithmeticError):
    """Runtime domain error (division by zero, sqrt of a negative, ...)."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Num:
    value: float
    pos: int


@dataclass(frozen=True)
class Var:
    name: str  # "x" or "t"
    pos: int


@dataclass(frozen=True)
class Unary:
    op: str  # "-"
    operand: "Expr"
    pos: int


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"
    pos: int


@dataclass(frozen=True)
class Call:
    func: str  # sin cos exp sqrt abs
    arg: "Expr"
    pos: int


Expr = Union[Num, Var, Unary, Binary, Call]

FUNCTIONS = ("sin", "cos", "exp", "sqrt", "abs")

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    while i < len(source):
        m = _TOKEN.match(source, i)
        if m is None:
            # skip leading blanks to point at the real culprit
            j = i
            while j < len(source) and source[j].isspace():
                j += 1
            if j == len(source):
                break
            raise ParseError(f"unexpected character {source[j]!r}", j)
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "name":
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        i = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        kind, text, pos = self.peek()
        if kind != "op" or text != op:
            raise ParseError(f"expected {op!r}", pos)
        self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing input {text!r}", pos)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while True:
            kind, text, pos = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                left = Binary(text, left, self.term(), pos)
            else:
                return left

    def term(self) -> Expr:
        left = self.unary()
        while True:
            kind, text, pos = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                left = Binary(text, left, self.unary(), pos)
            else:
                return left

    def unary(self) -> Expr:
        kind, text, pos = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Unary("-", self.unary(), pos)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, text, pos = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            # right associative; exponent may itself carry a unary minus
            return Binary("^", base, self.unary(), pos)
        return base

    def atom(self) -> Expr:
        kind, text, pos = self.advance()
        if kind == "num":
            return Num(float(text), pos)
        if kind == "name":
            if text in ("x", "t"):
                return Var(text, pos)
            if text == "pi":
                return Num(math.pi, pos)
            if text in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(text, arg, pos)
            raise ParseError(f"unknown identifier {text!r}", pos)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        what = repr(text) if text else "end of input"
        raise ParseError(f"expected a number, name or '(', found {what}", pos)


def parse(source: str) -> Expr:
    """Parse *source* into an expression tree.

    Raises :class:`ParseError` carrying the byte offset of the first
    offending token.
    """
    return _Parser(source).parse()


def evaluate(expr: Expr, x: float = 0.0, t: float = 0.0) -> float:
    """Evaluate *expr* in IEEE double precision at the point (x, t).

    Domain faults (division by zero, sqrt of a negative, overflow) raise
    :class:`EvalError` pointing at the operator or call that failed.
    """
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Var):
        return float(x) if expr.name == "x" else float(t)
    if isinstance(expr, Unary):
        return -evaluate(expr.operand, x, t)
    if isinstance(expr, Binary):
        lhs = evaluate(expr.left, x, t)
        rhs = evaluate(expr.right, x, t)
        try:
            if expr.op == "+":
                return lhs + rhs
            if expr.op == "-":
                return lhs - rhs
            if expr.op == "*":
                return lhs * rhs
            if expr.op == "/":
                if rhs == 0.0:
                    raise EvalError("division by zero", expr.pos)
                return lhs / rhs
            result = lhs ** rhs
            if isinstance(result, complex):
                raise EvalError("fractional power of a negative base", expr.pos)
            return result
        except OverflowError:
            raise EvalError("overflow", expr.pos) from None
    if isinstance(expr, Call):
        arg = evaluate(expr.arg, x, t)
        try:
            if expr.func == "sin":
                return math.sin(arg)
            if expr.func == "cos":
                return math.cos(arg)
            if expr.func == "exp":
                return math.exp(arg)
            if expr.func == "sqrt":
                if arg < 0.0:
                    raise EvalError("sqrt of a negative value", expr.pos)
                return math.sqrt(arg)
            return abs(arg)
        except OverflowError:
            raise EvalError("overflow", expr.pos) from None
    raise TypeError(f"not an expression node: {expr!r}")


def to_source(expr: Expr) -> str:
    """Render a canonical, fully parenthesised form that re-parses to an
    equivalent tree."""
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Unary):
        return f"(-{to_source(expr.operand)})"
    if isinstance(expr, Binary):
        return f"({to_source(expr.left)}{expr.op}{to_source(expr.right)})"
    if isinstance(expr, Call):
        return f"{expr.func}({to_source(expr.arg)})"
    raise TypeError(f"not an expression node: {expr!r}")


def variables(expr: Expr) -> set[str]:
    """Names of the variables actually referenced by *expr*."""
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, Unary):
        return variables(expr.operand)
    if isinstance(expr, Binary):
        return variables(expr.left) | variables(expr.right)
    if isinstance(expr, Call):
        return variables(expr.arg)
    return set()


def is_zero(expr: Expr) -> bool:
    """True for the literal constant 0 (used to skip forcing work)."""
    return isinstance(expr, Num) and expr.value == 0.0
