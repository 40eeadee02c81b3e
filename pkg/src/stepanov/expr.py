"""A small real-valued expression language for metric components.

Grammar (whitespace-insensitive)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := atom ('^' unary)?
    atom    := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

``^`` is right-associative and binds tighter than unary minus, so ``-x^2``
is ``-(x^2)``.  The same tree evaluates on plain floats or on truncated
Taylor series.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from . import taylor
from .errors import DomainError, ParseError, UnknownIdentifierError
from .taylor import Series

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sinh", "cosh", "sqrt", "atan")
CONSTANTS = {"pi": math.pi}

# denominators at or below this magnitude are singular
DIVISION_FLOOR = 1e-300


class Node:
    precedence = 100

    def variables(self) -> list[str]:
        out: list[str] = []
        self._collect(out)
        return out

    def _collect(self, out):
        pass


@dataclass(frozen=True)
class Num(Node):
    value: float
    text: str

    def __str__(self):
        return self.text


@dataclass(frozen=True)
class Name(Node):
    name: str

    def __str__(self):
        return self.name

    def _collect(self, out):
        if self.name not in CONSTANTS and self.name not in out:
            out.append(self.name)


@dataclass(frozen=True)
class Neg(Node):
    operand: Node
    precedence = 3

    def __str__(self):
        inner = str(self.operand)
        if self.operand.precedence < 4:
            inner = f"({inner})"
        return f"-{inner}"

    def _collect(self, out):
        self.operand._collect(out)


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node

    @property
    def precedence(self):
        return _PREC[self.op]

    def __str__(self):
        p = self.precedence
        left, right = str(self.left), str(self.right)
        if self.op == "^":
            if self.left.precedence <= p:
                left = f"({left})"
            if self.right.precedence < p:
                right = f"({right})"
            return f"{left}^{right}"
        if self.left.precedence < p:
            left = f"({left})"
        if self.right.precedence <= p:
            right = f"({right})"
        return f"{left} {self.op} {right}"

    def _collect(self, out):
        self.left._collect(out)
        self.right._collect(out)


@dataclass(frozen=True)
class Call(Node):
    func: str
    arg: Node

    def __str__(self):
        return f"{self.func}({self.arg})"

    def _collect(self, out):
        self.arg._collect(out)


# tokenizer ---------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[^\W\d]\w*)
  | (?P<op>[-+*/^()−])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind == "ws":
            for i, ch in enumerate(text):
                if ch == "\n":
                    line += 1
                    line_start = pos + i + 1
        else:
            if text == "−":
                text = "-"
            toks.append(_Tok(kind, text, line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("end", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(src)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str):
        t = self.tok
        what = "end of input" if t.kind == "end" else repr(t.text)
        raise ParseError(f"{message}, found {what}", t.line, t.col)

    def accept(self, *texts) -> _Tok | None:
        t = self.tok
        if t.kind == "op" and t.text in texts:
            self.i += 1
            return t
        return None

    def expect(self, text: str):
        if self.accept(text) is None:
            self.error(f"expected {text!r}")

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            self.error("expected operator or end of input")
        return node

    def expr(self) -> Node:
        node = self.term()
        while (t := self.accept("+", "-")) is not None:
            node = BinOp(t.text, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while (t := self.accept("*", "/")) is not None:
            node = BinOp(t.text, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.accept("-"):
            return Neg(self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.accept("^"):
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Num(float(t.text), t.text)
        if t.kind == "name":
            self.i += 1
            if t.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(t.text, arg)
            return Name(t.text)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        self.error("expected a number, name or '('")


@dataclass(frozen=True)
class Expression:
    """A parsed component formula; ``source`` is kept verbatim."""

    source: str
    root: Node = field(compare=False)

    @property
    def variables(self) -> list[str]:
        return self.root.variables()

    def __str__(self):
        return str(self.root)

    def evaluate(self, env: Mapping[str, float]) -> float:
        return evaluate(self.root, env)


def parse_expression(src: str, names: Sequence[str] | None = None) -> Expression:
    """Parse ``src``; when ``names`` is given, reject any other identifier."""
    root = _Parser(src).parse()
    if names is not None:
        unknown = [v for v in root.variables() if v not in names]
        if unknown:
            raise UnknownIdentifierError(
                f"unknown identifier {unknown[0]!r} in {src!r}; coordinates are {list(names)}"
            )
    return Expression(src, root)


# evaluation -----------------------------------------------------------------

Value = Union[float, Series]

_FLOAT_FUNCS = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": math.log,
    "sinh": math.sinh,
    "cosh": math.cosh,
    "sqrt": math.sqrt,
    "atan": math.atan,
}

_SERIES_FUNCS = {
    "sin": taylor.sin,
    "cos": taylor.cos,
    "tan": taylor.tan,
    "exp": taylor.exp,
    "log": taylor.log,
    "sinh": taylor.sinh,
    "cosh": taylor.cosh,
    "sqrt": taylor.sqrt,
    "atan": taylor.atan,
}


def _scalar(x: Value) -> float:
    return float(x.value) if isinstance(x, Series) else x


def _is_const(x: Value) -> bool:
    return not isinstance(x, Series) or x.is_constant()


def evaluate(node: Node, env: Mapping[str, Value]) -> Value:
    """Evaluate on floats or series; domain failures name the subexpression."""
    try:
        return _eval(node, env)
    except DomainError:
        raise
    except (ValueError, OverflowError, ZeroDivisionError) as exc:
        raise DomainError(f"cannot evaluate {node}: {exc}") from None


def _eval(node: Node, env) -> Value:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Name):
        if node.name in env:
            return env[node.name]
        if node.name in CONSTANTS:
            return CONSTANTS[node.name]
        raise UnknownIdentifierError(f"unknown identifier {node.name!r}")
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, Call):
        x = _eval(node.arg, env)
        try:
            if isinstance(x, Series):
                return _SERIES_FUNCS[node.func](x)
            if node.func == "log" and not x > 0.0:
                raise DomainError(f"log of nonpositive value {x!r}")
            return _FLOAT_FUNCS[node.func](x)
        except (DomainError, ValueError, OverflowError) as exc:
            raise DomainError(f"cannot evaluate {node}: {exc}") from None
    if isinstance(node, BinOp):
        a = _eval(node.left, env)
        b = _eval(node.right, env)
        op = node.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if abs(_scalar(b)) <= DIVISION_FLOOR:
                raise DomainError(f"division by zero in {node}")
            return a / b
        return _power(node, a, b)
    raise TypeError(f"unknown node {node!r}")


def _power(node: BinOp, a: Value, b: Value) -> Value:
    try:
        if _is_const(b):
            e = _scalar(b)
            if isinstance(a, Series):
                return taylor.power(a, e)
            if a < 0.0 and not float(e).is_integer():
                raise DomainError(f"non-integer power of negative value {a!r}")
            if a == 0.0 and e < 0.0:
                raise DomainError("negative power of zero")
            return float(a) ** e
        if not _scalar(a) > 0.0:
            raise DomainError("variable exponent needs a positive base")
        return taylor.exp(b * taylor.log(a if isinstance(a, Series) else taylor.Series.constant(a, b.basis)))
    except (DomainError, OverflowError) as exc:
        raise DomainError(f"cannot evaluate {node}: {exc}") from None


def taylor_jet(
    e: Expression | str,
    point: Sequence[float],
    order: int,
    coords: Sequence[str] | None = None,
) -> Series:
    """Truncated Taylor expansion of ``e`` at ``point`` up to total ``order``.

    Variables are matched to ``point`` through ``coords``; by default they
    are taken in order of first appearance in the formula.
    """
    if isinstance(e, str):
        e = parse_expression(e)
    if order > 5:
        raise ValueError("jets above order 5 are not supported")
    if coords is None:
        coords = e.variables
    point = np.asarray(point, dtype=float)
    if len(point) != len(coords):
        raise ValueError(f"point has {len(point)} entries for coordinates {list(coords)}")
    b = taylor.basis(len(coords), order)
    env = {c: Series.variable(i, point[i], b) for i, c in enumerate(coords)}
    out = evaluate(e.root, env)
    if not isinstance(out, Series):
        out = Series.constant(out, b)
    return out
