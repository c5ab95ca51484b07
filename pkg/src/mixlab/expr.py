"""Small arithmetic language for right-hand sides ``f(x)`` and nonlinearities ``g(x, u)``.

Grammar (``^`` binds tightest and associates to the right; ``-x^2`` is ``-(x^2)``)::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := ('-' | '+') unary | power
    power := atom ('^' unary)?
    atom  := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np

VARIABLES = ("x", "u")
CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTIONS = {
    "abs": 1,
    "sin": 1,
    "cos": 1,
    "exp": 1,
    "log": 1,
    "sqrt": 1,
    "min": -2,  # negative: at least that many arguments
    "max": -2,
}


class ExpressionError(ValueError):
    """Syntax error; ``offset`` is the byte offset into the UTF-8 source."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class UnknownIdentifier(ExpressionError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


class EvaluationError(ArithmeticError):
    """Domain error during evaluation (log of a nonpositive value, division by zero, ...)."""


@dataclass(frozen=True)
class Num:
    value: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ValueError("numeric literals are finite and nonnegative")
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Node", ...]


Node = Union[Num, Name, Unary, Binary, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    end = len(text.rstrip())
    while pos < end:
        m = _TOKEN.match(text, pos)
        if m is None:
            start = len(text) - len(text[pos:].lstrip())
            raise ExpressionError(f"unexpected character {text[start]!r}", len(text[:start].encode()))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), len(text[:start].encode())))
        pos = m.end()
    tokens.append(("end", "", len(text.encode())))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, off = self.take()
        if val != value or kind != "op":
            found = "end of input" if kind == "end" else repr(val)
            raise ExpressionError(f"expected {value!r}, found {found}", off)

    def parse(self) -> Node:
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected {val!r}", off)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Node:
        kind, val, _ = self.peek()
        if kind == "op" and val in ("-", "+"):
            self.take()
            return Unary(val, self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return Binary("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, val, off = self.take()
        if kind == "num":
            if not math.isfinite(float(val)):
                raise ExpressionError(f"literal {val} overflows", off)
            return Num(float(val))
        if kind == "name":
            if self.peek()[:2] == ("op", "("):
                if val not in FUNCTIONS:
                    raise UnknownIdentifier(val, off)
                self.take()
                args = [self.expr()]
                while self.peek()[:2] == ("op", ","):
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                arity = FUNCTIONS[val]
                if (arity > 0 and len(args) != arity) or (arity < 0 and len(args) < -arity):
                    raise ExpressionError(f"wrong number of arguments to {val}", off)
                return Call(val, tuple(args))
            if val in VARIABLES or val in CONSTANTS:
                return Name(val)
            if val in FUNCTIONS:
                raise ExpressionError(f"function {val} needs arguments", off)
            raise UnknownIdentifier(val, off)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExpressionError(f"unexpected {found}", off)


def _precedence(node: Node) -> int:
    if isinstance(node, Binary):
        return {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}[node.op]
    if isinstance(node, Unary):
        return 3
    return 5


def to_text(node: Node) -> str:
    """Render with the fewest parentheses that re-parse to the same tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Name):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_text(a) for a in node.args)})"
    if isinstance(node, Unary):
        inner = to_text(node.operand)
        if _precedence(node.operand) < 3:
            inner = f"({inner})"
        return node.op + inner
    p = _precedence(node)
    left, right = to_text(node.left), to_text(node.right)
    if node.op == "^":
        if _precedence(node.left) <= p:
            left = f"({left})"
        if _precedence(node.right) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if _precedence(node.left) < p:
        left = f"({left})"
    if _precedence(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


def _names(node: Node) -> set[str]:
    if isinstance(node, Name):
        return {node.name}
    if isinstance(node, Unary):
        return _names(node.operand)
    if isinstance(node, Binary):
        return _names(node.left) | _names(node.right)
    if isinstance(node, Call):
        return set().union(*(_names(a) for a in node.args))
    return set()


def _checked(value: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(value)):
        raise EvaluationError(f"{what} produced a non-finite value")
    return value


def _eval(node: Node, env: dict[str, np.ndarray]) -> np.ndarray:
    if isinstance(node, Num):
        return np.asarray(node.value)
    if isinstance(node, Name):
        return env[node.name] if node.name in env else np.asarray(CONSTANTS[node.name])
    if isinstance(node, Unary):
        v = _eval(node.operand, env)
        return -v if node.op == "-" else v
    if isinstance(node, Binary):
        a, b = _eval(node.left, env), _eval(node.right, env)
        if node.op == "+":
            return _checked(a + b, "addition")
        if node.op == "-":
            return _checked(a - b, "subtraction")
        if node.op == "*":
            return _checked(a * b, "multiplication")
        if node.op == "/":
            if np.any(b == 0):
                raise EvaluationError("division by zero")
            return _checked(a / b, "division")
        if np.any((a < 0) & (b != np.round(b))):
            raise EvaluationError("non-integer power of a negative value")
        if np.any((a == 0) & (b < 0)):
            raise EvaluationError("negative power of zero")
        return _checked(np.power(a, b), "power")
    args = [_eval(a, env) for a in node.args]
    f = node.func
    if f == "log":
        if np.any(args[0] <= 0):
            raise EvaluationError("log of a nonpositive value")
        return np.log(args[0])
    if f == "sqrt":
        if np.any(args[0] < 0):
            raise EvaluationError("sqrt of a negative value")
        return np.sqrt(args[0])
    if f == "min":
        return np.minimum.reduce(np.broadcast_arrays(*args))
    if f == "max":
        return np.maximum.reduce(np.broadcast_arrays(*args))
    return _checked(getattr(np, f)(args[0]), f)


@dataclass(frozen=True)
class Expression:
    """Parsed expression in ``x`` and ``u``; call it on arrays to evaluate."""

    tree: Node
    text: str = field(default="", compare=False)

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(_names(self.tree) & set(VARIABLES))

    def __call__(self, x, u=0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        with np.errstate(all="ignore"):
            out = _eval(self.tree, {"x": x, "u": u})
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(x, u).shape).copy()

    def __str__(self) -> str:
        return to_text(self.tree)


def parse_expression(text: str) -> Expression:
    return Expression(_Parser(text).parse(), text)
