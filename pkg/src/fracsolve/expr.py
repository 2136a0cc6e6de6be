"""A small, total expression language for conductivities, sources and kernels.

Grammar (loosest binding first)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?          # right associative
    atom   := NUMBER | NAME | FUNC "(" expr ")" | "(" expr ")"

``-2^2`` is ``-4`` and ``2^3^2`` is ``512``. Functions are ``exp``, ``sin``,
``cos``, ``abs`` and ``sqrt``. Evaluation is vectorised over numpy arrays.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import EvaluationError, InputValidationError

MAX_DEPTH = 64
MAX_SOURCE = 64 * 1024
DEFAULT_VARIABLES = ("t", "s", "u")

FUNCTIONS = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "abs": np.abs,
    "sqrt": np.sqrt,
}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


class ExprError(InputValidationError):
    """Parse failure; ``line`` and ``column`` are 1-based."""

    def __init__(self, message: str, source: str = "", offset: int = 0):
        self.offset = offset
        self.line = source.count("\n", 0, offset) + 1
        self.column = offset - (source.rfind("\n", 0, offset) + 1) + 1
        super().__init__(f"{message} at line {self.line}, column {self.column}")


class Token(NamedTuple):
    kind: str
    text: str
    offset: int


def tokenize(src: str) -> list[Token]:
    out = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExprError(f"unexpected character {src[pos]!r}", src, pos)
        kind = m.lastgroup
        if kind != "ws":
            out.append(Token(kind, m.group(), pos))
        pos = m.end()
    out.append(Token("end", "", len(src)))
    return out


# tree nodes are tuples: ("num", value) | ("var", name) | ("neg", x)
# | ("bin", op, left, right) | ("call", fname, x); depth is tracked alongside


class _Parser:
    def __init__(self, src: str, variables):
        self.src = src
        self.variables = frozenset(variables)
        self.tokens = tokenize(src)
        self.i = 0
        self.nesting = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def take(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text:
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise ExprError(f"expected {text!r}, found {found}", self.src, tok.offset)
        return self.take()

    def node(self, tree, depth: int, offset: int):
        if depth > MAX_DEPTH:
            raise ExprError(f"expression deeper than {MAX_DEPTH} levels", self.src, offset)
        return tree, depth

    def enter(self, offset: int):
        self.nesting += 1
        if self.nesting > MAX_DEPTH:
            raise ExprError(f"expression deeper than {MAX_DEPTH} levels", self.src, offset)

    def parse(self):
        tree, depth = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExprError(f"unexpected {tok.text!r}", self.src, tok.offset)
        return tree, depth

    def expr(self):
        left, dl = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take()
            right, dr = self.term()
            left, dl = self.node(("bin", op.text, left, right), 1 + max(dl, dr), op.offset)
        return left, dl

    def term(self):
        left, dl = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.take()
            right, dr = self.unary()
            left, dl = self.node(("bin", op.text, left, right), 1 + max(dl, dr), op.offset)
        return left, dl

    def unary(self):
        tok = self.peek()
        if tok.text == "-":
            self.take()
            self.enter(tok.offset)
            inner, d = self.unary()
            self.nesting -= 1
            return self.node(("neg", inner), d + 1, tok.offset)
        return self.power()

    def power(self):
        base, db = self.atom()
        tok = self.peek()
        if tok.text == "^":
            self.take()
            self.enter(tok.offset)
            exponent, de = self.unary()
            self.nesting -= 1
            return self.node(("bin", "^", base, exponent), 1 + max(db, de), tok.offset)
        return base, db

    def atom(self):
        tok = self.take()
        if tok.kind == "num":
            value = float(tok.text)
            if not math.isfinite(value):
                raise ExprError(f"literal {tok.text!r} out of range", self.src, tok.offset)
            return ("num", value), 1
        if tok.kind == "name":
            if tok.text in FUNCTIONS:
                self.expect("(")
                self.enter(tok.offset)
                inner, d = self.expr()
                self.nesting -= 1
                self.expect(")")
                return self.node(("call", tok.text, inner), d + 1, tok.offset)
            if tok.text not in self.variables:
                allowed = ", ".join(sorted(self.variables)) or "none"
                raise ExprError(f"unknown identifier {tok.text!r} (allowed: {allowed})", self.src, tok.offset)
            return ("var", tok.text), 1
        if tok.text == "(":
            self.enter(tok.offset)
            inner, d = self.expr()
            self.nesting -= 1
            self.expect(")")
            return inner, d
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExprError(f"unexpected {found}", self.src, tok.offset)


_BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


def _compile(tree):
    kind = tree[0]
    if kind == "num":
        value = tree[1]
        return lambda env: value
    if kind == "var":
        name = tree[1]
        return lambda env: env[name]
    if kind == "neg":
        inner = _compile(tree[1])
        return lambda env: np.negative(inner(env))
    if kind == "call":
        fn, inner = FUNCTIONS[tree[1]], _compile(tree[2])
        return lambda env: fn(inner(env))
    op, left, right = _BINARY[tree[1]], _compile(tree[2]), _compile(tree[3])
    if tree[1] == "^":
        # float power so integer-looking operands never hit integer rules
        return lambda env: np.power(np.asarray(left(env), dtype=float), right(env))
    return lambda env: op(left(env), right(env))


def _names(tree, acc):
    if tree[0] == "var":
        acc.add(tree[1])
    for child in tree[1:]:
        if isinstance(child, tuple):
            _names(child, acc)
    return acc


@dataclass(frozen=True, eq=False)
class ExprFn:
    """Parsed expression; call with keyword arrays, e.g. ``f(u=u)``."""

    source: str
    tree: tuple
    depth: int
    variables: frozenset

    def __post_init__(self):
        object.__setattr__(self, "_fn", _compile(self.tree))

    @property
    def used(self) -> frozenset:
        return frozenset(_names(self.tree, set()))

    def __call__(self, **env):
        missing = self.used - env.keys()
        if missing:
            raise EvaluationError(f"missing value for {', '.join(sorted(missing))}")
        with np.errstate(all="ignore"):
            out = self._fn({k: np.asarray(v, dtype=float) for k, v in env.items()})
        out = np.asarray(out, dtype=float)
        if not np.all(np.isfinite(out)):
            raise EvaluationError(f"{self.source!r} is not finite on the supplied inputs")
        return out

    def bind(self, *names):
        """Positional callable, e.g. ``expr.bind("s", "u")(s, u)``.

        The result always has the broadcast shape of its arguments.
        """

        def fn(*args):
            env = dict(zip(names, args))
            shape = np.broadcast_shapes(*(np.shape(a) for a in args))
            return np.broadcast_to(self(**env), shape).astype(float)

        fn.__name__ = f"expr<{self.source}>"
        return fn

    def __eq__(self, other):
        return isinstance(other, ExprFn) and self.tree == other.tree

    def __hash__(self):
        return hash(self.tree)

    def __repr__(self):
        return f"ExprFn({self.source!r})"


def parse_expr(src: str, variables=DEFAULT_VARIABLES) -> ExprFn:
    if not isinstance(src, str):
        raise ExprError(f"expression must be text, got {type(src).__name__}")
    if len(src.encode("utf-8", "surrogatepass")) > MAX_SOURCE:
        raise ExprError("expression longer than 64 KiB", src, 0)
    tree, depth = _Parser(src, variables).parse()
    return ExprFn(src, tree, depth, frozenset(variables))
