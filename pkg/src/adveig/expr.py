"""Tiny expression language for coefficient functions.

Grammar (lowest to highest binding)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Names are ``x``, ``y`` and ``pi``; the callable names are listed in
:data:`FUNCTIONS`.  Evaluation works on floats or on numpy arrays of
matching shape, so the same tree samples a coefficient on a whole grid.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "ExprError",
    "IllegalCharacter",
    "UnexpectedToken",
    "UnbalancedParentheses",
    "UnknownFunction",
    "TrailingInput",
    "DomainError",
    "MissingVariable",
    "Token",
    "Num",
    "Var",
    "Const",
    "Neg",
    "BinOp",
    "Call",
    "FUNCTIONS",
    "tokenize",
    "parse",
    "compile_expr",
    "evaluate",
    "to_source",
    "variables",
]


class ExprError(ValueError):
    """Base class for expression errors."""


class IllegalCharacter(ExprError):
    def __init__(self, char: str, offset: int):
        super().__init__(f"illegal character {char!r} at offset {offset}")
        self.char = char
        self.offset = offset


class UnexpectedToken(ExprError):
    pass


class UnbalancedParentheses(ExprError):
    pass


class UnknownFunction(ExprError):
    pass


class TrailingInput(ExprError):
    pass


class DomainError(ExprError):
    pass


class MissingVariable(ExprError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str  # num, ident, plus, minus, star, slash, caret, lparen, rparen, comma
    value: Union[float, str, None]
    offset: int


_PUNCT = {
    "+": "plus",
    "-": "minus",
    "*": "star",
    "/": "slash",
    "^": "caret",
    "(": "lparen",
    ")": "rparen",
    ",": "comma",
}
_NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


def tokenize(source: str) -> list[Token]:
    if not source or not source.strip():
        raise UnexpectedToken("empty expression")
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        ch = source[pos]
        if ch.isspace():
            pos += 1
            continue
        if ch in _PUNCT:
            tokens.append(Token(_PUNCT[ch], ch, pos))
            pos += 1
            continue
        m = _NUMBER.match(source, pos)
        if m:
            value = float(m.group(0))
            if not math.isfinite(value):
                raise UnexpectedToken(f"numeric literal out of range at offset {pos}")
            tokens.append(Token("num", value, pos))
            pos = m.end()
            continue
        m = _IDENT.match(source, pos)
        if m:
            tokens.append(Token("ident", m.group(0), pos))
            pos = m.end()
            continue
        raise IllegalCharacter(ch, pos)
    return tokens


# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # "x" or "y"


@dataclass(frozen=True)
class Const:
    name: str  # only "pi"


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Const, Neg, BinOp, Call]

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs")
_VARIABLES = ("x", "y")
_CONSTANTS = {"pi": math.pi}


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.depth = 0

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_operand(self) -> Token:
        tok = self.peek()
        if tok is None:
            if self.depth > 0:
                raise UnbalancedParentheses("missing ')' at end of input")
            raise UnexpectedToken("unexpected end of input")
        return tok

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok is not None:
            if tok.kind == "rparen":
                raise UnbalancedParentheses(f"unmatched ')' at offset {tok.offset}")
            raise TrailingInput(f"unexpected {tok.value!r} at offset {tok.offset}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while (tok := self.peek()) is not None and tok.kind in ("plus", "minus"):
            self.advance()
            node = BinOp(tok.value, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while (tok := self.peek()) is not None and tok.kind in ("star", "slash"):
            self.advance()
            node = BinOp(tok.value, node, self.unary())
        return node

    def unary(self) -> Node:
        tok = self.expect_operand()
        if tok.kind == "minus":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        tok = self.peek()
        if tok is not None and tok.kind == "caret":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.expect_operand()
        if tok.kind == "num":
            self.advance()
            return Num(tok.value)
        if tok.kind == "lparen":
            self.advance()
            inner = self.group()
            return inner
        if tok.kind == "ident":
            self.advance()
            name = tok.value
            nxt = self.peek()
            if nxt is not None and nxt.kind == "lparen":
                if name not in FUNCTIONS:
                    raise UnknownFunction(f"unknown function {name!r} at offset {tok.offset}")
                self.advance()
                return Call(name, self.group())
            if name in _VARIABLES:
                return Var(name)
            if name in _CONSTANTS:
                return Const(name)
            if name in FUNCTIONS:
                raise UnexpectedToken(f"function {name!r} used without arguments at offset {tok.offset}")
            raise UnexpectedToken(f"unknown name {name!r} at offset {tok.offset}")
        if tok.kind == "rparen":
            raise UnbalancedParentheses(f"unexpected ')' at offset {tok.offset}")
        raise UnexpectedToken(f"unexpected {tok.value!r} at offset {tok.offset}")

    def group(self) -> Node:
        # called just after '('
        self.depth += 1
        inner = self.expr()
        tok = self.peek()
        if tok is None:
            raise UnbalancedParentheses("missing ')' at end of input")
        if tok.kind != "rparen":
            raise UnexpectedToken(f"expected ')' but found {tok.value!r} at offset {tok.offset}")
        self.advance()
        self.depth -= 1
        return inner


def parse(tokens: list[Token]) -> Node:
    if not tokens:
        raise UnexpectedToken("empty expression")
    return _Parser(tokens).parse()


def compile_expr(source: str) -> Node:
    """Tokenize and parse ``source`` in one step."""
    return parse(tokenize(source))


# --- evaluation ------------------------------------------------------------


def variables(node: Node) -> frozenset[str]:
    """Names of the spatial variables referenced by ``node``."""
    if isinstance(node, Var):
        return frozenset({node.name})
    if isinstance(node, Neg):
        return variables(node.operand)
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    if isinstance(node, Call):
        return variables(node.arg)
    return frozenset()


def _check_finite(value, what: str):
    if not np.all(np.isfinite(value)):
        raise DomainError(f"{what} produced a non-finite value")
    return value


def _eval(node: Node, x, y):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        return _CONSTANTS[node.name]
    if isinstance(node, Var):
        if node.name == "x":
            return x
        if y is None:
            raise MissingVariable("expression uses y but no y coordinate is available")
        return y
    if isinstance(node, Neg):
        return -_eval(node.operand, x, y)
    if isinstance(node, Call):
        arg = _eval(node.arg, x, y)
        if node.func in ("log", "sqrt"):
            bad = np.asarray(arg) < 0 if node.func == "sqrt" else np.asarray(arg) <= 0
            if np.any(bad):
                raise DomainError(f"{node.func} of a {'negative' if node.func == 'sqrt' else 'non-positive'} argument")
        with np.errstate(over="ignore"):
            return _check_finite(getattr(np, node.func)(arg), node.func)
    left = _eval(node.left, x, y)
    right = _eval(node.right, x, y)
    op = node.op
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if op == "/":
        if np.any(np.asarray(right) == 0):
            raise DomainError("division by zero")
        return left / right
    # op == "^": negative bases need an integer exponent
    base, expo = np.broadcast_arrays(np.asarray(left, dtype=float), np.asarray(right, dtype=float))
    if np.any((base < 0) & (expo != np.round(expo))):
        raise DomainError("negative base raised to a non-integer power")
    if np.any((base == 0) & (expo < 0)):
        raise DomainError("zero raised to a negative power")
    with np.errstate(over="ignore"):
        out = _check_finite(np.power(base, expo), "power")
    return out if out.ndim else float(out)


def evaluate(node: Node, x, y=None):
    """Evaluate ``node`` at ``x`` (and ``y``).

    Scalars in, float out; arrays in, array of the broadcast shape out.
    """
    value = _eval(node, x, y)
    if np.ndim(x) == 0 and (y is None or np.ndim(y) == 0):
        return float(value)
    shape = np.broadcast(np.asarray(x), np.asarray(x if y is None else y)).shape
    return np.broadcast_to(np.asarray(value, dtype=float), shape).copy()


# --- printing --------------------------------------------------------------


def to_source(node: Node) -> str:
    """Canonical, fully parenthesized source text for ``node``."""
    if isinstance(node, Num):
        # repr round-trips; negative literals cannot occur from the parser
        text = repr(float(node.value))
        return text if node.value >= 0 else f"(-{repr(-float(node.value))})"
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    return f"({to_source(node.left)}{node.op}{to_source(node.right)})"
