# varexp/expr.py
"""
Tiny arithmetic language for p(x), phi(x), q(x) in run configs.

Grammar:
    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := unary ('^' factor)?
    unary  := '-' unary | atom
    atom   := number | ident | ident '(' expr (',' expr)? ')' | '(' expr ')'

Variables: x, y. Functions: exp, log, abs, sqrt (one argument), min, max (two).
ASCII only, no implicit multiplication.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import List, Mapping, NamedTuple, Sequence, Union

import numpy as np

from varexp.exceptions import ExprDomainError, ExprSyntaxError

VARIABLES = ("x", "y")
UNARY_FUNCS = ("exp", "log", "abs", "sqrt")
BINARY_FUNCS = ("min", "max")


# =========================
# AST
# =========================
@dataclass(frozen=True)
class Const:
    value: float
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Unary:
    op: str  # neg | exp | log | abs | sqrt
    arg: "Node"
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / ^ min max
    left: "Node"
    right: "Node"
    offset: int = field(default=0, compare=False)


Node = Union[Const, Var, Unary, Binary]


# =========================
# Tokenizer
# =========================
class Token(NamedTuple):
    kind: str  # num | ident | op | end
    text: str
    offset: int  # byte offset into the source


_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
)


def tokenize(src: str) -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", _byte_offset(src, pos))
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), _byte_offset(src, pos)))
        pos = m.end()
    tokens.append(Token("end", "", _byte_offset(src, len(src))))
    return tokens


def _byte_offset(src: str, index: int) -> int:
    return len(src[:index].encode("utf-8"))


# =========================
# Parser (recursive descent, one function per rule)
# =========================
class _Parser:
    def __init__(self, src: str):
        self.tokens = tokenize(src)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if self.tok.kind == "op" and self.tok.text == text:
            return self.advance()
        raise ExprSyntaxError(_describe(self.tok), self.tok.offset, expected=f"'{text}'")

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(_describe(self.tok), self.tok.offset, expected="operator or end of input")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            t = self.advance()
            node = Binary(t.text, node, self.term(), t.offset)
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            t = self.advance()
            node = Binary(t.text, node, self.factor(), t.offset)
        return node

    def factor(self) -> Node:
        node = self.unary()
        if self.tok.kind == "op" and self.tok.text == "^":
            t = self.advance()
            node = Binary("^", node, self.factor(), t.offset)
        return node

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text == "-":
            t = self.advance()
            return Unary("neg", self.unary(), t.offset)
        return self.atom()

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Const(float(t.text), t.offset)
        if t.kind == "ident":
            self.advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                return self.call(t)
            if t.text in VARIABLES:
                return Var(t.text, t.offset)
            if t.text in UNARY_FUNCS or t.text in BINARY_FUNCS:
                raise ExprSyntaxError(_describe(self.tok), self.tok.offset, expected="'('")
            raise ExprSyntaxError(f"unknown identifier '{t.text}'", t.offset, expected="x, y or a function call")
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(_describe(t), t.offset, expected="number, variable, function or '('")

    def call(self, name: Token) -> Node:
        if name.text not in UNARY_FUNCS and name.text not in BINARY_FUNCS:
            raise ExprSyntaxError(f"unknown function '{name.text}'", name.offset, expected=", ".join(UNARY_FUNCS + BINARY_FUNCS))
        self.expect("(")
        args = [self.expr()]
        if self.accept(","):
            args.append(self.expr())
        self.expect(")")
        arity = 1 if name.text in UNARY_FUNCS else 2
        if len(args) != arity:
            raise ExprSyntaxError(
                f"{name.text}() takes {arity} argument{'s' if arity > 1 else ''}, got {len(args)}", name.offset
            )
        if arity == 1:
            return Unary(name.text, args[0], name.offset)
        return Binary(name.text, args[0], args[1], name.offset)


def _describe(tok: Token) -> str:
    if tok.kind == "end":
        return "unexpected end of input"
    return f"unexpected '{tok.text}'"


def parse(src: str) -> Node:
    if not src or not src.strip():
        raise ExprSyntaxError("empty expression", 0, expected="an expression")
    return _Parser(src).parse()


# =========================
# Printing
# =========================
def to_source(node: Node) -> str:
    """Fully parenthesized source; parse(to_source(n)) == n."""
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        if node.op == "neg":
            return f"(-{to_source(node.arg)})"
        return f"{node.op}({to_source(node.arg)})"
    if node.op in BINARY_FUNCS:
        return f"{node.op}({to_source(node.left)}, {to_source(node.right)})"
    return f"({to_source(node.left)} {node.op} {to_source(node.right)})"


def variables(node: Node) -> frozenset:
    if isinstance(node, Var):
        return frozenset([node.name])
    if isinstance(node, Const):
        return frozenset()
    if isinstance(node, Unary):
        return variables(node.arg)
    return variables(node.left) | variables(node.right)


# =========================
# Evaluation (vectorized over points)
# =========================
def _check(node: Node, out: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(out)):
        raise ExprDomainError("non-finite result", to_source(node))
    return out


def _eval(node: Node, env: Mapping[str, np.ndarray]) -> np.ndarray:
    if isinstance(node, Const):
        return np.asarray(node.value, dtype=float)
    if isinstance(node, Var):
        if node.name not in env:
            raise ExprDomainError(f"variable '{node.name}' undefined in this dimension", node.name)
        return env[node.name]

    if isinstance(node, Unary):
        a = _eval(node.arg, env)
        if node.op == "neg":
            return -a
        if node.op == "abs":
            return np.abs(a)
        if node.op == "exp":
            return _check(node, np.exp(a))
        if node.op == "log":
            if np.any(a <= 0):
                raise ExprDomainError("log of non-positive value", to_source(node))
            return np.log(a)
        if node.op == "sqrt":
            if np.any(a < 0):
                raise ExprDomainError("sqrt of negative value", to_source(node))
            return np.sqrt(a)
        raise ExprDomainError(f"unknown operator '{node.op}'", to_source(node))

    a = _eval(node.left, env)
    b = _eval(node.right, env)
    op = node.op
    if op == "+":
        return _check(node, a + b)
    if op == "-":
        return _check(node, a - b)
    if op == "*":
        return _check(node, a * b)
    if op == "/":
        if np.any(b == 0):
            raise ExprDomainError("division by zero", to_source(node))
        return _check(node, a / b)
    if op == "^":
        a, b = np.broadcast_arrays(a, b)
        if np.any((a < 0) & (b != np.round(b))):
            raise ExprDomainError("fractional power of negative base", to_source(node))
        if np.any((a == 0) & (b < 0)):
            raise ExprDomainError("zero to a negative power", to_source(node))
        return _check(node, np.power(a, b))
    if op == "min":
        return np.minimum(a, b)
    if op == "max":
        return np.maximum(a, b)
    raise ExprDomainError(f"unknown operator '{op}'", to_source(node))


def evaluate_many(node: Node, coords: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate at many points; coords[0] binds x, coords[1] binds y."""
    env = {name: np.asarray(c, dtype=float) for name, c in zip(VARIABLES, coords)}
    shape = np.broadcast_shapes(*(c.shape for c in env.values())) if env else ()
    with np.errstate(all="ignore"):
        out = _eval(node, env)
    return np.broadcast_to(out, shape).astype(float)


def evaluate(node: Node, point: Union[float, Sequence[float]]) -> float:
    if np.isscalar(point):
        point = (point,)
    return float(evaluate_many(node, [np.asarray(c, dtype=float) for c in point]))


def compile_expr(src: str):
    """Parse once; return a callable f(*coords) -> array for grid sampling."""
    node = parse(src)

    def fn(*coords):
        return evaluate_many(node, coords)

    fn.node = node
    fn.source = src
    return fn
