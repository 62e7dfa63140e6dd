"""Tokenizer, expression AST and recursive-descent expression parser.

Grammar (precedence low to high)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' INT)?
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Nodes carry a source span that is ignored by equality.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ModelSemanticError, ModelSyntaxError

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),;=\[\]])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text):
    out = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ModelSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


@dataclass(frozen=True)
class Span:
    line: int
    col: int


@dataclass(frozen=True)
class Num:
    value: Fraction
    text: str = field(default="", compare=False)
    span: Span = field(default=None, compare=False)


@dataclass(frozen=True)
class Name:
    id: str
    span: Span = field(default=None, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: object
    span: Span = field(default=None, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    span: Span = field(default=None, compare=False)


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int
    span: Span = field(default=None, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: object
    span: Span = field(default=None, compare=False)


def number_value(text):
    if re.fullmatch(r"\d+", text):
        return Fraction(int(text))
    return Fraction(text)


class TokenStream:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def peek(self, k=1):
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def next(self):
        t = self.tokens[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text, kind=None):
        t = self.tok
        return t.text == text and (kind is None or t.kind == kind)

    def accept(self, text):
        if self.tok.text == text and self.tok.kind in ("op", "name"):
            return self.next()
        return None

    def expect(self, text):
        t = self.tok
        if t.text != text:
            shown = t.text or "end of input"
            raise ModelSyntaxError(f"expected {text!r}, found {shown!r}", t.line, t.col)
        return self.next()

    def expect_kind(self, kind):
        t = self.tok
        if t.kind != kind:
            shown = t.text or "end of input"
            raise ModelSyntaxError(f"expected {kind}, found {shown!r}", t.line, t.col)
        return self.next()

    def error(self, message):
        t = self.tok
        raise ModelSyntaxError(message, t.line, t.col)


def parse_expr(ts):
    node = _term(ts)
    while ts.tok.text in ("+", "-") and ts.tok.kind == "op":
        t = ts.next()
        node = BinOp(t.text, node, _term(ts), Span(t.line, t.col))
    return node


def _term(ts):
    node = _unary(ts)
    while ts.tok.text in ("*", "/") and ts.tok.kind == "op":
        t = ts.next()
        node = BinOp(t.text, node, _unary(ts), Span(t.line, t.col))
    return node


def _unary(ts):
    t = ts.tok
    if t.kind == "op" and t.text == "-":
        ts.next()
        return Neg(_unary(ts), Span(t.line, t.col))
    if t.kind == "op" and t.text == "+":
        ts.next()
        return _unary(ts)
    return _power(ts)


def _power(ts):
    base = _atom(ts)
    if ts.tok.kind == "op" and ts.tok.text == "^":
        t = ts.next()
        e = ts.tok
        if e.kind != "number" or not re.fullmatch(r"\d+", e.text):
            raise ModelSyntaxError("exponent must be a non-negative integer literal", e.line, e.col)
        ts.next()
        return Pow(base, int(e.text), Span(t.line, t.col))
    return base


def _atom(ts):
    t = ts.tok
    if t.kind == "number":
        ts.next()
        return Num(number_value(t.text), t.text, Span(t.line, t.col))
    if t.kind == "name":
        ts.next()
        if ts.tok.kind == "op" and ts.tok.text == "(":
            ts.next()
            arg = parse_expr(ts)
            ts.expect(")")
            return Call(t.text, arg, Span(t.line, t.col))
        return Name(t.text, Span(t.line, t.col))
    if t.kind == "op" and t.text == "(":
        ts.next()
        node = parse_expr(ts)
        ts.expect(")")
        return node
    shown = t.text or "end of input"
    raise ModelSyntaxError(f"unexpected {shown!r} in expression", t.line, t.col)


def parse_expression(text):
    ts = TokenStream(tokenize(text))
    node = parse_expr(ts)
    if ts.tok.kind != "eof":
        ts.error(f"unexpected {ts.tok.text!r} after expression")
    return node


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def to_source(node, parent=0, right=False):
    """Render an AST back to source text with minimal parentheses."""
    if isinstance(node, Num):
        return node.text or _fraction_text(node.value)
    if isinstance(node, Name):
        return node.id
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Pow):
        inner = to_source(node.base, 4)
        if isinstance(node.base, Pow):
            inner = f"({inner})"
        return f"{inner}^{node.exponent}"
    if isinstance(node, Neg):
        text = "-" + to_source(node.operand, 3)
        return f"({text})" if parent >= 2 else text
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        text = f"{to_source(node.left, p)} {node.op} {to_source(node.right, p, True)}"
        if p < parent or (p == parent and right):
            return f"({text})"
        return text
    raise TypeError(node)


def _fraction_text(v):
    if v.denominator == 1:
        return str(v.numerator)
    return f"({v.numerator}/{v.denominator})"


# numeric functions of (u, v) for parametrized cycles

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt}
_CONSTS = {"pi": math.pi, "e": math.e}


def eval_numeric(node, env):
    if isinstance(node, Num):
        return float(node.value)
    if isinstance(node, Name):
        if node.id in env:
            return env[node.id]
        if node.id in _CONSTS:
            return _CONSTS[node.id]
        raise ModelSemanticError(f"unknown name {node.id!r}", *_where(node))
    if isinstance(node, Neg):
        return -eval_numeric(node.operand, env)
    if isinstance(node, Pow):
        return eval_numeric(node.base, env) ** node.exponent
    if isinstance(node, Call):
        if node.func not in _FUNCS:
            raise ModelSemanticError(f"unknown function {node.func!r}", *_where(node))
        return _FUNCS[node.func](eval_numeric(node.arg, env))
    if isinstance(node, BinOp):
        a = eval_numeric(node.left, env)
        b = eval_numeric(node.right, env)
        return {"+": a + b, "-": a - b, "*": a * b}.get(node.op) if node.op != "/" else a / b
    raise TypeError(node)


def _where(node):
    return (node.span.line, node.span.col) if node.span else (None, None)


def _num(v):
    return Num(Fraction(v))


def diff_node(node, var):
    """Symbolic derivative of a numeric expression AST."""
    if isinstance(node, Num):
        return _num(0)
    if isinstance(node, Name):
        return _num(1 if node.id == var else 0)
    if isinstance(node, Neg):
        return Neg(diff_node(node.operand, var))
    if isinstance(node, BinOp):
        da, db = diff_node(node.left, var), diff_node(node.right, var)
        if node.op in "+-":
            return BinOp(node.op, da, db)
        if node.op == "*":
            return BinOp("+", BinOp("*", da, node.right), BinOp("*", node.left, db))
        # quotient rule
        num = BinOp("-", BinOp("*", da, node.right), BinOp("*", node.left, db))
        return BinOp("/", num, Pow(node.right, 2))
    if isinstance(node, Pow):
        n = node.exponent
        if n == 0:
            return _num(0)
        inner = node.base if n == 2 else Pow(node.base, n - 1)
        if n == 1:
            return diff_node(node.base, var)
        return BinOp("*", BinOp("*", _num(n), inner), diff_node(node.base, var))
    if isinstance(node, Call):
        da = diff_node(node.arg, var)
        f = node.func
        if f == "sin":
            outer = Call("cos", node.arg)
        elif f == "cos":
            outer = Neg(Call("sin", node.arg))
        elif f == "exp":
            outer = node
        elif f == "sqrt":
            outer = BinOp("/", _num(Fraction(1, 2)), node)
        else:
            raise ModelSemanticError(f"unknown function {f!r}", *_where(node))
        return BinOp("*", outer, da)
    raise TypeError(node)
