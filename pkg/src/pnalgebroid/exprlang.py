"""A small expression language for coefficient fields.

Grammar (whitespace is insignificant)::

    expr     := term (("+" | "-") term)*
    term     := unary (("*" | "/") unary)*
    unary    := "-" unary | power
    power    := primary ("^" unary)?          (right-associative)
    primary  := NUMBER | IDENT | FUNC "(" expr ")" | "(" expr ")"
    FUNC     := "exp" | "log" | "sin" | "cos"
    IDENT    := [A-Za-z][A-Za-z0-9_]*
    NUMBER   := digits ["." digits] [("e"|"E") ["+"|"-"] digits] | "." digits ...

The right operand of ``^`` must fold to an integer constant; the parser
stores it as an ``int``.  Identifiers must be declared coordinates.

>>> e = parse("exp(q1 - q2)", ["q1", "q2"])
>>> e
Call(fn='exp', arg=Bin(op='-', left=Var(name='q1', index=0), right=Var(name='q2', index=1)))
>>> unparse(e)
'exp((q1 - q2))'
"""

from __future__ import annotations

import functools

import math
import re
from dataclasses import dataclass, field

from . import jets

FUNCTIONS = ("exp", "log", "sin", "cos")


class ExprError(ValueError):
    """Base class for expression errors; ``offset`` is a byte offset or ``None``."""

    def __init__(self, msg, offset=None):
        self.offset = offset
        if offset is not None:
            msg = f"{msg} (at offset {offset})"
        super().__init__(msg)


class ExprSyntaxError(ExprError):
    pass


class UnboundIdentifierError(ExprError):
    def __init__(self, name, offset=None):
        self.name = name
        super().__init__(f"unbound identifier {name!r}", offset)


class NonIntegerExponentError(ExprError):
    pass


class ExprEvaluationError(ArithmeticError):
    """A singular evaluation (division by zero, log of a non-positive value)."""

    def __init__(self, msg, offset=None, node=None):
        self.offset = offset
        self.node = node
        where = f" in {unparse(node)!r} at offset {offset}" if node is not None else ""
        super().__init__(f"{msg}{where}")


# -- AST ------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float
    pos: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str
    index: int
    pos: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    arg: object
    pos: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object
    pos: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int
    pos: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object
    pos: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Expression:
    """A parsed, validated expression over an ordered list of coordinates."""

    root: object
    coords: tuple
    text: str = field(default="", compare=False)

    def __str__(self):
        return unparse(self.root)

    def variables(self):
        out = set()
        _collect_vars(self.root, out)
        return out

    def jet(self, point, order=jets.DEFAULT_ORDER):
        return evaluate(self, point, order)

    def real(self, point):
        return evaluate_real(self, point)


def _collect_vars(node, out):
    if isinstance(node, Var):
        out.add(node.name)
    elif isinstance(node, (Neg, Call)):
        _collect_vars(node.arg, out)
    elif isinstance(node, Pow):
        _collect_vars(node.base, out)
    elif isinstance(node, Bin):
        _collect_vars(node.left, out)
        _collect_vars(node.right, out)


# -- tokenizer ------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, coords):
        self.text = text
        self.coords = {name: i for i, name in enumerate(coords)}
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos)

    def parse(self):
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            _, op, pos = self.take()
            node = Bin(op, node, self.term(), pos)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            _, op, pos = self.take()
            node = Bin(op, node, self.unary(), pos)
        return node

    def unary(self):
        kind, text, pos = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.unary(), pos)
        return self.power()

    def power(self):
        base = self.primary()
        kind, text, pos = self.peek()
        if kind == "op" and text == "^":
            self.take()
            exp_start = self.peek()[2]
            exponent = self.unary()
            return Pow(base, _fold_integer(exponent, exp_start), pos)
        return base

    def primary(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text), pos)
        if kind == "ident":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg, pos)
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                raise ExprSyntaxError(f"unknown function {text!r}", pos)
            if text not in self.coords:
                raise UnboundIdentifierError(text, pos)
            return Var(text, self.coords[text], pos)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", pos)


def _fold_integer(node, pos):
    try:
        value = _fold(node)
    except _NotConstant:
        raise NonIntegerExponentError("exponent must be an integer constant", pos) from None
    except (ZeroDivisionError, OverflowError):
        raise NonIntegerExponentError("exponent does not evaluate to a finite integer", pos) from None
    if not float(value).is_integer():
        raise NonIntegerExponentError(f"non-integer exponent {value!r}", pos)
    return int(value)


class _NotConstant(Exception):
    pass


def _fold(node):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Neg):
        return -_fold(node.arg)
    if isinstance(node, Pow):
        return _fold(node.base) ** node.exponent
    raise _NotConstant


def parse(text, coords):
    """Parse ``text`` into an :class:`Expression` over the coordinate names ``coords``."""
    coords = tuple(coords)
    for c in coords:
        if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", c) or c in FUNCTIONS:
            raise ExprError(f"invalid coordinate name {c!r}")
    root = _Parser(text, coords).parse()
    return Expression(root, coords, text)


# -- printing -------------------------------------------------------------


def unparse(node):
    """Canonical text form; ``parse(unparse(e))`` reproduces ``e``."""
    if isinstance(node, Expression):
        node = node.root
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{unparse(node.arg)})"
    if isinstance(node, Bin):
        return f"({unparse(node.left)} {node.op} {unparse(node.right)})"
    if isinstance(node, Pow):
        return f"{_atom(node.base)}^{node.exponent}"
    if isinstance(node, Call):
        return f"{node.fn}({unparse(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def _atom(node):
    text = unparse(node)
    # Bin and Neg already print with outer parentheses
    if isinstance(node, (Var, Call, Bin, Neg)):
        return text
    return f"({text})"


# -- evaluation -----------------------------------------------------------


def evaluate(expr, point, order=jets.DEFAULT_ORDER):
    """Exact jet of ``expr`` at ``point`` truncated at ``order``."""
    point = tuple(float(x) for x in point)
    if len(point) != len(expr.coords):
        raise ValueError(f"point has {len(point)} entries, expression expects {len(expr.coords)}")
    seeds = _seeds(point, order) if point else None
    sp = jets.space(len(point), order)
    return _eval_jet(expr.root, seeds, sp)


@functools.lru_cache(maxsize=64)
def _seeds(point, order):
    return tuple(jets.seed_point(point, order))


def _eval_jet(node, seeds, sp):
    if isinstance(node, Num):
        return sp.constant(node.value)
    if isinstance(node, Var):
        return seeds[node.index]
    if isinstance(node, Neg):
        return -_eval_jet(node.arg, seeds, sp)
    try:
        if isinstance(node, Bin):
            a = _eval_jet(node.left, seeds, sp)
            b = _eval_jet(node.right, seeds, sp)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            return a / b
        if isinstance(node, Pow):
            return _eval_jet(node.base, seeds, sp) ** node.exponent
        if isinstance(node, Call):
            return getattr(_eval_jet(node.arg, seeds, sp), node.fn)()
    except jets.SingularEvaluationError as exc:
        raise ExprEvaluationError(str(exc), node.pos, node) from exc
    raise TypeError(f"not an expression node: {node!r}")


def evaluate_real(expr, point):
    """Plain floating-point evaluation by direct recursion (no jets)."""
    return _eval_real(expr.root, tuple(float(x) for x in point))


def _eval_real(node, point):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return point[node.index]
    if isinstance(node, Neg):
        return -_eval_real(node.arg, point)
    if isinstance(node, Bin):
        a = _eval_real(node.left, point)
        b = _eval_real(node.right, point)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if b == 0.0:
            raise ExprEvaluationError("division by zero", node.pos, node)
        return a / b
    if isinstance(node, Pow):
        base = _eval_real(node.base, point)
        if base == 0.0 and node.exponent < 0:
            raise ExprEvaluationError("division by zero", node.pos, node)
        return base**node.exponent
    if isinstance(node, Call):
        x = _eval_real(node.arg, point)
        if node.fn == "log" and x <= 0.0:
            raise ExprEvaluationError("log of a non-positive value", node.pos, node)
        return getattr(math, node.fn)(x)
    raise TypeError(f"not an expression node: {node!r}")
