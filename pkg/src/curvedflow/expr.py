"""Scalar expressions for metric coefficients and conformal factors.

A small recursive-descent parser produces an immutable tree that can be
evaluated on floats or numpy arrays and differentiated symbolically.

Grammar (lowest to highest precedence)::

    sum    := prod (('+' | '-') prod)*
    prod   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | NAME | NAME '(' sum ')' | '(' sum ')'

``-x^2`` therefore means ``-(x^2)`` and ``2^3^2`` means ``2^(3^2)``.
The name ``pi`` is always available as a constant.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import numpy as np

FUNCTIONS = ("sin", "cos", "tan", "sinh", "cosh", "tanh", "exp", "ln", "sqrt", "abs")
COORDINATES = frozenset({"x1", "x2", "x3"})


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownNameError(ExprError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r} at offset {offset}")
        self.name = name
        self.offset = offset


class ExprDomainError(ExprError):
    """Raised when evaluation leaves the real domain of a node."""

    def __init__(self, message: str, node: "Expression"):
        super().__init__(f"{message} in {to_string(node)}")
        self.node = node


# --------------------------------------------------------------------------
# tree


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expression"


Expression = Union[Const, Var, Neg, BinOp, Call]

ZERO = Const(0.0)
ONE = Const(1.0)


def free_names(e: Expression) -> frozenset[str]:
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, Var):
        return frozenset({e.name})
    if isinstance(e, (Neg, Call)):
        return free_names(e.arg)
    return free_names(e.left) | free_names(e.right)


def depends_on(e: Expression, name: str) -> bool:
    return name in free_names(e)


# --------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, allowed: frozenset[str]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.allowed = allowed

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, off = self.take()
        if val != value or kind != "op":
            what = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", off)

    def parse(self) -> Expression:
        e = self.sum()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", off)
        return e

    def sum(self) -> Expression:
        e = self.prod()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.prod())
        return e

    def prod(self) -> Expression:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.unary())
        return e

    def unary(self) -> Expression:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expression:
        kind, val, off = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.sum()
                self.expect(")")
                return Call(val, arg)
            if val == "pi":
                return Const(math.pi)
            if val not in self.allowed:
                raise UnknownNameError(val, off)
            return Var(val)
        if kind == "op" and val == "(":
            e = self.sum()
            self.expect(")")
            return e
        what = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {what}", off)


def parse(text: str, allowed_names: Iterable[str] = ("x1", "x3")) -> Expression:
    """Parse ``text`` into an expression tree.

    Raises ExprSyntaxError (with ``.offset``) on malformed input and
    UnknownNameError for identifiers outside ``allowed_names``.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text, frozenset(allowed_names)).parse()


# --------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def to_string(e: Expression) -> str:
    """Render ``e`` in the parser's grammar (fully parenthesised operands)."""
    if isinstance(e, Const):
        r = repr(float(e.value))
        return f"({r})" if e.value < 0 or r in ("inf", "nan") else r
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_string(e.arg)})"
    if isinstance(e, Call):
        return f"{e.func}({to_string(e.arg)})"
    return f"({to_string(e.left)}{e.op}{to_string(e.right)})"


# --------------------------------------------------------------------------
# evaluation

Number = Union[float, np.ndarray]


def _check(bad, message: str, node: Expression):
    if np.any(bad):
        raise ExprDomainError(message, node)


def _eval(e: Expression, env: Mapping[str, Number]) -> Number:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Neg):
        return -_eval(e.arg, env)
    if isinstance(e, BinOp):
        a = _eval(e.left, env)
        b = _eval(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            _check(np.asarray(b) == 0, "division by zero", e)
            return a / b
        # power
        a_arr = np.asarray(a, dtype=float)
        b_arr = np.asarray(b, dtype=float)
        integral = b_arr == np.round(b_arr)
        _check((a_arr < 0) & ~integral, "negative base with non-integer exponent", e)
        _check((a_arr == 0) & (b_arr < 0), "division by zero", e)
        with np.errstate(over="ignore"):
            out = np.power(a_arr, b_arr)
        return out if out.ndim else float(out)
    # function call
    x = _eval(e.arg, env)
    f = e.func
    if f == "ln":
        _check(np.asarray(x) <= 0, "logarithm of non-positive value", e)
        return np.log(x)
    if f == "sqrt":
        _check(np.asarray(x) < 0, "square root of negative value", e)
        return np.sqrt(x)
    with np.errstate(over="ignore"):
        return getattr(np, f if f != "abs" else "abs")(x)


def evaluate(e: Expression, bindings: Mapping[str, Number]) -> Number:
    """Evaluate ``e`` on scalar or array bindings.

    Returns a float when every binding is scalar, else an ndarray broadcast
    over the bindings.
    """
    missing = free_names(e) - set(bindings)
    if missing:
        raise ExprError(f"no binding for {sorted(missing)}")
    env = {k: (np.asarray(v, dtype=float) if np.ndim(v) else float(v)) for k, v in bindings.items()}
    out = _eval(e, env)
    shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else ()
    if np.ndim(out) == 0 and shape == ():
        return float(out)
    return np.broadcast_to(out, np.broadcast_shapes(np.shape(out), shape)).astype(float)


# --------------------------------------------------------------------------
# symbolic differentiation
#
# The constructors fold the trivial 0/1 cases so that repeated derivatives
# stay small; no further simplification is attempted.


def _is_const(e: Expression, value: float | None = None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def add(a: Expression, b: Expression) -> Expression:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    return BinOp("+", a, b)


def sub(a: Expression, b: Expression) -> Expression:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    return BinOp("-", a, b)


def neg(a: Expression) -> Expression:
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def mul(a: Expression, b: Expression) -> Expression:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    return BinOp("*", a, b)


def div(a: Expression, b: Expression) -> Expression:
    if _is_const(a, 0.0):
        return ZERO
    if _is_const(b, 1.0):
        return a
    return BinOp("/", a, b)


def power(a: Expression, b: Expression) -> Expression:
    if _is_const(b, 1.0):
        return a
    if _is_const(b, 0.0):
        return ONE
    return BinOp("^", a, b)


def call(func: str, a: Expression) -> Expression:
    return Call(func, a)


def derivative(e: Expression, var: str) -> Expression:
    """Symbolic d e / d var (unsimplified beyond trivial folding)."""
    if not depends_on(e, var):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Neg):
        return neg(derivative(e.arg, var))
    if isinstance(e, BinOp):
        u, v = e.left, e.right
        du, dv = derivative(u, var), derivative(v, var)
        if e.op == "+":
            return add(du, dv)
        if e.op == "-":
            return sub(du, dv)
        if e.op == "*":
            return add(mul(du, v), mul(u, dv))
        if e.op == "/":
            return div(sub(mul(du, v), mul(u, dv)), power(v, Const(2.0)))
        # power
        if not depends_on(v, var):
            # d u^n = n u^(n-1) u'
            return mul(mul(v, power(u, sub(v, ONE))), du)
        if not depends_on(u, var):
            return mul(mul(e, call("ln", u)), dv)
        return mul(e, add(mul(dv, call("ln", u)), div(mul(v, du), u)))
    # Call
    u = e.arg
    du = derivative(u, var)
    f = e.func
    if f == "sin":
        outer = call("cos", u)
    elif f == "cos":
        outer = neg(call("sin", u))
    elif f == "tan":
        outer = div(ONE, power(call("cos", u), Const(2.0)))
    elif f == "sinh":
        outer = call("cosh", u)
    elif f == "cosh":
        outer = call("sinh", u)
    elif f == "tanh":
        outer = sub(ONE, power(call("tanh", u), Const(2.0)))
    elif f == "exp":
        outer = e
    elif f == "ln":
        return div(du, u)
    elif f == "sqrt":
        return div(du, mul(Const(2.0), e))
    elif f == "abs":
        outer = div(u, e)
    else:  # pragma: no cover - parser restricts function names
        raise ExprError(f"unknown function {f}")
    return mul(outer, du)


def substitute(e: Expression, values: Mapping[str, float]) -> Expression:
    """Replace variables by constants (used to freeze a coordinate)."""
    if isinstance(e, Var):
        return Const(float(values[e.name])) if e.name in values else e
    if isinstance(e, Const):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, values))
    if isinstance(e, Call):
        return Call(e.func, substitute(e.arg, values))
    return BinOp(e.op, substitute(e.left, values), substitute(e.right, values))


def as_expression(value, allowed_names: Iterable[str] = ("x1", "x3")) -> Expression:
    """Accept an Expression, expression text, or a number."""
    if isinstance(value, (Const, Var, Neg, BinOp, Call)):
        return value
    if isinstance(value, (int, float)):
        return Const(float(value))
    return parse(str(value), allowed_names)
