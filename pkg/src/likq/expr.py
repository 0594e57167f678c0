"""Smooth scalar expressions over the variable families x, y and z.

Expressions are immutable trees built from :class:`Const`, :class:`Var`,
:class:`Unary`, :class:`Binary` and :class:`IntPow`.  Text is read by
:func:`parse_expr` according to the grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := ["-"] atom ["^" integer]
    atom   := number | var | func "(" expr ")" | "(" expr ")"
    var    := ("x" | "y" | "z") positive-integer
    func   := "sin" | "cos" | "exp" | "log" | "sqrt"

A leading minus binds looser than ``^``: ``-x1^2`` is ``-(x1^2)``.  The
exponent may carry a sign (``x1^-2``).

Variables are 1-based as in the text (``x1`` is ``Var("x", 1)``); the
gradient layout is the concatenation ``(x_1..x_n, y_1..y_s, z_1..z_s)``.
There is deliberately no ``abs``: nonsmoothness only enters through the
switching structure of an abs-normal problem.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import DomainError, ParseError

FAMILIES = ("x", "y", "z")
FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")
BINARY_OPS = ("+", "-", "*", "/")


@dataclass(frozen=True)
class Const:
    value: float

    def __str__(self):
        return format_expr(self)


@dataclass(frozen=True)
class Var:
    family: str
    index: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown variable family {self.family!r}")
        if self.index < 1:
            raise ValueError("variable indices are 1-based")

    def __str__(self):
        return f"{self.family}{self.index}"


@dataclass(frozen=True)
class Unary:
    """``op`` is ``"neg"`` or one of :data:`FUNCTIONS`."""

    op: str
    arg: Expr

    def __str__(self):
        return format_expr(self)


@dataclass(frozen=True)
class Binary:
    op: str
    left: Expr
    right: Expr

    def __str__(self):
        return format_expr(self)


@dataclass(frozen=True)
class IntPow:
    base: Expr
    exponent: int

    def __str__(self):
        return format_expr(self)


Expr = Union[Const, Var, Unary, Binary, IntPow]


class Dims(NamedTuple):
    n: int
    s: int = 0
    p: int = 0
    q: int = 0


@dataclass(frozen=True)
class Point:
    """Argument tuple ``(x, y, z)`` of the smooth pieces."""

    x: tuple
    y: tuple = ()
    z: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        object.__setattr__(self, "z", tuple(float(v) for v in self.z))
        if len(self.y) != len(self.z):
            raise ValueError("y and z must have the same length")

    @property
    def n(self):
        return len(self.x)

    @property
    def s(self):
        return len(self.z)

    def flat(self):
        return np.array(self.x + self.y + self.z)

    @classmethod
    def from_flat(cls, w, n, s):
        w = list(w)
        return cls(w[:n], w[n : n + s], w[n + s : n + 2 * s])


class DualValue(NamedTuple):
    value: float
    derivative: float


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)
_VAR = re.compile(r"([xyz])(\d+)$")


class _Parser:
    def __init__(self, text, dims):
        self.text = text
        self.dims = dims
        self.tokens = []
        pos = 0
        while True:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos >= len(text):
                break
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                raise ParseError(f"unexpected character {text[pos]!r}", pos + 1)
            kind = m.lastgroup
            start = m.start(kind)
            self.tokens.append((kind, m.group(kind), start + 1))
            pos = m.end()
        self.end = len(text) + 1
        self.i = 0

    def peek(self):
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return ("end", "", self.end)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.peek()
        if text != value or kind != "op":
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", pos)
        self.i += 1

    def parse(self):
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {text!r}", pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            e = Binary(op, e, self.term())
        return e

    def term(self):
        e = self.factor()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            e = Binary(op, e, self.factor())
        return e

    def factor(self):
        negate = False
        if self.peek()[:2] == ("op", "-"):
            self.take()
            negate = True
        literal = self.peek()[0] == "num"
        e = self.atom()
        if negate and literal and self.peek()[:2] != ("op", "^"):
            # "-2" is the constant -2 (so negative constants print and reparse unchanged)
            return Const(-e.value)
        if self.peek()[:2] == ("op", "^"):
            self.take()
            sign = 1
            if self.peek()[:2] in (("op", "-"), ("op", "+")):
                sign = -1 if self.take()[1] == "-" else 1
            kind, text, pos = self.take()
            if kind != "num" or not text.isdigit():
                raise ParseError("exponent must be an integer literal", pos)
            e = IntPow(e, sign * int(text))
        return Unary("neg", e) if negate else e

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            if text in FUNCTIONS:
                self.expect("(")
                e = self.expr()
                self.expect(")")
                return Unary(text, e)
            m = _VAR.match(text)
            if m is None:
                raise ParseError(f"unknown identifier {text!r}", pos)
            family, index = m.group(1), int(m.group(2))
            if index < 1:
                raise ParseError(f"variable {text}: indices start at 1", pos)
            if self.dims is not None:
                bound = self.dims.n if family == "x" else self.dims.s
                if index > bound:
                    raise ParseError(
                        f"variable {text} out of range ({family} has {bound} entries)", pos
                    )
            return Var(family, index)
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"expected a number, variable, function or '(', found {found}", pos)


def parse_expr(text: str, dims=None) -> Expr:
    """Parse ``text`` into an expression tree.

    ``dims`` is ``(n, s, p, q)`` or a :class:`Dims`; when given, variable
    indices are checked against ``n`` (for x) and ``s`` (for y, z).
    """
    if dims is not None and not isinstance(dims, Dims):
        dims = Dims(*dims)
    return _Parser(text, dims).parse()


# ---------------------------------------------------------------- printing

_PREC_SUM, _PREC_PRODUCT, _PREC_FACTOR = 1, 2, 3


def _is_atom(e):
    # negative constants print as "(-c)", which is atom-like
    return isinstance(e, (Var, Const)) or (isinstance(e, Unary) and e.op != "neg")


def _prec(e):
    if isinstance(e, Binary):
        return _PREC_SUM if e.op in "+-" else _PREC_PRODUCT
    if isinstance(e, Unary) and e.op == "neg":
        return _PREC_FACTOR
    if isinstance(e, IntPow):
        return _PREC_FACTOR
    return 4


def format_expr(e: Expr) -> str:
    """Render ``e`` so that :func:`parse_expr` rebuilds a structurally equal tree."""
    match e:
        case Const(value):
            if math.copysign(1.0, value) < 0:
                return f"(-{-value!r})"
            return repr(float(value))
        case Var(family, index):
            return f"{family}{index}"
        case Unary("neg", Const(value)) if math.copysign(1.0, value) > 0:
            return f"-({value!r})"
        case Unary("neg", arg):
            if _is_atom(arg) or isinstance(arg, IntPow):
                return "-" + format_expr(arg)
            return f"-({format_expr(arg)})"
        case Unary(op, arg):
            return f"{op}({format_expr(arg)})"
        case IntPow(base, k):
            inner = format_expr(base) if _is_atom(base) else f"({format_expr(base)})"
            return f"{inner}^{k}"
        case Binary(op, left, right):
            p = _PREC_SUM if op in "+-" else _PREC_PRODUCT
            lt = format_expr(left)
            if _prec(left) < p:
                lt = f"({lt})"
            rt = format_expr(right)
            if _prec(right) <= p:
                rt = f"({rt})"
            return f"{lt} {op} {rt}"
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------- analysis


def free_vars(e: Expr) -> set:
    """Set of ``(family, index)`` pairs referenced by ``e``."""
    out = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add((node.family, node.index))
        elif isinstance(node, Unary):
            stack.append(node.arg)
        elif isinstance(node, Binary):
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, IntPow):
            stack.append(node.base)
    return out


def depth(e: Expr) -> int:
    match e:
        case Const() | Var():
            return 0
        case Unary(_, arg) | IntPow(arg, _):
            return 1 + depth(arg)
        case Binary(_, left, right):
            return 1 + max(depth(left), depth(right))
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------- evaluation


def _lookup(node, x, y, z):
    family = node.family
    seq = x if family == "x" else (y if family == "y" else z)
    try:
        return seq[node.index - 1]
    except IndexError:
        raise DomainError(f"variable {node} outside the point dimensions", node) from None


def _value(e, x, y, z):
    """Plain evaluation on raw sequences."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return _lookup(e, x, y, z)
    if isinstance(e, Binary):
        a = _value(e.left, x, y, z)
        b = _value(e.right, x, y, z)
        op = e.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if b == 0.0:
            raise DomainError("division by zero", e)
        return a / b
    if isinstance(e, Unary):
        v = _value(e.arg, x, y, z)
        op = e.op
        if op == "neg":
            return -v
        if op == "sin":
            return math.sin(v)
        if op == "cos":
            return math.cos(v)
        if op == "exp":
            try:
                return math.exp(v)
            except OverflowError:
                raise DomainError("exp overflow", e) from None
        if op == "log":
            if v <= 0.0:
                raise DomainError("log of non-positive input", e)
            return math.log(v)
        if op == "sqrt":
            if v < 0.0:
                raise DomainError("sqrt of negative input", e)
            return math.sqrt(v)
        raise TypeError(f"unknown unary operator {op!r}")
    if isinstance(e, IntPow):
        v = _value(e.base, x, y, z)
        if v == 0.0 and e.exponent < 0:
            raise DomainError("zero raised to a negative power", e)
        try:
            return v**e.exponent
        except OverflowError:
            raise DomainError("power overflow", e) from None
    raise TypeError(f"not an expression: {e!r}")


def _dual(e, x, y, z, seed):
    """Forward-mode pass; ``seed`` is the ``(family, index)`` being differentiated."""
    if isinstance(e, Const):
        return e.value, 0.0
    if isinstance(e, Var):
        return _lookup(e, x, y, z), (1.0 if (e.family, e.index) == seed else 0.0)
    if isinstance(e, Binary):
        a, da = _dual(e.left, x, y, z, seed)
        b, db = _dual(e.right, x, y, z, seed)
        op = e.op
        if op == "+":
            return a + b, da + db
        if op == "-":
            return a - b, da - db
        if op == "*":
            return a * b, da * b + a * db
        if b == 0.0:
            raise DomainError("division by zero", e)
        q = a / b
        return q, (da - q * db) / b
    if isinstance(e, Unary):
        v, dv = _dual(e.arg, x, y, z, seed)
        op = e.op
        if op == "neg":
            return -v, -dv
        if op == "sin":
            return math.sin(v), math.cos(v) * dv
        if op == "cos":
            return math.cos(v), -math.sin(v) * dv
        if op == "exp":
            try:
                ev = math.exp(v)
            except OverflowError:
                raise DomainError("exp overflow", e) from None
            return ev, ev * dv
        if op == "log":
            if v <= 0.0:
                raise DomainError("log of non-positive input", e)
            return math.log(v), dv / v
        if op == "sqrt":
            if v < 0.0:
                raise DomainError("sqrt of negative input", e)
            r = math.sqrt(v)
            if r == 0.0:
                if dv != 0.0:
                    raise DomainError("sqrt is not differentiable at 0", e)
                return 0.0, 0.0
            return r, dv / (2.0 * r)
        raise TypeError(f"unknown unary operator {op!r}")
    if isinstance(e, IntPow):
        v, dv = _dual(e.base, x, y, z, seed)
        k = e.exponent
        if k == 0:
            return 1.0, 0.0
        if v == 0.0 and k < 0:
            raise DomainError("zero raised to a negative power", e)
        try:
            return v**k, k * v ** (k - 1) * dv
        except OverflowError:
            raise DomainError("power overflow", e) from None
    raise TypeError(f"not an expression: {e!r}")


def _finite(value, e):
    if not math.isfinite(value):
        raise DomainError("non-finite result", e)
    return value


def eval_expr(e: Expr, p: Point) -> float:
    return _finite(_value(e, p.x, p.y, p.z), e)


def eval_dual(e: Expr, p: Point, seed) -> DualValue:
    """Value and directional derivative along the coordinate ``seed = (family, index)``."""
    v, d = _dual(e, p.x, p.y, p.z, seed)
    return DualValue(_finite(v, e), _finite(d, e))


def variable_order(n, s):
    return [("x", i) for i in range(1, n + 1)] + [
        (f, i) for f in ("y", "z") for i in range(1, s + 1)
    ]


def _grad_raw(e, x, y, z, n, s):
    g = np.zeros(n + 2 * s)
    offsets = {"x": 0, "y": n, "z": n + s}
    used = free_vars(e)
    for family, index in sorted(used):
        _, d = _dual(e, x, y, z, (family, index))
        g[offsets[family] + index - 1] = _finite(d, e)
    return g


def grad_expr(e: Expr, p: Point) -> np.ndarray:
    """Gradient with respect to ``(x, y, z)``, one forward pass per referenced variable.

    Entries of variables that ``e`` does not reference are exactly zero.
    """
    _finite(_value(e, p.x, p.y, p.z), e)
    return _grad_raw(e, p.x, p.y, p.z, p.n, p.s)


def fd_grad_oracle(e: Expr, p: Point, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient, independent of the forward-mode path."""
    w = p.flat()
    g = np.empty(w.size)
    for k in range(w.size):
        wp = w.copy()
        wm = w.copy()
        wp[k] += h
        wm[k] -= h
        fp = eval_expr(e, Point.from_flat(wp, p.n, p.s))
        fm = eval_expr(e, Point.from_flat(wm, p.n, p.s))
        g[k] = (fp - fm) / (2.0 * h)
    return g


def random_expr(rng, variables: Sequence, max_depth: int, ops=None, const_range=(-2.0, 2.0)):
    """Draw a random tree over ``variables`` (``(family, index)`` pairs).

    ``ops`` restricts the node types; by default every primitive may appear.
    Leaves are variables or constants; with no variables only constants are drawn.
    """
    if ops is None:
        ops = ("+", "-", "*", "/", "neg", "sin", "cos", "exp", "log", "sqrt", "^")
    binary = [o for o in ops if o in BINARY_OPS]
    unary = [o for o in ops if o in ("neg",) + FUNCTIONS]
    use_pow = "^" in ops
    lo, hi = const_range

    def leaf():
        if variables and rng.random() < 0.7:
            family, index = variables[rng.integers(len(variables))]
            return Var(family, int(index))
        return Const(float(np.round(rng.uniform(lo, hi), 3)))

    def build(depth_left):
        if depth_left == 0 or rng.random() < 0.25:
            return leaf()
        kinds = (["b"] * 2 if binary else []) + (["u"] if unary else []) + (["p"] if use_pow else [])
        kind = kinds[rng.integers(len(kinds))]
        if kind == "b":
            op = binary[rng.integers(len(binary))]
            return Binary(op, build(depth_left - 1), build(depth_left - 1))
        if kind == "u":
            return Unary(unary[rng.integers(len(unary))], build(depth_left - 1))
        return IntPow(build(depth_left - 1), int(rng.integers(-2, 4)))

    return build(max_depth)
