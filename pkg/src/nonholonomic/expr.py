"""Scalar expressions over coordinates, velocities and parameters.

Expressions are immutable trees built from four node types::

    Const(value)            real literal
    Var(name, kind)         coordinate, velocity ("d" + coordinate name) or parameter
    Unary(op, child)        neg, sin, cos, tan, exp, log, sqrt
    Binary(op, left, right) + - * / ^

The grammar accepted by :func:`parse` is the usual infix one: ``^`` is right
associative and binds tighter than unary minus, which binds tighter than
``*`` and ``/``, which bind tighter than ``+`` and ``-``.  ``**`` is accepted
as a synonym for ``^``.

Besides a tree-walking :func:`evaluate`, expressions can be compiled into
plain Python functions (:func:`compile_many`).  Both paths perform the same
floating point operations in the same order, so they agree bit for bit.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import DomainError, ExprSyntaxError, UnboundVariable, UnknownVariable

COORDINATE = "coordinate"
VELOCITY = "velocity"
PARAMETER = "parameter"

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")
BINARY_OPS = ("+", "-", "*", "/", "^")


class Expression:
    __slots__ = ()

    def __str__(self):
        return to_source(self)


@dataclass(frozen=True, repr=False)
class Const(Expression):
    value: float

    def __repr__(self):
        return f"Const({self.value!r})"


@dataclass(frozen=True, repr=False)
class Var(Expression):
    name: str
    kind: str | None = None

    def __repr__(self):
        return f"Var({self.name!r}, {self.kind!r})"


@dataclass(frozen=True, repr=False)
class Unary(Expression):
    op: str
    child: Expression

    def __repr__(self):
        return f"Unary({self.op!r}, {self.child!r})"


@dataclass(frozen=True, repr=False)
class Binary(Expression):
    op: str
    left: Expression
    right: Expression

    def __repr__(self):
        return f"Binary({self.op!r}, {self.left!r}, {self.right!r})"


ZERO = Const(0.0)
ONE = Const(1.0)


@dataclass(frozen=True)
class Namespace:
    """Coordinate and parameter tables an expression is resolved against.

    The velocity of coordinate ``theta`` is named ``dtheta``.
    """

    coords: tuple[str, ...]
    params: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "params", tuple(self.params))
        names = list(self.coords) + self.velocities + list(self.params)
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise UnknownVariable(f"ambiguous names in namespace: {sorted(dup)}")
        for n in names:
            if not _IDENT.fullmatch(n) or n in FUNCTIONS:
                raise UnknownVariable(f"invalid identifier {n!r}")

    @property
    def velocities(self) -> list[str]:
        return ["d" + c for c in self.coords]

    def kind_of(self, name: str) -> str:
        if name in self.coords:
            return COORDINATE
        if name.startswith("d") and name[1:] in self.coords:
            return VELOCITY
        if name in self.params:
            return PARAMETER
        raise UnknownVariable(f"unknown identifier {name!r}")


# ---------------------------------------------------------------------------
# construction helpers with trivial constant folding


def _is(e, value):
    return isinstance(e, Const) and e.value == value


def neg(a: Expression) -> Expression:
    if isinstance(a, Const):
        return Const(-a.value)
    return Unary("neg", a)


def add(a: Expression, b: Expression) -> Expression:
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Binary("+", a, b)


def sub(a: Expression, b: Expression) -> Expression:
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return Binary("-", a, b)


def mul(a: Expression, b: Expression) -> Expression:
    if _is(a, 0.0) or _is(b, 0.0):
        return ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if _is(a, -1.0):
        return neg(b)
    if _is(b, -1.0):
        return neg(a)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Binary("*", a, b)


def div(a: Expression, b: Expression) -> Expression:
    if _is(b, 1.0):
        return a
    if _is(a, 0.0) and not _is(b, 0.0):
        return ZERO
    return Binary("/", a, b)


def power(a: Expression, b: Expression) -> Expression:
    if _is(b, 1.0):
        return a
    if _is(b, 0.0):
        return ONE
    return Binary("^", a, b)


def func(op: str, a: Expression) -> Expression:
    return Unary(op, a)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>\*\*|[-+*/^(),])"
    r")"
)
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        value = m.group(kind)
        start = m.start(kind)
        if kind == "op" and value == "**":
            value = "^"
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text, namespace):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.namespace = namespace

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        if tok[0] == "end":
            message += " at end of input"
        raise ExprSyntaxError(message, tok[2], self.text)

    def expect(self, value):
        tok = self.peek()
        if tok[0] != "op" or tok[1] != value:
            self.error(f"expected {value!r}")
        return self.take()

    def parse(self):
        if self.peek()[0] == "end":
            self.error("empty expression")
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            if tok[1] == ")":
                self.error("unbalanced ')'")
            self.error(f"unexpected token {tok[1]!r}")
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            e = Binary(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            e = Binary(op, e, self.unary())
        return e

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return neg(self.unary())
        if tok[0] == "op" and tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        tok = self.take()
        kind, value, _ = tok
        if kind == "num":
            return Const(float(value))
        if kind == "ident":
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "(":
                if value not in FUNCTIONS:
                    self.error(f"unknown function {value!r}", tok)
                self.take()
                arg = self.expr()
                if self.peek()[1] != ")":
                    self.error("unbalanced '(' in function call")
                self.take()
                return Unary(value, arg)
            if value in FUNCTIONS:
                self.error(f"function {value!r} needs an argument", tok)
            kind_ = self.namespace.kind_of(value) if self.namespace else None
            return Var(value, kind_)
        if kind == "op" and value == "(":
            e = self.expr()
            if self.peek()[1] != ")":
                self.error("unbalanced '('")
            self.take()
            return e
        if kind == "end":
            self.error("dangling operator", tok)
        self.error(f"unexpected token {value!r}", tok)


def parse(text: str, namespace: Namespace | None = None) -> Expression:
    """Parse ``text`` into an expression tree.

    With a ``namespace`` every identifier is classified as coordinate,
    velocity or parameter, and unknown identifiers raise
    :class:`UnknownVariable`.  Without one, variables carry ``kind=None``.
    """
    if not isinstance(text, str) or not text.strip():
        raise ExprSyntaxError("empty expression", 0, text if isinstance(text, str) else "")
    return _Parser(text, namespace).parse()


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _prec(e):
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return 3
    return 5


def _fmt(e, min_prec):
    s = _src(e)
    return f"({s})" if _prec(e) < min_prec else s


def _src(e):
    if isinstance(e, Const):
        if e.value < 0 or (e.value == 0 and math.copysign(1.0, e.value) < 0):
            return f"({e.value!r})"
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            return "-" + _fmt(e.child, 3)
        return f"{e.op}({_src(e.child)})"
    if e.op in "+-":
        return f"{_fmt(e.left, 1)} {e.op} {_fmt(e.right, 2)}"
    if e.op in "*/":
        return f"{_fmt(e.left, 2)}{e.op}{_fmt(e.right, 3)}"
    return f"{_fmt(e.left, 5)}^{_fmt(e.right, 3)}"


def to_source(e: Expression) -> str:
    """Canonical text form; ``parse(to_source(e)) == e`` for parsed trees."""
    return _src(e)


# ---------------------------------------------------------------------------
# evaluation


def _div(a, b):
    try:
        return a / b
    except ZeroDivisionError:
        if a == 0 or a != a:
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)


def _pow(a, b):
    try:
        return math.pow(a, b)
    except OverflowError:
        return math.inf
    except ValueError:
        if a == 0:
            return math.inf
        raise DomainError(f"power of negative base {a!r} with non-integer exponent {b!r}")


def _log(a):
    if a < 0:
        raise DomainError(f"log of negative argument {a!r}")
    if a == 0:
        return -math.inf
    return math.log(a)


def _sqrt(a):
    if a < 0:
        raise DomainError(f"sqrt of negative argument {a!r}")
    return math.sqrt(a)


def _exp(a):
    try:
        return math.exp(a)
    except OverflowError:
        return math.inf


def _tan(a):
    return math.tan(a)


_UNARY_IMPL = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": _tan,
    "exp": _exp,
    "log": _log,
    "sqrt": _sqrt,
}


def evaluate(e: Expression, bindings: Mapping[str, float]) -> float:
    """Evaluate ``e`` with every free variable taken from ``bindings``."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return float(bindings[e.name])
        except KeyError:
            raise UnboundVariable(e.name) from None
    if isinstance(e, Unary):
        x = evaluate(e.child, bindings)
        if e.op == "neg":
            return -x
        return _UNARY_IMPL[e.op](x)
    a = evaluate(e.left, bindings)
    b = evaluate(e.right, bindings)
    op = e.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return _div(a, b)
    return _pow(a, b)


def free_variables(e: Expression) -> set[str]:
    out = set()
    stack = [e]
    while stack:
        x = stack.pop()
        if isinstance(x, Var):
            out.add(x.name)
        elif isinstance(x, Unary):
            stack.append(x.child)
        elif isinstance(x, Binary):
            stack.extend((x.left, x.right))
    return out


def substitute(e: Expression, mapping: Mapping[str, Expression]) -> Expression:
    """Replace variables by expressions (no folding beyond the constructors)."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Unary):
        c = substitute(e.child, mapping)
        return neg(c) if e.op == "neg" else Unary(e.op, c)
    return Binary(e.op, substitute(e.left, mapping), substitute(e.right, mapping))


# ---------------------------------------------------------------------------
# differentiation


def diff(e: Expression, var, namespace: Namespace | None = None) -> Expression:
    """Exact partial derivative of ``e`` with respect to ``var``.

    ``var`` is a variable name (or :class:`Var`).  If a namespace is given,
    ``var`` must be one of its coordinates or velocities.
    """
    name = var.name if isinstance(var, Var) else var
    if namespace is not None:
        try:
            kind = namespace.kind_of(name)
        except UnknownVariable:
            raise UnknownVariable(f"cannot differentiate with respect to {name!r}") from None
        if kind == PARAMETER:
            raise UnknownVariable(f"{name!r} is a parameter, not a coordinate or velocity")
    return _d(e, name)


def _d(e, x):
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == x else ZERO
    if isinstance(e, Unary):
        u = e.child
        du = _d(u, x)
        if _is(du, 0.0):
            return ZERO
        op = e.op
        if op == "neg":
            return neg(du)
        if op == "sin":
            return mul(du, Unary("cos", u))
        if op == "cos":
            return neg(mul(du, Unary("sin", u)))
        if op == "tan":
            return div(du, power(Unary("cos", u), Const(2.0)))
        if op == "exp":
            return mul(du, e)
        if op == "log":
            return div(du, u)
        if op == "sqrt":
            return div(du, mul(Const(2.0), e))
        raise ValueError(op)
    a, b = e.left, e.right
    da, db = _d(a, x), _d(b, x)
    op = e.op
    if op == "+":
        return add(da, db)
    if op == "-":
        return sub(da, db)
    if op == "*":
        return add(mul(da, b), mul(a, db))
    if op == "/":
        if _is(db, 0.0):
            return div(da, b)
        return sub(div(da, b), div(mul(a, db), power(b, Const(2.0))))
    # a^b
    if isinstance(b, Const):
        return mul(mul(b, power(a, Const(b.value - 1.0))), da)
    if _is(db, 0.0):
        return mul(mul(b, power(a, sub(b, ONE))), da)
    # general case: a^b * (db*log(a) + b*da/a)
    return mul(e, add(mul(db, Unary("log", a)), div(mul(b, da), a)))


# ---------------------------------------------------------------------------
# compilation


def _code(e, names):
    if isinstance(e, Const):
        if not math.isfinite(e.value):
            return f"_float({str(e.value)!r})"
        return f"({e.value!r})"
    if isinstance(e, Var):
        try:
            return names[e.name]
        except KeyError:
            raise UnboundVariable(e.name) from None
    if isinstance(e, Unary):
        c = _code(e.child, names)
        if e.op == "neg":
            return f"(-{c})"
        return f"_{e.op}({c})"
    a = _code(e.left, names)
    b = _code(e.right, names)
    if e.op == "/":
        return f"_div({a}, {b})"
    if e.op == "^":
        return f"_pow({a}, {b})"
    return f"({a} {e.op} {b})"


_GLOBALS = {
    "_div": _div,
    "_pow": _pow,
    "_sin": math.sin,
    "_cos": math.cos,
    "_tan": _tan,
    "_exp": _exp,
    "_log": _log,
    "_sqrt": _sqrt,
    "_float": float,
    "__builtins__": {},
}


def compile_many(exprs: Sequence[Expression], arg_names: Iterable[str]):
    """Compile expressions into ``f(args) -> list[float]``.

    ``args`` is a sequence of floats in the order of ``arg_names``.  Pass
    Python floats (e.g. ``ndarray.tolist()``) so the arithmetic is the same
    as in :func:`evaluate`.
    """
    arg_names = list(arg_names)
    names = {n: f"_a{i}" for i, n in enumerate(arg_names)}
    body = ", ".join(_code(e, names) for e in exprs)
    if arg_names:
        unpack = "    " + ", ".join(names[n] for n in arg_names) + ", = _args\n"
    else:
        unpack = ""
    src = f"def _kernel(_args):\n{unpack}    return [{body}]\n"
    scope = dict(_GLOBALS)
    exec(compile(src, "<nonholonomic-kernel>", "exec"), scope)
    fn = scope["_kernel"]
    fn.source = src
    return fn
