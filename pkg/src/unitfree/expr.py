"""Closed-form scalar fields on coordinate charts.

Expressions are immutable trees built from constants, coordinate variables,
the four arithmetic operations, nonnegative integer powers and the elementary
functions ``sin``, ``cos``, ``exp``, ``ln`` and ``sqrt``.  They can be parsed
from text, printed back, differentiated exactly, simplified locally and
evaluated in double precision.

Arithmetic operators on :class:`Expr` go through the *smart constructors*
(:func:`add`, :func:`mul`, ...) which fold constants and drop neutral
elements on the fly; the node classes themselves build raw trees, which is
what :func:`parse` returns.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

import mpmath
import numpy as np

from .errors import ChartMismatch, EvalError, ExprSyntaxError, UnknownFunction

__all__ = [
    "Chart", "Point", "Expr", "Constant", "Var", "Add", "Sub", "Mul", "Div",
    "Neg", "IntPow", "Sin", "Cos", "Exp", "Ln", "Sqrt", "FUNCTIONS",
    "parse", "as_expr", "to_string", "diff", "simplify", "evaluate",
    "compile_expr", "compile_many", "free_vars", "substitute",
    "add", "sub", "mul", "div", "neg", "ipow", "sin", "cos", "exp", "ln",
    "sqrt", "const", "var", "ZERO", "ONE",
]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


# ---------------------------------------------------------------------------
# nodes


class Expr:
    """Base class of expression nodes.

    Nodes are hashable and compared structurally.  The hash is computed once
    at construction so that large trees can be used as dictionary keys.
    """

    __slots__ = ("args", "_hash")
    precedence = 6

    def __init__(self, *args):
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "_hash", hash((type(self).__name__, args)))

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return self.args == other.args

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return f"{type(self).__name__}({', '.join(map(repr, self.args))})"

    def __str__(self):
        return to_string(self)

    def __reduce__(self):
        return (type(self), self.args)

    # arithmetic sugar, locally simplified
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 0:
            raise TypeError("only nonnegative integer exponents are supported")
        return ipow(self, int(n))


class Constant(Expr):
    __slots__ = ()

    def __init__(self, value):
        super().__init__(float(value))

    @property
    def value(self) -> float:
        return self.args[0]


class Var(Expr):
    __slots__ = ()

    def __init__(self, name):
        if not isinstance(name, str) or not _IDENT.match(name):
            raise ValueError(f"invalid variable name {name!r}")
        super().__init__(name)

    @property
    def name(self) -> str:
        return self.args[0]


class _Binary(Expr):
    __slots__ = ()
    symbol = "?"

    def __init__(self, left, right):
        super().__init__(left, right)

    @property
    def left(self) -> Expr:
        return self.args[0]

    @property
    def right(self) -> Expr:
        return self.args[1]


class Add(_Binary):
    __slots__ = ()
    symbol, precedence = "+", 1


class Sub(_Binary):
    __slots__ = ()
    symbol, precedence = "-", 1


class Mul(_Binary):
    __slots__ = ()
    symbol, precedence = "*", 2


class Div(_Binary):
    __slots__ = ()
    symbol, precedence = "/", 2


class Neg(Expr):
    __slots__ = ()
    precedence = 3

    def __init__(self, arg):
        super().__init__(arg)

    @property
    def arg(self) -> Expr:
        return self.args[0]


class IntPow(Expr):
    __slots__ = ()
    precedence = 4

    def __init__(self, base, exponent):
        if isinstance(exponent, bool) or not isinstance(exponent, (int, np.integer)) or exponent < 0:
            raise ValueError("IntPow exponent must be a nonnegative integer")
        super().__init__(base, int(exponent))

    @property
    def base(self) -> Expr:
        return self.args[0]

    @property
    def exponent(self) -> int:
        return self.args[1]


class _Func(Expr):
    __slots__ = ()
    fname = "?"

    def __init__(self, arg):
        super().__init__(arg)

    @property
    def arg(self) -> Expr:
        return self.args[0]


class Sin(_Func):
    __slots__ = ()
    fname = "sin"


class Cos(_Func):
    __slots__ = ()
    fname = "cos"


class Exp(_Func):
    __slots__ = ()
    fname = "exp"


class Ln(_Func):
    __slots__ = ()
    fname = "ln"


class Sqrt(_Func):
    __slots__ = ()
    fname = "sqrt"


FUNCTIONS = {cls.fname: cls for cls in (Sin, Cos, Exp, Ln, Sqrt)}

ZERO = Constant(0.0)
ONE = Constant(1.0)


# ---------------------------------------------------------------------------
# charts and points


@dataclass(frozen=True)
class Chart:
    """A named coordinate system; the stand-in for a manifold."""

    name: str
    coords: tuple

    def __post_init__(self):
        coords = tuple(self.coords)
        object.__setattr__(self, "coords", coords)
        if not coords:
            raise ValueError("a chart needs at least one coordinate")
        for c in coords:
            if not isinstance(c, str) or not _IDENT.match(c):
                raise ValueError(f"invalid coordinate name {c!r}")
            if c in FUNCTIONS:
                raise ValueError(f"coordinate name {c!r} clashes with a function name")
        if len(set(coords)) != len(coords):
            raise ValueError(f"duplicate coordinate names in {coords}")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def index(self, name: str) -> int:
        try:
            return self.coords.index(name)
        except ValueError:
            raise ChartMismatch(f"{name!r} is not a coordinate of chart {self.name!r}") from None

    def var(self, name: str) -> Var:
        self.index(name)
        return Var(name)

    def vars(self) -> list:
        return [Var(c) for c in self.coords]

    def check(self, *exprs: Expr) -> None:
        """Raise :class:`ChartMismatch` if an expression uses a foreign variable."""
        for e in exprs:
            extra = free_vars(e) - set(self.coords)
            if extra:
                raise ChartMismatch(
                    f"expression {to_string(e)!r} uses {sorted(extra)} not in chart "
                    f"{self.name!r} {self.coords}")

    def point(self, values) -> "Point":
        return Point(self, values)

    def sample(self, count=100, seed=0, box=None) -> list:
        """Uniform random points in a box, ``[-2, 2]`` per coordinate by default.

        ``box`` maps coordinate names to ``(low, high)``; missing names use
        the default interval.
        """
        rng = np.random.default_rng(seed)
        box = dict(box or {})
        lo = np.array([box.get(c, (-2.0, 2.0))[0] for c in self.coords], dtype=float)
        hi = np.array([box.get(c, (-2.0, 2.0))[1] for c in self.coords], dtype=float)
        arr = rng.uniform(lo, hi, size=(count, self.dim))
        return [Point(self, row) for row in arr]


class Point(Mapping):
    """Coordinate values for every coordinate of a chart."""

    __slots__ = ("chart", "values")

    def __init__(self, chart: Chart, values):
        if isinstance(values, Mapping):
            if set(values) != set(chart.coords):
                raise ChartMismatch(
                    f"point keys {sorted(values)} do not match chart coords {chart.coords}")
            vals = tuple(float(values[c]) for c in chart.coords)
        else:
            vals = tuple(float(v) for v in values)
            if len(vals) != chart.dim:
                raise ChartMismatch(f"expected {chart.dim} values, got {len(vals)}")
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "values", vals)

    def __setattr__(self, name, value):
        raise AttributeError("Point is immutable")

    def __getitem__(self, name):
        return self.values[self.chart.index(name)]

    def __iter__(self):
        return iter(self.chart.coords)

    def __len__(self):
        return self.chart.dim

    def __eq__(self, other):
        return isinstance(other, Point) and self.chart == other.chart and self.values == other.values

    def __hash__(self):
        return hash((self.chart, self.values))

    def __repr__(self):
        inner = ", ".join(f"{c}={v:g}" for c, v in zip(self.chart.coords, self.values))
        return f"Point({inner})"

    def array(self) -> np.ndarray:
        return np.array(self.values)


# ---------------------------------------------------------------------------
# smart constructors


def const(value) -> Constant:
    return Constant(value)


def var(name) -> Var:
    return Var(name)


def as_expr(value) -> Expr:
    """Coerce strings (parsed), numbers and expressions to :class:`Expr`."""
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        return parse(value)
    if isinstance(value, (int, float, np.integer, np.floating)) and not isinstance(value, bool):
        return Constant(value)
    raise TypeError(f"cannot convert {value!r} to an expression")


def _is_const(e, value=None):
    return isinstance(e, Constant) and (value is None or e.value == value)


def _fold(op, *values):
    try:
        out = op(*values)
    except (ArithmeticError, ValueError):
        return None
    if isinstance(out, complex) or not math.isfinite(out):
        return None
    return Constant(out)


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return _fold(lambda x, y: x + y, a.value, b.value) or Add(a, b)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return _fold(lambda x, y: x - y, a.value, b.value) or Sub(a, b)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return _fold(lambda x, y: x * y, a.value, b.value) or Mul(a, b)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a, -1.0):
        return neg(b)
    if _is_const(b, -1.0):
        return neg(a)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return _fold(lambda x, y: x / y, a.value, b.value) or Div(a, b)
    if _is_const(b, 1.0):
        return a
    if _is_const(a, 0.0):
        return ZERO
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Constant):
        return Constant(-a.value) if a.value != 0.0 else ZERO
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def ipow(a: Expr, n: int) -> Expr:
    if n == 0:
        return ONE
    if n == 1:
        return a
    if isinstance(a, Constant):
        return _fold(lambda x: x ** n, a.value) or IntPow(a, n)
    return IntPow(a, n)


def _func(cls, fn):
    def build(a: Expr) -> Expr:
        if isinstance(a, Constant):
            return _fold(fn, a.value) or cls(a)
        return cls(a)
    build.__name__ = cls.fname
    return build


sin = _func(Sin, math.sin)
cos = _func(Cos, math.cos)
exp = _func(Exp, math.exp)
ln = _func(Ln, math.log)
sqrt = _func(Sqrt, math.sqrt)

_SMART = {Add: add, Sub: sub, Mul: mul, Div: div, Sin: sin, Cos: cos, Exp: exp, Ln: ln, Sqrt: sqrt}


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))")


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = []
        pos = 0
        while True:
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                rest = text[pos:]
                if rest.strip() == "":
                    break
                bad = pos + len(rest) - len(rest.lstrip())
                raise ExprSyntaxError(f"unexpected character {text[bad]!r}", self._byte(bad), text)
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.i = 0

    def _byte(self, char_offset):
        return len(self.text[:char_offset].encode("utf-8"))

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        raise ExprSyntaxError(message, self._byte(tok[2]), self.text)

    def expect(self, value):
        tok = self.peek()
        if tok[0] != "op" or tok[1] != value:
            shown = "end of input" if tok[0] == "end" else repr(tok[1])
            self.fail(f"expected {value!r}, found {shown}")
        return self.take()

    def parse(self):
        e = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected token {self.peek()[1]!r}")
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            rhs = self.unary()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        e = self.primary()
        while self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            tok = self.peek()
            if tok[0] != "num" or not tok[1].isdigit():
                self.fail("exponent must be a nonnegative integer literal")
            self.take()
            e = IntPow(e, int(tok[1]))
        return e

    def primary(self):
        tok = self.peek()
        kind, value, _ = tok
        if kind == "num":
            self.take()
            return Constant(float(value))
        if kind == "name":
            self.take()
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "(":
                if value not in FUNCTIONS:
                    raise UnknownFunction(value, self._byte(tok[2]))
                self.take()
                arg = self.expr()
                self.expect(")")
                return FUNCTIONS[value](arg)
            if value in FUNCTIONS:
                self.fail(f"function {value!r} needs an argument", tok)
            return Var(value)
        if kind == "op" and value == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        self.fail("unexpected end of input" if kind == "end" else f"unexpected token {value!r}")


def parse(text: str) -> Expr:
    """Parse expression text into a raw (unsimplified) tree.

    Grammar, loosest binding first: ``+ -`` then ``* /`` (both
    left-associative), then unary ``-``, then ``^`` with a nonnegative
    integer literal exponent, then numbers, identifiers, calls of
    ``sin cos exp ln sqrt`` and parenthesised groups.

    >>> parse("p^2/2 + q^2/2")
    Add(Div(IntPow(Var('p'), 2), Constant(2.0)), Div(IntPow(Var('q'), 2), Constant(2.0)))
    """
    if not isinstance(text, str):
        raise TypeError("parse expects a string")
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# printing


def _format_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        s = str(int(v))
    else:
        s = repr(v)
    return f"({s})" if v < 0 or s.startswith("-") else s


def to_string(e: Expr) -> str:
    """Print in the parse grammar with the fewest parentheses that round-trip.

    Nonnegative finite constants print as literals; negative ones print as
    ``(-c)``, which re-parses as ``Neg(Constant(c))``.
    """
    if isinstance(e, Constant):
        return _format_number(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, _Binary):
        left = to_string(e.left)
        right = to_string(e.right)
        if e.left.precedence < e.precedence:
            left = f"({left})"
        if e.right.precedence <= e.precedence:
            right = f"({right})"
        return f"{left} {e.symbol} {right}" if e.precedence == 1 else f"{left}{e.symbol}{right}"
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        if e.arg.precedence < Neg.precedence:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, IntPow):
        base = to_string(e.base)
        if e.base.precedence < IntPow.precedence:
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, _Func):
        return f"{e.fname}({to_string(e.arg)})"
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# structure


def free_vars(e: Expr) -> frozenset:
    return _free_vars(e)


@lru_cache(maxsize=65536)
def _free_vars(e):
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Constant):
        return frozenset()
    out = frozenset()
    for a in e.args:
        if isinstance(a, Expr):
            out |= _free_vars(a)
    return out


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Simultaneously replace variables by expressions (locally simplified)."""
    mapping = {k: as_expr(v) for k, v in mapping.items()}
    memo = {}

    def go(node):
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Var):
            out = mapping.get(node.name, node)
        elif isinstance(node, Constant):
            out = node
        else:
            out = _rebuild(node, [go(a) for a in node.args if isinstance(a, Expr)])
        memo[node] = out
        return out

    return go(e)


def _rebuild(node, kids):
    if isinstance(node, Neg):
        return neg(kids[0])
    if isinstance(node, IntPow):
        return ipow(kids[0], node.exponent)
    return _SMART[type(node)](*kids)


def simplify(e: Expr) -> Expr:
    """Constant folding plus the local rewrites ``x+0``, ``x*1``, ``x*0``,
    ``x^0``, ``x^1``, ``-(-x)``.  Idempotent; no canonical ordering."""
    return _simplify(e)


@lru_cache(maxsize=65536)
def _simplify(e):
    if isinstance(e, (Constant, Var)):
        return e
    return _rebuild(e, [_simplify(a) for a in e.args if isinstance(a, Expr)])


# ---------------------------------------------------------------------------
# differentiation


def diff(e: Expr, name: str) -> Expr:
    """Exact partial derivative with respect to the variable ``name``."""
    return _diff(e, name)


@lru_cache(maxsize=131072)
def _diff(e, v):
    if isinstance(e, Constant):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if v not in _free_vars(e):
        return ZERO
    if isinstance(e, Add):
        return add(_diff(e.left, v), _diff(e.right, v))
    if isinstance(e, Sub):
        return sub(_diff(e.left, v), _diff(e.right, v))
    if isinstance(e, Mul):
        a, b = e.args
        return add(mul(_diff(a, v), b), mul(a, _diff(b, v)))
    if isinstance(e, Div):
        a, b = e.args
        da, db = _diff(a, v), _diff(b, v)
        if _is_const(db, 0.0):
            return div(da, b)
        return div(sub(mul(da, b), mul(a, db)), ipow(b, 2))
    if isinstance(e, Neg):
        return neg(_diff(e.arg, v))
    if isinstance(e, IntPow):
        b, n = e.args
        return mul(mul(Constant(n), ipow(b, n - 1)), _diff(b, v))
    a = e.arg
    da = _diff(a, v)
    if isinstance(e, Sin):
        outer = cos(a)
    elif isinstance(e, Cos):
        outer = neg(sin(a))
    elif isinstance(e, Exp):
        outer = e
    elif isinstance(e, Ln):
        return div(da, a)
    elif isinstance(e, Sqrt):
        return div(da, mul(Constant(2.0), e))
    else:  # pragma: no cover
        raise TypeError(f"cannot differentiate {e!r}")
    return mul(outer, da)


# ---------------------------------------------------------------------------
# evaluation

_PYOP = {Add: "+", Sub: "-", Mul: "*", Div: "/"}
_PYFUNC = {Sin: "_sin", Cos: "_cos", Exp: "_exp", Ln: "_log", Sqrt: "_sqrt"}
_ENV = {"_sin": math.sin, "_cos": math.cos, "_exp": math.exp, "_log": math.log, "_sqrt": math.sqrt}


def _emit(exprs, coords):
    """Straight-line Python source for a tuple of expressions.

    One assignment per distinct subtree, so identical subexpressions are
    computed once and nesting depth never reaches the parser limits.
    """
    index = {c: i for i, c in enumerate(coords)}
    lines = []
    names = {}

    def go(node):
        hit = names.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Constant):
            return repr(node.value)
        if isinstance(node, Var):
            if node.name not in index:
                raise ChartMismatch(f"variable {node.name!r} not in chart coordinates {tuple(coords)}")
            return f"x{index[node.name]}"
        if isinstance(node, _Binary):
            code = f"{go(node.left)} {_PYOP[type(node)]} {go(node.right)}"
        elif isinstance(node, Neg):
            code = f"-{go(node.arg)}"
        elif isinstance(node, IntPow):
            code = f"{go(node.base)} ** {node.exponent}"
        else:
            code = f"{_PYFUNC[type(node)]}({go(node.arg)})"
        name = f"t{len(lines)}"
        lines.append(f"    {name} = {code}")
        names[node] = name
        return name

    outs = [go(e) for e in exprs]
    head = "def _f(v):\n"
    if coords:
        head += "    " + "".join(f"x{i}, " for i in range(len(coords))) + "= v\n"
    body = "\n".join(lines)
    src = head + (body + "\n" if body else "") + f"    return ({', '.join(outs)},)\n"
    return src


def _wrap(raw, dps=None):
    def call(values):
        try:
            return raw(values)
        except ZeroDivisionError as exc:
            raise EvalError(f"division by zero: {exc}") from None
        except (ValueError, OverflowError) as exc:
            raise EvalError(f"domain error: {exc}") from None

    if dps is None:
        return call

    def fn(values):
        with mpmath.workdps(dps):
            return call(tuple(mpmath.mpf(v) for v in values))
    return fn


def _mp_log(x):
    if x <= 0:
        raise ValueError("math domain error")
    return mpmath.log(x)


def _mp_sqrt(x):
    if x < 0:
        raise ValueError("math domain error")
    return mpmath.sqrt(x)


_MP_ENV = {"_sin": mpmath.sin, "_cos": mpmath.cos, "_exp": mpmath.exp, "_log": _mp_log, "_sqrt": _mp_sqrt}


@lru_cache(maxsize=8192)
def _compile_tuple(exprs, coords, extended=False):
    src = _emit(exprs, coords)
    env = dict(_MP_ENV if extended else _ENV)
    exec(compile(src, "<unitfree-expr>", "exec"), env)
    return env["_f"]


def compile_many(exprs: Sequence[Expr], coords: Sequence[str], dps: int | None = None
                 ) -> Callable[[Sequence[float]], tuple]:
    """Compile several expressions into one function of a coordinate tuple.

    The returned callable takes values ordered like ``coords`` and returns a
    tuple of floats, raising :class:`EvalError` on arithmetic domain errors.
    With ``dps`` set, arithmetic runs in ``mpmath`` with that many decimal
    digits and the tuple holds ``mpf`` values; inputs are converted exactly.
    """
    raw = _compile_tuple(tuple(as_expr(e) for e in exprs), tuple(coords), dps is not None)
    return _wrap(raw, dps)


def compile_expr(e: Expr, coords: Sequence[str]) -> Callable[[Sequence[float]], float]:
    fn = compile_many((e,), coords)
    return lambda values: fn(values)[0]


def evaluate(e: Expr, x) -> float:
    """Evaluate at a :class:`Point` (or a plain name -> value mapping)."""
    e = as_expr(e)
    if isinstance(x, Point):
        coords, values = x.chart.coords, x.values
    else:
        coords = tuple(x)
        values = tuple(float(x[c]) for c in coords)
    return compile_expr(e, coords)(values)


def evaluate_many(exprs: Iterable[Expr], points, coords: Sequence[str]) -> np.ndarray:
    """Evaluate expressions at each row of ``points``; shape ``(n_points, n_exprs)``."""
    exprs = tuple(exprs)
    fn = compile_many(exprs, coords)
    rows = [fn(tuple(p)) for p in points]
    return np.array(rows, dtype=float).reshape(len(rows), len(exprs))
