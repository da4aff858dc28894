"""Immutable expression trees: construction, evaluation, differentiation, printing.

Trees are built from a small fixed set of node classes.  Every node is
immutable and hashable, so structurally equal trees compare equal and can be
used as dictionary keys.  Numeric literals and exponents are exact rationals;
``pi`` stays symbolic until :func:`evaluate` folds it to a double.
"""

from __future__ import annotations

import math
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .errors import DomainViolation, UnboundVariable

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")
CONSTANTS = ("pi",)


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite literal {value!r}")
        # shortest round-tripping decimal keeps printed formulas readable
        return Fraction(repr(value))
    return Fraction(value)


class Expr:
    """Base class of all expression nodes."""

    __slots__ = ("_hash", "_vars")

    def _key(self) -> tuple:
        raise NotImplementedError

    def children(self) -> tuple[Expr, ...]:
        return ()

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __eq__(self, other):
        if self is other:
            return True
        return type(self) is type(other) and self._key() == other._key()

    def __hash__(self):
        try:
            return self._hash
        except AttributeError:
            h = hash((type(self).__name__, self._key()))
            object.__setattr__(self, "_hash", h)
            return h

    @property
    def variables(self) -> frozenset[str]:
        try:
            return self._vars
        except AttributeError:
            out = frozenset().union(*(c.variables for c in self.children()))
            object.__setattr__(self, "_vars", out)
            return out

    def __str__(self):
        return to_text(self)

    # arithmetic sugar, used when building formulas programmatically
    def __add__(self, other):
        return Add(self, lift(other))

    def __radd__(self, other):
        return Add(lift(other), self)

    def __sub__(self, other):
        return Sub(self, lift(other))

    def __rsub__(self, other):
        return Sub(lift(other), self)

    def __mul__(self, other):
        return Mul(self, lift(other))

    def __rmul__(self, other):
        return Mul(lift(other), self)

    def __truediv__(self, other):
        return Div(self, lift(other))

    def __rtruediv__(self, other):
        return Div(lift(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, exponent):
        return Pow(self, exponent)


class Num(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        object.__setattr__(self, "value", as_fraction(value))

    def _key(self):
        return (self.value,)

    @property
    def variables(self):
        return frozenset()

    def __repr__(self):
        return str(self.value)


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        if not name.isidentifier():
            raise ValueError(f"invalid variable name {name!r}")
        object.__setattr__(self, "name", name)

    def _key(self):
        return (self.name,)

    @property
    def variables(self):
        return frozenset((self.name,))

    def __repr__(self):
        return self.name


class Const(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str = "pi"):
        if name not in CONSTANTS:
            raise ValueError(f"unknown constant {name!r}")
        object.__setattr__(self, "name", name)

    def _key(self):
        return (self.name,)

    @property
    def variables(self):
        return frozenset()

    def __repr__(self):
        return self.name


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        if name not in FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "arg", arg)

    def _key(self):
        return (self.name, self.arg)

    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"{self.name}({self.arg!r})"


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        object.__setattr__(self, "arg", arg)

    def _key(self):
        return (self.arg,)

    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Neg({self.arg!r})"


class Binary(Expr):
    __slots__ = ("left", "right")
    symbol = "?"

    def __init__(self, left: Expr, right: Expr):
        object.__setattr__(self, "left", lift(left))
        object.__setattr__(self, "right", lift(right))

    def _key(self):
        return (self.left, self.right)

    def children(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"{type(self).__name__}({self.left!r}, {self.right!r})"


class Add(Binary):
    __slots__ = ()
    symbol = "+"


class Sub(Binary):
    __slots__ = ()
    symbol = "-"


class Mul(Binary):
    __slots__ = ()
    symbol = "*"


class Div(Binary):
    __slots__ = ()
    symbol = "/"


class Pow(Expr):
    """``base ^ exponent`` with an exact rational exponent (stored in lowest terms)."""

    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent):
        object.__setattr__(self, "base", lift(base))
        object.__setattr__(self, "exponent", as_fraction(exponent))

    def _key(self):
        return (self.base, self.exponent)

    def children(self):
        return (self.base,)

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exponent})"


def lift(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Num(value)


ZERO = Num(0)
ONE = Num(1)
PI = Const("pi")


def sin(e):
    return Func("sin", lift(e))


def cos(e):
    return Func("cos", lift(e))


def exp(e):
    return Func("exp", lift(e))


def log(e):
    return Func("log", lift(e))


def sqrt(e):
    return Func("sqrt", lift(e))


# ---------------------------------------------------------------------------
# evaluation

def _pow(base: float, exponent: Fraction) -> float:
    if exponent.denominator == 1:
        n = exponent.numerator
        if base == 0.0 and n < 0:
            raise DomainViolation("zero raised to a negative power")
        try:
            return base ** n
        except OverflowError:
            raise DomainViolation("overflow in integer power") from None
    if not base > 0.0:
        raise DomainViolation(
            f"non-integer power {exponent} of non-positive base {base!r}"
        )
    try:
        return base ** float(exponent)
    except OverflowError:
        raise DomainViolation("overflow in power") from None


def _log(u: float) -> float:
    if not u > 0.0:
        raise DomainViolation(f"log of non-positive value {u!r}")
    return math.log(u)


def _sqrt(u: float) -> float:
    if u < 0.0:
        raise DomainViolation(f"sqrt of negative value {u!r}")
    return math.sqrt(u)


def _exp(u: float) -> float:
    try:
        return math.exp(u)
    except OverflowError:
        raise DomainViolation(f"exp overflow at {u!r}") from None


def _div(a: float, b: float) -> float:
    if b == 0.0:
        raise DomainViolation("division by zero")
    return a / b


_FUNC_IMPL: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": _exp,
    "log": _log,
    "sqrt": _sqrt,
}


def evaluate(e: Expr, bindings: Mapping[str, float]) -> float:
    """Evaluate ``e`` in double precision with variables taken from ``bindings``."""
    if isinstance(e, Num):
        return float(e.value)
    if isinstance(e, Var):
        try:
            return float(bindings[e.name])
        except KeyError:
            raise UnboundVariable(e.name) from None
    if isinstance(e, Const):
        return math.pi
    if isinstance(e, Func):
        return _FUNC_IMPL[e.name](evaluate(e.arg, bindings))
    if isinstance(e, Neg):
        return -evaluate(e.arg, bindings)
    if isinstance(e, Pow):
        return _pow(evaluate(e.base, bindings), e.exponent)
    a = evaluate(e.left, bindings)
    b = evaluate(e.right, bindings)
    if isinstance(e, Add):
        return a + b
    if isinstance(e, Sub):
        return a - b
    if isinstance(e, Mul):
        return a * b
    if isinstance(e, Div):
        return _div(a, b)
    raise TypeError(f"not an expression node: {e!r}")


def lambdify(e: Expr, names: Iterable[str]) -> Callable[..., float]:
    """Compile ``e`` into a positional-argument closure over ``names``.

    Faster than :func:`evaluate` for repeated calls (integrators, scans) and
    raises the same errors.
    """
    names = tuple(names)
    index = {n: i for i, n in enumerate(names)}
    missing = e.variables - set(names)
    if missing:
        raise UnboundVariable(sorted(missing)[0])

    def build(node):
        if isinstance(node, Num):
            v = float(node.value)
            return lambda a: v
        if isinstance(node, Var):
            i = index[node.name]
            return lambda a: a[i]
        if isinstance(node, Const):
            return lambda a: math.pi
        if isinstance(node, Func):
            f, g = _FUNC_IMPL[node.name], build(node.arg)
            return lambda a: f(g(a))
        if isinstance(node, Neg):
            g = build(node.arg)
            return lambda a: -g(a)
        if isinstance(node, Pow):
            g, r = build(node.base), node.exponent
            if r == 2:
                def square(a):
                    v = g(a)
                    return v * v
                return square
            return lambda a: _pow(g(a), r)
        lf, rf = build(node.left), build(node.right)
        if isinstance(node, Add):
            return lambda a: lf(a) + rf(a)
        if isinstance(node, Sub):
            return lambda a: lf(a) - rf(a)
        if isinstance(node, Mul):
            return lambda a: lf(a) * rf(a)
        return lambda a: _div(lf(a), rf(a))

    body = build(e)

    def compiled(*args):
        return body(args)

    return compiled


# ---------------------------------------------------------------------------
# simplification

def _is_num(e, value=None) -> bool:
    return isinstance(e, Num) and (value is None or e.value == value)


def _fold_func(name: str, v: Fraction):
    if name == "exp" and v == 0:
        return ONE
    if name == "sin" and v == 0:
        return ZERO
    if name == "cos" and v == 0:
        return ONE
    if name == "log" and v == 1:
        return ZERO
    if name == "sqrt" and v >= 0:
        n, d = math.isqrt(v.numerator), math.isqrt(v.denominator)
        if n * n == v.numerator and d * d == v.denominator:
            return Num(Fraction(n, d))
    return None


def _neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    if isinstance(a, Mul) and isinstance(a.left, Num):
        return _mul(Num(-a.left.value), a.right)
    return Neg(a)


def _add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    if _is_num(a, 0):
        return b
    if _is_num(b, 0):
        return a
    if isinstance(b, Neg):
        return _sub(a, b.arg)
    if isinstance(b, Num) and b.value < 0:
        return Sub(a, Num(-b.value))
    if isinstance(b, Mul) and isinstance(b.left, Num) and b.left.value < 0:
        return Sub(a, _mul(Num(-b.left.value), b.right))
    if isinstance(a, Neg):
        return _sub(b, a.arg)
    return Add(a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if _is_num(b, 0):
        return a
    if _is_num(a, 0):
        return _neg(b)
    if a == b:
        return ZERO
    if isinstance(b, Neg):
        return _add(a, b.arg)
    if isinstance(b, Num) and b.value < 0:
        return Add(a, Num(-b.value))
    if isinstance(b, Mul) and isinstance(b.left, Num) and b.left.value < 0:
        return Add(a, _mul(Num(-b.left.value), b.right))
    return Sub(a, b)


def _mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    if _is_num(a, 0) or _is_num(b, 0):
        return ZERO
    if isinstance(b, Num):
        a, b = b, a
    if _is_num(a, 1):
        return b
    if _is_num(a, -1):
        return _neg(b)
    if isinstance(a, Num):
        if isinstance(b, Neg):
            return _mul(Num(-a.value), b.arg)
        if isinstance(b, Mul) and isinstance(b.left, Num):
            return _mul(Num(a.value * b.left.value), b.right)
        return Mul(a, b)
    if isinstance(a, Neg):
        return _neg(_mul(a.arg, b))
    if isinstance(b, Neg):
        return _neg(_mul(a, b.arg))
    if isinstance(a, Mul) and isinstance(a.left, Num):
        return _mul(a.left, _mul(a.right, b))
    if isinstance(b, Mul) and isinstance(b.left, Num):
        return _mul(b.left, _mul(a, b.right))
    return Mul(a, b)


def _div_s(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Num) and b.value != 0:
        return _mul(Num(1 / b.value), a)
    if _is_num(a, 0):
        return ZERO
    if isinstance(b, Neg):
        return _neg(_div_s(a, b.arg))
    if isinstance(a, Neg):
        return _neg(_div_s(a.arg, b))
    if isinstance(a, Mul) and isinstance(a.left, Num):
        return _mul(a.left, _div_s(a.right, b))
    return Div(a, b)


def _pow_s(base: Expr, r: Fraction) -> Expr:
    if r == 0:
        return ONE
    if r == 1:
        return base
    if _is_num(base, 1):
        return ONE
    if isinstance(base, Num) and r.denominator == 1:
        if base.value != 0 or r > 0:
            return Num(base.value ** r.numerator)
    if isinstance(base, Pow) and r.denominator == 1:
        return _pow_s(base.base, base.exponent * r)
    return Pow(base, r)


def simplify(e: Expr) -> Expr:
    """Conservative bottom-up simplification preserving the value at every binding.

    Folds rational constants, removes additive and multiplicative identities,
    collapses nested negation and cancels ``a - a``.  No factoring and no
    trigonometric identities.
    """
    cache: dict[Expr, Expr] = {}

    def go(node: Expr) -> Expr:
        hit = cache.get(node)
        if hit is not None:
            return hit
        if isinstance(node, (Num, Var, Const)):
            out = node
        elif isinstance(node, Func):
            arg = go(node.arg)
            folded = _fold_func(node.name, arg.value) if isinstance(arg, Num) else None
            out = folded if folded is not None else Func(node.name, arg)
        elif isinstance(node, Neg):
            out = _neg(go(node.arg))
        elif isinstance(node, Pow):
            out = _pow_s(go(node.base), node.exponent)
        else:
            a, b = go(node.left), go(node.right)
            if isinstance(node, Add):
                out = _add(a, b)
            elif isinstance(node, Sub):
                out = _sub(a, b)
            elif isinstance(node, Mul):
                out = _mul(a, b)
            else:
                out = _div_s(a, b)
        cache[node] = out
        return out

    return go(e)


# ---------------------------------------------------------------------------
# differentiation and substitution

def _derive(e: Expr, var: str, cache: dict) -> Expr:
    if var not in e.variables:
        return ZERO
    hit = cache.get(e)
    if hit is not None:
        return hit
    if isinstance(e, Var):
        out = ONE
    elif isinstance(e, Neg):
        out = Neg(_derive(e.arg, var, cache))
    elif isinstance(e, (Add, Sub)):
        out = type(e)(_derive(e.left, var, cache), _derive(e.right, var, cache))
    elif isinstance(e, Mul):
        out = Add(
            Mul(_derive(e.left, var, cache), e.right),
            Mul(e.left, _derive(e.right, var, cache)),
        )
    elif isinstance(e, Div):
        out = Div(
            Sub(
                Mul(_derive(e.left, var, cache), e.right),
                Mul(e.left, _derive(e.right, var, cache)),
            ),
            Pow(e.right, 2),
        )
    elif isinstance(e, Pow):
        out = Mul(
            Mul(Num(e.exponent), Pow(e.base, e.exponent - 1)),
            _derive(e.base, var, cache),
        )
    elif isinstance(e, Func):
        u, du = e.arg, _derive(e.arg, var, cache)
        if e.name == "sin":
            out = Mul(cos(u), du)
        elif e.name == "cos":
            out = Neg(Mul(sin(u), du))
        elif e.name == "exp":
            out = Mul(e, du)
        elif e.name == "log":
            out = Div(du, u)
        else:
            out = Div(du, Mul(Num(2), e))
    else:
        raise TypeError(f"not an expression node: {e!r}")
    cache[e] = out
    return out


def differentiate(e: Expr, var: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to variable ``var``, simplified."""
    return simplify(_derive(e, var, {}))


def total_derivative(e: Expr, var: str, chain: Mapping[str, Expr]) -> Expr:
    """Derivative along ``var`` when other variables depend on it.

    ``chain`` maps each dependent variable name to the expression for its own
    derivative with respect to ``var``; the result is
    ``de/dvar + sum(de/du * chain[u])``.
    """
    out = differentiate(e, var)
    for name, rate in chain.items():
        if name in e.variables:
            out = Add(out, Mul(differentiate(e, name), rate))
    return simplify(out)


def substitute(e: Expr, mapping: Mapping[str, Expr | float]) -> Expr:
    """Replace variables by expressions (numbers are lifted to exact literals)."""
    lifted = {k: lift(v) for k, v in mapping.items()}
    cache: dict[Expr, Expr] = {}

    def go(node):
        if not (node.variables & lifted.keys()):
            return node
        hit = cache.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Var):
            out = lifted[node.name]
        elif isinstance(node, Func):
            out = Func(node.name, go(node.arg))
        elif isinstance(node, Neg):
            out = Neg(go(node.arg))
        elif isinstance(node, Pow):
            out = Pow(go(node.base), node.exponent)
        else:
            out = type(node)(go(node.left), go(node.right))
        cache[node] = out
        return out

    return go(e)


def size(e: Expr) -> int:
    return 1 + sum(size(c) for c in e.children())


# ---------------------------------------------------------------------------
# printing

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def format_number(v: Fraction) -> str:
    """Render a rational in grammar syntax: integer, exact decimal, or ``a/b``."""
    if v.denominator == 1:
        return str(v.numerator)
    d = v.denominator
    for prime in (2, 5):
        while d % prime == 0:
            d //= prime
    if d == 1:
        with localcontext() as ctx:
            ctx.prec = 60
            text = format(Decimal(v.numerator) / Decimal(v.denominator), "f")
        if len(text.replace("-", "").replace(".", "").lstrip("0")) <= 20:
            return text
    return f"{v.numerator}/{v.denominator}"


def _num_prec(v: Fraction) -> int:
    if v < 0:
        return _PREC_NEG
    return _PREC_MUL if "/" in format_number(v) else _PREC_ATOM


def _prec(e: Expr) -> int:
    if isinstance(e, (Add, Sub)):
        return _PREC_ADD
    if isinstance(e, (Mul, Div)):
        return _PREC_MUL
    if isinstance(e, Neg):
        return _PREC_NEG
    if isinstance(e, Pow):
        return _PREC_POW
    if isinstance(e, Num):
        return _num_prec(e.value)
    return _PREC_ATOM


def _format_exponent(r: Fraction) -> str:
    if r.denominator == 1 and r >= 0:
        return str(r.numerator)
    return f"({format_number(r)})"


def to_text(e: Expr) -> str:
    """Render ``e`` in the ASCII grammar accepted by :func:`implicit_ode.parser.parse`."""

    def wrap(child, parens):
        text = go(child)
        return f"({text})" if parens else text

    def go(node):
        if isinstance(node, Num):
            return format_number(node.value)
        if isinstance(node, (Var, Const)):
            return node.name
        if isinstance(node, Func):
            return f"{node.name}({go(node.arg)})"
        if isinstance(node, Neg):
            return "-" + wrap(node.arg, _prec(node.arg) < _PREC_POW)
        if isinstance(node, Pow):
            base = wrap(node.base, _prec(node.base) < _PREC_ATOM)
            return f"{base}^{_format_exponent(node.exponent)}"
        p = _prec(node)
        left = wrap(node.left, _prec(node.left) < p)
        rp = _prec(node.right)
        right = wrap(node.right, rp <= p or rp == _PREC_NEG)
        return f"{left} {node.symbol} {right}"

    return go(e)
