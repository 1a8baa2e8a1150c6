"""Canonical expression trees over exact rationals.

Nodes are immutable; a fixed total order over nodes makes canonical forms
unique, so structural equality on canonicalized trees decides equality up
to associativity and commutativity.  Distributivity is deliberately not
applied here (that is the rational-simplifier's job).

Canonical form:
  * Sum/Product children are flattened, sorted under the total order, and
    like terms / like bases are folded with exact rational coefficients.
  * Power exponents are nonzero integers different from 1; constant bases
    are folded; integer powers distribute over products.
  * Quotient never survives canonicalization: a/b becomes a * b**-1.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, Mapping

import mpmath

from .errors import DomainError, UnboundSymbol
from .rational import ONE, ZERO, Rational

# --------------------------------------------------------------------------
# Node types
# --------------------------------------------------------------------------


class Expr:
    """Base class; concrete nodes below."""

    __slots__ = ()

    def __mul__(self, other: "Expr") -> "Expr":
        return canonicalize(Product((self, other)))

    def __add__(self, other: "Expr") -> "Expr":
        return canonicalize(Sum((self, other)))

    def __sub__(self, other: "Expr") -> "Expr":
        return canonicalize(Sum((self, Product((Const(Rational(-1)), other)))))

    def __neg__(self) -> "Expr":
        return canonicalize(Product((Const(Rational(-1)), self)))


@dataclass(frozen=True)
class Const(Expr):
    value: Rational

    def __repr__(self):
        return f"Const({self.value})"


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def __repr__(self):
        return f"Var({self.name})"


@dataclass(frozen=True)
class FuncApp(Expr):
    """Application of an uninterpreted function symbol (the oracle f)."""

    name: str
    args: tuple

    def __repr__(self):
        return f"{self.name}({', '.join(map(repr, self.args))})"


@dataclass(frozen=True)
class Builtin(Expr):
    """Application of a known elementary function."""

    name: str
    args: tuple

    def __repr__(self):
        return f"{self.name}({', '.join(map(repr, self.args))})"


@dataclass(frozen=True)
class Sum(Expr):
    terms: tuple

    def __repr__(self):
        return f"Sum{self.terms}"


@dataclass(frozen=True)
class Product(Expr):
    factors: tuple

    def __repr__(self):
        return f"Product{self.factors}"


@dataclass(frozen=True)
class Power(Expr):
    base: Expr
    exp: int

    def __repr__(self):
        return f"Power({self.base!r}, {self.exp})"


@dataclass(frozen=True)
class Quotient(Expr):
    """Constructor-level division; canonicalize rewrites it as num * den**-1."""

    num: Expr
    den: Expr

    def __repr__(self):
        return f"Quotient({self.num!r}, {self.den!r})"


BUILTIN_NAMES = frozenset(
    {
        "sin", "cos", "tan", "cot", "sec", "csc",
        "sinh", "cosh", "tanh",
        "exp", "log", "sqrt", "cbrt",
        "abs", "floor", "ceil", "sign",
        "erf", "gamma",
        "arctan", "arcsin", "arccos",
        "arcsinh", "arccosh", "arctanh",
        "pow", "mod",
    }
)

_BUILTIN_ARITY = {"pow": 2, "mod": 2}


def const(v) -> Const:
    if isinstance(v, Rational):
        return Const(v)
    return Const(Rational(v))


def var(name: str) -> Var:
    return Var(name)


def func(name: str, *args: Expr) -> Expr:
    if name in BUILTIN_NAMES:
        return Builtin(name, tuple(args))
    return FuncApp(name, tuple(args))


# --------------------------------------------------------------------------
# Total order
# --------------------------------------------------------------------------

def expr_key(e: Expr):
    """Sort key realizing the fixed total order (kind rank, names, children).

    Keys always start with the integer rank, so nested tuples never meet
    mismatched types during comparison.
    """
    if isinstance(e, Const):
        return (0, e.value.num, e.value.den)
    if isinstance(e, Var):
        return (1, e.name)
    if isinstance(e, Builtin):
        return (2, e.name, len(e.args)) + tuple(expr_key(a) for a in e.args)
    if isinstance(e, FuncApp):
        return (3, e.name, len(e.args)) + tuple(expr_key(a) for a in e.args)
    if isinstance(e, Power):
        return (4, expr_key(e.base), e.exp)
    if isinstance(e, Product):
        return (5, len(e.factors)) + tuple(expr_key(f) for f in e.factors)
    if isinstance(e, Sum):
        return (6, len(e.terms)) + tuple(expr_key(t) for t in e.terms)
    raise TypeError(f"not an Expr: {e!r}")


# --------------------------------------------------------------------------
# Canonicalization
# --------------------------------------------------------------------------


def canonicalize(e: Expr) -> Expr:
    """Idempotent normal form; AC-equal inputs map to identical outputs."""
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        return e
    if isinstance(e, Builtin):
        return Builtin(e.name, tuple(canonicalize(a) for a in e.args))
    if isinstance(e, FuncApp):
        return FuncApp(e.name, tuple(canonicalize(a) for a in e.args))
    if isinstance(e, Quotient):
        return _mul_canonical(
            [canonicalize(e.num), _pow_canonical(canonicalize(e.den), -1)]
        )
    if isinstance(e, Power):
        return _pow_canonical(canonicalize(e.base), e.exp)
    if isinstance(e, Product):
        return _mul_canonical([canonicalize(f) for f in e.factors])
    if isinstance(e, Sum):
        return _add_canonical([canonicalize(t) for t in e.terms])
    raise TypeError(f"not an Expr: {e!r}")


def _pow_canonical(base: Expr, k: int) -> Expr:
    if not isinstance(k, int):
        raise TypeError("Power exponent must be an integer")
    if k == 0:
        return Const(ONE)
    if k == 1:
        return base
    if isinstance(base, Const):
        if base.value.is_zero and k < 0:
            raise DomainError("zero raised to a negative power in constant folding")
        return Const(base.value**k)
    if isinstance(base, Power):
        return _pow_canonical(base.base, base.exp * k)
    if isinstance(base, Product):
        return _mul_canonical([_pow_canonical(f, k) for f in base.factors])
    return Power(base, k)


def _mul_canonical(factors: list) -> Expr:
    coef = ONE
    powers: dict = {}
    order: list = []

    def absorb(f: Expr):
        nonlocal coef
        if isinstance(f, Const):
            coef = coef * f.value
        elif isinstance(f, Product):
            for g in f.factors:
                absorb(g)
        elif isinstance(f, Power) and isinstance(f.base, Const):
            coef = coef * (f.base.value**f.exp)
        elif isinstance(f, Power):
            _bump(f.base, f.exp)
        else:
            _bump(f, 1)

    def _bump(base: Expr, k: int):
        if base not in powers:
            powers[base] = 0
            order.append(base)
        powers[base] += k

    for f in factors:
        absorb(f)

    if coef.is_zero:
        return Const(ZERO)

    parts = []
    for base in sorted(order, key=expr_key):
        k = powers[base]
        if k == 0:
            continue
        parts.append(base if k == 1 else Power(base, k))

    if not parts:
        return Const(coef)
    if coef == ONE:
        return parts[0] if len(parts) == 1 else Product(tuple(parts))
    return Product((Const(coef),) + tuple(parts))


def split_coefficient(e: Expr) -> tuple:
    """Split a canonical term into (rational coefficient, core or None)."""
    if isinstance(e, Const):
        return e.value, None
    if isinstance(e, Product) and isinstance(e.factors[0], Const):
        rest = e.factors[1:]
        core = rest[0] if len(rest) == 1 else Product(rest)
        return e.factors[0].value, core
    return ONE, e


def _with_coefficient(coef: Rational, core: Expr) -> Expr:
    if coef == ONE:
        return core
    if isinstance(core, Product):
        return Product((Const(coef),) + core.factors)
    return Product((Const(coef), core))


def _add_canonical(terms: list) -> Expr:
    const_part = ZERO
    coeffs: dict = {}
    order: list = []

    def absorb(t: Expr):
        nonlocal const_part
        if isinstance(t, Sum):
            for u in t.terms:
                absorb(u)
            return
        coef, core = split_coefficient(t)
        if core is None:
            const_part = const_part + coef
            return
        if core not in coeffs:
            coeffs[core] = ZERO
            order.append(core)
        coeffs[core] = coeffs[core] + coef

    for t in terms:
        absorb(t)

    parts = []
    if not const_part.is_zero:
        parts.append(Const(const_part))
    for core in sorted(order, key=expr_key):
        coef = coeffs[core]
        if coef.is_zero:
            continue
        parts.append(_with_coefficient(coef, core))

    if not parts:
        return Const(ZERO)
    if len(parts) == 1:
        return parts[0]
    parts.sort(key=expr_key)
    return Sum(tuple(parts))


# --------------------------------------------------------------------------
# Structure queries and substitution
# --------------------------------------------------------------------------


def children(e: Expr) -> tuple:
    if isinstance(e, (Const, Var)):
        return ()
    if isinstance(e, (Builtin, FuncApp)):
        return e.args
    if isinstance(e, Sum):
        return e.terms
    if isinstance(e, Product):
        return e.factors
    if isinstance(e, Power):
        return (e.base,)
    if isinstance(e, Quotient):
        return (e.num, e.den)
    raise TypeError(f"not an Expr: {e!r}")


def free_vars(e: Expr) -> set:
    if isinstance(e, Var):
        return {e.name}
    out: set = set()
    for c in children(e):
        out |= free_vars(c)
    return out


def func_symbols(e: Expr) -> set:
    out: set = set()
    if isinstance(e, FuncApp):
        out.add(e.name)
    for c in children(e):
        out |= func_symbols(c)
    return out


def subst_vars(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions; result is canonicalized."""

    def walk(n: Expr) -> Expr:
        if isinstance(n, Var):
            return mapping.get(n.name, n)
        if isinstance(n, Const):
            return n
        if isinstance(n, Builtin):
            return Builtin(n.name, tuple(walk(a) for a in n.args))
        if isinstance(n, FuncApp):
            return FuncApp(n.name, tuple(walk(a) for a in n.args))
        if isinstance(n, Sum):
            return Sum(tuple(walk(t) for t in n.terms))
        if isinstance(n, Product):
            return Product(tuple(walk(f) for f in n.factors))
        if isinstance(n, Power):
            return Power(walk(n.base), n.exp)
        if isinstance(n, Quotient):
            return Quotient(walk(n.num), walk(n.den))
        raise TypeError(f"not an Expr: {n!r}")

    return canonicalize(walk(e))


def subst_func(e: Expr, fname: str, params: tuple, body: Expr) -> Expr:
    """Replace every application fname(a1..an) by body[params := args]."""

    def walk(n: Expr) -> Expr:
        if isinstance(n, FuncApp) and n.name == fname:
            if len(n.args) != len(params):
                raise DomainError(
                    f"{fname} applied to {len(n.args)} args, closed form has "
                    f"{len(params)} parameters"
                )
            args = tuple(walk(a) for a in n.args)
            return subst_vars(body, dict(zip(params, args)))
        if isinstance(n, (Const, Var)):
            return n
        if isinstance(n, Builtin):
            return Builtin(n.name, tuple(walk(a) for a in n.args))
        if isinstance(n, FuncApp):
            return FuncApp(n.name, tuple(walk(a) for a in n.args))
        if isinstance(n, Sum):
            return Sum(tuple(walk(t) for t in n.terms))
        if isinstance(n, Product):
            return Product(tuple(walk(f) for f in n.factors))
        if isinstance(n, Power):
            return Power(walk(n.base), n.exp)
        if isinstance(n, Quotient):
            return Quotient(walk(n.num), walk(n.den))
        raise TypeError(f"not an Expr: {n!r}")

    return canonicalize(walk(e))


# --------------------------------------------------------------------------
# Evaluation environment
# --------------------------------------------------------------------------


@dataclass
class Env:
    """Bindings for free variables and uninterpreted function symbols."""

    bindings: Mapping[str, float]
    funcs: Mapping[str, Callable] = None

    def __post_init__(self):
        if self.funcs is None:
            self.funcs = {}


# --------------------------------------------------------------------------
# Double-precision evaluation
# --------------------------------------------------------------------------


def _fin(v: float) -> float:
    if not math.isfinite(v):
        raise DomainError("non-finite value in evaluation")
    return v


def _d_cot(x):
    s = math.sin(x)
    if s == 0.0:
        raise DomainError("cot pole")
    return math.cos(x) / s


def _d_sec(x):
    c = math.cos(x)
    if c == 0.0:
        raise DomainError("sec pole")
    return 1.0 / c


def _d_csc(x):
    s = math.sin(x)
    if s == 0.0:
        raise DomainError("csc pole")
    return 1.0 / s


def _d_log(x):
    if x <= 0.0:
        raise DomainError("log of nonpositive value")
    return math.log(x)


def _d_sqrt(x):
    if x < 0.0:
        raise DomainError("square root of negative value")
    return math.sqrt(x)


def _d_cbrt(x):
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


def _d_pow(x, y):
    if x == 0.0 and y <= 0.0:
        raise DomainError("zero base with nonpositive exponent")
    if x < 0.0 and y != math.floor(y):
        raise DomainError("negative base with non-integer exponent")
    return x**y


def _d_mod(x, y):
    if y == 0.0:
        raise DomainError("mod by zero")
    return math.fmod(x, y)


_DOUBLE_BUILTINS = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "cot": _d_cot,
    "sec": _d_sec,
    "csc": _d_csc,
    "sinh": math.sinh,
    "cosh": math.cosh,
    "tanh": math.tanh,
    "exp": math.exp,
    "log": _d_log,
    "sqrt": _d_sqrt,
    "cbrt": _d_cbrt,
    "abs": abs,
    "floor": math.floor,
    "ceil": math.ceil,
    "sign": lambda x: float((x > 0) - (x < 0)),
    "erf": math.erf,
    "gamma": math.gamma,
    "arctan": math.atan,
    "arcsin": math.asin,
    "arccos": math.acos,
    "arcsinh": math.asinh,
    "arccosh": math.acosh,
    "arctanh": math.atanh,
    "pow": _d_pow,
    "mod": _d_mod,
}


def evaluate(e: Expr, env: Env) -> float:
    """IEEE-double value of e; raises instead of returning NaN/Inf."""
    if isinstance(e, Const):
        return e.value.num / e.value.den
    if isinstance(e, Var):
        if e.name not in env.bindings:
            raise UnboundSymbol(f"variable {e.name} not bound")
        return _fin(float(env.bindings[e.name]))
    if isinstance(e, Sum):
        return _fin(sum(evaluate(t, env) for t in e.terms))
    if isinstance(e, Product):
        out = 1.0
        for f in e.factors:
            out *= evaluate(f, env)
        return _fin(out)
    if isinstance(e, Power):
        b = evaluate(e.base, env)
        if b == 0.0 and e.exp < 0:
            raise DomainError("division by zero")
        return _fin(b**e.exp)
    if isinstance(e, Quotient):
        den = evaluate(e.den, env)
        if den == 0.0:
            raise DomainError("division by zero")
        return _fin(evaluate(e.num, env) / den)
    if isinstance(e, Builtin):
        fn = _DOUBLE_BUILTINS.get(e.name)
        if fn is None:
            raise UnboundSymbol(f"unknown builtin {e.name}")
        args = [evaluate(a, env) for a in e.args]
        try:
            return _fin(fn(*args))
        except (ValueError, OverflowError, ZeroDivisionError) as exc:
            raise DomainError(f"{e.name}: {exc}") from None
    if isinstance(e, FuncApp):
        fn = env.funcs.get(e.name)
        if fn is None:
            raise UnboundSymbol(f"function symbol {e.name} not bound")
        args = [evaluate(a, env) for a in e.args]
        try:
            return _fin(float(fn(*args)))
        except (ValueError, OverflowError, ZeroDivisionError) as exc:
            raise DomainError(f"{e.name}: {exc}") from None
    raise TypeError(f"not an Expr: {e!r}")


# --------------------------------------------------------------------------
# High-precision evaluation (mpmath backend)
# --------------------------------------------------------------------------

# mpmath documents its elementary and special functions as accurate to
# within a couple of ulp of the working precision, which satisfies the
# 2-ulp contract here.  The global mpmath context is guarded by a lock so
# verification may run from multiple threads.
_MP_LOCK = threading.Lock()


def _mp_real(v):
    if isinstance(v, mpmath.mpc):
        if v.imag != 0:
            raise DomainError("complex value in high-precision evaluation")
        v = v.real
    if not mpmath.isfinite(v):
        raise DomainError("non-finite value in high-precision evaluation")
    return v


def _hp_eval(e: Expr, bindings: Mapping[str, object], funcs: Mapping[str, Callable]):
    if isinstance(e, Const):
        return mpmath.mpf(e.value.num) / e.value.den
    if isinstance(e, Var):
        if e.name not in bindings:
            raise UnboundSymbol(f"variable {e.name} not bound")
        return bindings[e.name]
    if isinstance(e, Sum):
        out = mpmath.mpf(0)
        for t in e.terms:
            out += _hp_eval(t, bindings, funcs)
        return out
    if isinstance(e, Product):
        out = mpmath.mpf(1)
        for f in e.factors:
            out *= _hp_eval(f, bindings, funcs)
        return out
    if isinstance(e, Power):
        b = _hp_eval(e.base, bindings, funcs)
        if b == 0 and e.exp < 0:
            raise DomainError("division by zero")
        return _mp_real(b**e.exp)
    if isinstance(e, Quotient):
        den = _hp_eval(e.den, bindings, funcs)
        if den == 0:
            raise DomainError("division by zero")
        return _hp_eval(e.num, bindings, funcs) / den
    if isinstance(e, Builtin):
        args = [_hp_eval(a, bindings, funcs) for a in e.args]
        try:
            return _mp_real(_hp_builtin(e.name, args))
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"{e.name}: {exc}") from None
    if isinstance(e, FuncApp):
        fn = funcs.get(e.name)
        if fn is None:
            raise UnboundSymbol(f"function symbol {e.name} not bound")
        args = [float(_hp_eval(a, bindings, funcs)) for a in e.args]
        return mpmath.mpf(fn(*args))
    raise TypeError(f"not an Expr: {e!r}")


def _hp_builtin(name: str, args):
    a = args[0]
    if name == "sin":
        return mpmath.sin(a)
    if name == "cos":
        return mpmath.cos(a)
    if name == "tan":
        return mpmath.tan(a)
    if name == "cot":
        return mpmath.cot(a)
    if name == "sec":
        return mpmath.sec(a)
    if name == "csc":
        return mpmath.csc(a)
    if name == "sinh":
        return mpmath.sinh(a)
    if name == "cosh":
        return mpmath.cosh(a)
    if name == "tanh":
        return mpmath.tanh(a)
    if name == "exp":
        return mpmath.exp(a)
    if name == "log":
        if a <= 0:
            raise DomainError("log of nonpositive value")
        return mpmath.log(a)
    if name == "sqrt":
        if a < 0:
            raise DomainError("square root of negative value")
        return mpmath.sqrt(a)
    if name == "cbrt":
        return mpmath.sign(a) * mpmath.cbrt(abs(a))
    if name == "abs":
        return abs(a)
    if name == "floor":
        return mpmath.floor(a)
    if name == "ceil":
        return mpmath.ceil(a)
    if name == "sign":
        return mpmath.sign(a)
    if name == "erf":
        return mpmath.erf(a)
    if name == "gamma":
        if a <= 0 and a == mpmath.floor(a):
            raise DomainError("gamma pole")
        return mpmath.gamma(a)
    if name == "arctan":
        return mpmath.atan(a)
    if name == "arcsin":
        if abs(a) > 1:
            raise DomainError("arcsin domain")
        return mpmath.asin(a)
    if name == "arccos":
        if abs(a) > 1:
            raise DomainError("arccos domain")
        return mpmath.acos(a)
    if name == "arcsinh":
        return mpmath.asinh(a)
    if name == "arccosh":
        if a < 1:
            raise DomainError("arccosh domain")
        return mpmath.acosh(a)
    if name == "arctanh":
        if abs(a) >= 1:
            raise DomainError("arctanh domain")
        return mpmath.atanh(a)
    if name == "pow":
        b = args[1]
        if a == 0 and b <= 0:
            raise DomainError("zero base with nonpositive exponent")
        if a < 0 and b != mpmath.floor(b):
            raise DomainError("negative base with non-integer exponent")
        return mpmath.power(a, b)
    if name == "mod":
        if args[1] == 0:
            raise DomainError("mod by zero")
        return mpmath.fmod(a, args[1])
    raise UnboundSymbol(f"unknown builtin {name}")


def evaluate_hp(e: Expr, env: Env, precision_bits: int = 256):
    """Evaluate at the requested binary precision (64 <= bits <= 4096).

    Returns an mpmath float carrying the working precision.
    """
    if not 64 <= precision_bits <= 4096:
        raise ValueError("precision_bits must lie in [64, 4096]")
    with _MP_LOCK:
        with mpmath.workprec(precision_bits):
            bindings = {k: mpmath.mpf(v) for k, v in env.bindings.items()}
            out = _mp_real(_hp_eval(e, bindings, env.funcs))
            return +out
