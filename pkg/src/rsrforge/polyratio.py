"""Exact simplification of rational structure over opaque atoms.

Function applications (both uninterpreted symbols and builtins) and bare
variables are treated as indivisible atoms; everything connecting them
must be +, -, *, integer powers, or division.  An expression is flattened
into a quotient of multivariate polynomials over those atoms with exact
rational coefficients.  The simplifier is sound but deliberately not
complete for transcendental identities: exp(x+r) and exp(x)*exp(r) are
distinct atoms here, and such identities are left to high-precision
randomized testing.
"""

from __future__ import annotations

from .errors import DomainError, NonRationalStructure
from .expr import (
    Builtin,
    Const,
    Expr,
    FuncApp,
    Power,
    Product,
    Quotient,
    Sum,
    Var,
    canonicalize,
    expr_key,
)
from .rational import ONE, ZERO, Rational

# A polynomial is a dict mapping monomials to nonzero Rational
# coefficients; a monomial is a sorted tuple of (atom_index, exponent)
# pairs with positive exponents.  The empty tuple is the constant
# monomial.

_EMPTY = ()


def _poly_const(c: Rational) -> dict:
    return {} if c.is_zero else {_EMPTY: c}


def _poly_add(p: dict, q: dict) -> dict:
    out = dict(p)
    for mono, c in q.items():
        s = out.get(mono, ZERO) + c
        if s.is_zero:
            out.pop(mono, None)
        else:
            out[mono] = s
    return out


def _mono_mul(a: tuple, b: tuple) -> tuple:
    exps: dict = {}
    for idx, k in a:
        exps[idx] = exps.get(idx, 0) + k
    for idx, k in b:
        exps[idx] = exps.get(idx, 0) + k
    return tuple(sorted((i, k) for i, k in exps.items() if k != 0))


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            mono = _mono_mul(m1, m2)
            s = out.get(mono, ZERO) + c1 * c2
            if s.is_zero:
                out.pop(mono, None)
            else:
                out[mono] = s
    return out


def _poly_pow(p: dict, k: int) -> dict:
    out = _poly_const(ONE)
    base = p
    while k > 0:
        if k & 1:
            out = _poly_mul(out, base)
        base = _poly_mul(base, base)
        k >>= 1
    return out


class _AtomTable:
    def __init__(self):
        self.atoms: list = []
        self.index: dict = {}

    def intern(self, atom: Expr) -> int:
        idx = self.index.get(atom)
        if idx is None:
            idx = len(self.atoms)
            self.atoms.append(atom)
            self.index[atom] = idx
        return idx


def _to_fraction(e: Expr, table: _AtomTable) -> tuple:
    """Return (num_poly, den_poly) for a canonical expression."""
    if isinstance(e, Const):
        return _poly_const(e.value), _poly_const(ONE)
    if isinstance(e, (Var, FuncApp, Builtin)):
        idx = table.intern(e)
        return {((idx, 1),): ONE}, _poly_const(ONE)
    if isinstance(e, Sum):
        num, den = _poly_const(ZERO), _poly_const(ONE)
        for t in e.terms:
            tn, td = _to_fraction(t, table)
            num = _poly_add(_poly_mul(num, td), _poly_mul(tn, den))
            den = _poly_mul(den, td)
        return num, den
    if isinstance(e, Product):
        num, den = _poly_const(ONE), _poly_const(ONE)
        for f in e.factors:
            fn, fd = _to_fraction(f, table)
            num = _poly_mul(num, fn)
            den = _poly_mul(den, fd)
        return num, den
    if isinstance(e, Power):
        bn, bd = _to_fraction(e.base, table)
        if e.exp >= 0:
            return _poly_pow(bn, e.exp), _poly_pow(bd, e.exp)
        if not bn:
            raise DomainError("formal division by zero in rational simplification")
        return _poly_pow(bd, -e.exp), _poly_pow(bn, -e.exp)
    if isinstance(e, Quotient):
        return _to_fraction(canonicalize(e), table)
    raise NonRationalStructure(f"cannot treat node as rational structure: {e!r}")


def _mono_to_expr(mono: tuple, atoms: list) -> Expr:
    factors = []
    for idx, k in mono:
        factors.append(atoms[idx] if k == 1 else Power(atoms[idx], k))
    if not factors:
        return Const(ONE)
    return canonicalize(Product(tuple(factors)))


def _poly_to_expr(p: dict, atoms: list) -> Expr:
    if not p:
        return Const(ZERO)
    terms = []
    for mono, c in p.items():
        terms.append(Product((Const(c), _mono_to_expr(mono, atoms))))
    return canonicalize(Sum(tuple(terms)))


def _mono_sort_key(mono: tuple, atoms: list):
    degree = sum(k for _, k in mono)
    return (degree, tuple(sorted((expr_key(atoms[i]), k) for i, k in mono)))


def expand_to_polynomial(e: Expr) -> tuple:
    """Expand e into (poly, atoms) after clearing denominators.

    The returned polynomial equals e times a formally nonzero
    denominator, so e == 0 as a rational identity iff poly == {}.
    """
    table = _AtomTable()
    num, _den = _to_fraction(canonicalize(e), table)
    return num, table.atoms


def rational_residual_zero(e: Expr) -> bool:
    """True iff e simplifies to zero as a rational identity over atoms.

    Same soundness as simplify_rational() == Const(0), but skips
    rebuilding the (possibly very large) expanded polynomial as an
    expression tree.
    """
    table = _AtomTable()
    num, _den = _to_fraction(canonicalize(e), table)
    return not num


def identity_normal_form(e: Expr) -> tuple:
    """Normalize an implicit identity "e = 0" after clearing denominators.

    Returns (expr, scale): the polynomial part of e scaled so its
    coefficients are coprime integers and the maximal monomial (graded by
    total degree, then atom order) has a positive coefficient.  ``scale``
    is the rational multiplier that was applied, so callers holding the
    original coefficient vector can renormalize it consistently.
    """
    poly, atoms = expand_to_polynomial(e)
    if not poly:
        return Const(ZERO), ONE

    lcm_den = 1
    for c in poly.values():
        lcm_den = lcm_den * c.den // _gcd(lcm_den, c.den)
    gcd_num = 0
    for c in poly.values():
        gcd_num = _gcd(gcd_num, abs(c.num * (lcm_den // c.den)))
    scale = Rational(lcm_den, gcd_num)

    lead = max(poly, key=lambda m: _mono_sort_key(m, atoms))
    if (poly[lead] * scale).num < 0:
        scale = -scale

    scaled = {m: c * scale for m, c in poly.items()}
    return _poly_to_expr(scaled, atoms), scale


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def simplify_rational(e: Expr) -> Expr:
    """Multiply out to a canonical polynomial quotient over atoms.

    Returns Const(0) exactly when the rational identity holds formally.
    The quotient is scaled so the denominator's maximal monomial has
    coefficient 1, which makes the output deterministic.
    """
    table = _AtomTable()
    num, den = _to_fraction(canonicalize(e), table)
    if not num:
        return Const(ZERO)
    if not den:
        raise DomainError("formal division by zero in rational simplification")

    lead = max(den, key=lambda m: _mono_sort_key(m, table.atoms))
    scale = den[lead]
    num = {m: c / scale for m, c in num.items()}
    den = {m: c / scale for m, c in den.items()}

    num_expr = _poly_to_expr(num, table.atoms)
    if den == _poly_const(ONE):
        return num_expr
    return canonicalize(Quotient(num_expr, _poly_to_expr(den, table.atoms)))
