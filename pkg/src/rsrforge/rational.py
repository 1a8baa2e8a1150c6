"""Exact rational numbers over checked 128-bit integers.

Python integers never wrap, so the "overflow" contract is enforced
explicitly: any result whose numerator or denominator leaves the signed
128-bit range raises RationalOverflow instead of silently growing.
Continued-fraction snapping with denominators up to 10**6 stays far
inside this range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError, RationalOverflow

_LIMIT = 1 << 127


def _check(n: int) -> int:
    if n >= _LIMIT or n <= -_LIMIT:
        raise RationalOverflow(f"integer magnitude {n} exceeds 128-bit range")
    return n


@dataclass(frozen=True, order=False)
class Rational:
    """Normalized fraction: gcd(|num|, den) == 1 and den > 0."""

    num: int
    den: int = 1

    def __post_init__(self):
        num, den = self.num, self.den
        if den == 0:
            raise DomainError("rational with zero denominator")
        if den < 0:
            num, den = -num, -den
        g = math.gcd(num, den)
        if g > 1:
            num //= g
            den //= g
        _check(num)
        _check(den)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    # --- arithmetic ---------------------------------------------------

    def __add__(self, other: "Rational") -> "Rational":
        return Rational(
            _check(self.num * other.den + other.num * self.den),
            _check(self.den * other.den),
        )

    def __sub__(self, other: "Rational") -> "Rational":
        return Rational(
            _check(self.num * other.den - other.num * self.den),
            _check(self.den * other.den),
        )

    def __mul__(self, other: "Rational") -> "Rational":
        return Rational(_check(self.num * other.num), _check(self.den * other.den))

    def __truediv__(self, other: "Rational") -> "Rational":
        if other.num == 0:
            raise DomainError("division by zero rational")
        return Rational(_check(self.num * other.den), _check(self.den * other.num))

    def __neg__(self) -> "Rational":
        return Rational(-self.num, self.den)

    def __abs__(self) -> "Rational":
        return Rational(abs(self.num), self.den)

    def __pow__(self, k: int) -> "Rational":
        if not isinstance(k, int):
            raise TypeError("rational powers must have integer exponents")
        if k >= 0:
            return Rational(_check(self.num**k), _check(self.den**k))
        if self.num == 0:
            raise DomainError("zero raised to a negative power")
        return Rational(_check(self.den ** (-k)), _check(self.num ** (-k)))

    # --- comparisons ---------------------------------------------------

    def __lt__(self, other: "Rational") -> bool:
        return self.num * other.den < other.num * self.den

    def __le__(self, other: "Rational") -> bool:
        return self.num * other.den <= other.num * self.den

    def __float__(self) -> float:
        return self.num / self.den

    def __repr__(self) -> str:
        return f"{self.num}" if self.den == 1 else f"{self.num}/{self.den}"

    # --- helpers --------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.num == 0

    @property
    def is_integer(self) -> bool:
        return self.den == 1

    @staticmethod
    def from_fraction(f: Fraction) -> "Rational":
        return Rational(_check(f.numerator), _check(f.denominator))

    def as_fraction(self) -> Fraction:
        return Fraction(self.num, self.den)

    @staticmethod
    def parse(text: str) -> "Rational":
        text = text.strip()
        if "/" in text:
            a, b = text.split("/")
            return Rational(int(a), int(b))
        return Rational(int(text))


ZERO = Rational(0)
ONE = Rational(1)
