"""Exact scalars, exponent pairs, cosets and sign conventions.

Scalars are :class:`fractions.Fraction`.  An exponent pair ``(n, nbar)``
indexes the modes of a two-sector field ``a(z, zbar)``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from enum import IntEnum
from fractions import Fraction
from collections import namedtuple
from typing import Iterable, Sequence, Union

Rational = Union[int, Fraction, str]


class NotInVbbK(ValueError):
    """Raised when a sign ``(-1)^(n - nbar)`` is requested for a
    non-integral difference."""


def frac(x: Rational) -> Fraction:
    """Coerce ints, strings like ``"-3/2"`` and Fractions to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("floating point scalars are not allowed")
    return Fraction(x)


class Parity(IntEnum):
    EVEN = 0
    ODD = 1

    def __mul__(self, other):
        # product of signs (-1)^(p*q) lives in Z/2 additively
        return Parity((int(self) * int(other)) % 2)

    def __add__(self, other):
        return Parity((int(self) + int(other)) % 2)


def norm(x: Rational):
    """Exact scalar with integral values stored as ``int`` (cheap to hash)."""
    if type(x) is int:
        return x
    x = frac(x)
    return x.numerator if x.denominator == 1 else x


_PairBase = namedtuple("ExpPair", "n nbar")


class ExpPair(_PairBase):
    """Exponent pair ``(n, nbar)``; components are exact rationals."""

    __slots__ = ()

    def __new__(cls, n, nbar):
        return _PairBase.__new__(cls, norm(n), norm(nbar))

    @classmethod
    def of(cls, n: Rational, nbar: Rational) -> "ExpPair":
        return cls(n, nbar)

    def __add__(self, other):  # type: ignore[override]
        return ExpPair(self[0] + other[0], self[1] + other[1])

    def __sub__(self, other):
        return ExpPair(self[0] - other[0], self[1] - other[1])

    def __neg__(self):
        return ExpPair(-self[0], -self[1])

    def is_integral(self) -> bool:
        return self.n.denominator == 1 and self.nbar.denominator == 1

    def is_natural(self) -> bool:
        return self.is_integral() and self.n >= 0 and self.nbar >= 0

    def __str__(self) -> str:
        return f"({fmt(self.n)},{fmt(self.nbar)})"


MINUS_ONE = ExpPair.of(-1, -1)
ZERO = ExpPair.of(0, 0)


def fmt(x: Fraction) -> str:
    """Render a rational as ``p/q`` (or ``p`` when integral)."""
    x = frac(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _frac_part(x: Fraction) -> Fraction:
    return x - math.floor(x)


def coset_of(vn: Sequence[Rational]) -> ExpPair:
    """Canonical representative of ``vn + Z^2`` in ``[0, 1)^2``."""
    return ExpPair(_frac_part(frac(vn[0])), _frac_part(frac(vn[1])))



def same_coset(a: Sequence[Rational], b: Sequence[Rational]) -> bool:
    return coset_of(a) == coset_of(b)


@lru_cache(maxsize=None)
def _gen_binom(n, i: int) -> Fraction:
    if n.denominator == 1:
        m = n.numerator
        if m >= 0:
            return math.comb(m, i) if i <= m else 0
        c = math.comb(-m + i - 1, i)
        return -c if i % 2 else c
    num = Fraction(1)
    for k in range(i):
        num *= n - k
    return norm(num / math.factorial(i))


def gen_binom(n: Rational, i: int) -> Fraction:
    """Generalized binomial coefficient n(n-1)...(n-i+1)/i!.

    Integral values come back as ``int``.
    """
    if i < 0:
        return 0
    return _gen_binom(norm(n), int(i))


def _gen_binom_slow(n: Rational, i: int) -> Fraction:
    """Reference product formula (used by tests as an oracle)."""
    if i < 0:
        return Fraction(0)
    n = frac(n)
    num = Fraction(1)
    for k in range(i):
        num *= n - k
    return num / math.factorial(i)


def binom_pair(vn: Sequence[Rational], vi: Sequence[int]) -> Fraction:
    return gen_binom(vn[0], vi[0]) * gen_binom(vn[1], vi[1])


def in_vbbk(vn: Sequence[Rational]) -> bool:
    return (frac(vn[0]) - frac(vn[1])).denominator == 1


def int_sign(vn: Sequence[Rational]) -> int:
    """``(-1)^(n - nbar)``; defined only on the set with integral difference."""
    d = frac(vn[0]) - frac(vn[1])
    if d.denominator != 1:
        raise NotInVbbK(f"n - nbar = {fmt(d)} is not an integer")
    return -1 if d.numerator % 2 else 1


def pow_minus_one(k: Rational) -> int:
    """``(-1)^k`` for an integer ``k``."""
    k = frac(k)
    if k.denominator != 1:
        raise NotInVbbK(f"(-1)^{fmt(k)} is undefined")
    return -1 if k.numerator % 2 else 1


def koszul_sign(perm: Sequence[int], parities: Sequence[int]) -> int:
    """Sign of reordering items by ``perm``.

    ``perm[k]`` is the item placed at position ``k``; ``parities[item]``
    its parity.  Each inversion between two odd items contributes -1.
    """
    if len(perm) != len(parities):
        raise ValueError("permutation and parity list differ in length")
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j] and parities[perm[i]] % 2 and parities[perm[j]] % 2:
                sign = -sign
    return sign


def supersign(p: int, q: int) -> int:
    """``zeta^(p*q)`` with ``zeta = -1``."""
    return -1 if (p % 2 and q % 2) else 1


def divided_scalar(n: int) -> Fraction:
    return Fraction(1, math.factorial(n))


def divided_power_pair(vk: Sequence[Rational]) -> bool:
    """True when ``d^(vk)`` is nonzero, i.e. ``vk`` lies in N^2."""
    return all(frac(x).denominator == 1 and frac(x) >= 0 for x in vk)


def parse_rational(text: str) -> Fraction:
    text = text.strip()
    if not text or any(c in text for c in ".eE_ "):
        raise ValueError(f"not an exact rational: {text!r}")
    return Fraction(text)


def coset_range(lo: Fraction, hi: Fraction, residue: Fraction) -> Iterable[Fraction]:
    """Values ``x`` with ``lo <= x <= hi`` and ``x = residue (mod 1)``."""
    start = norm(lo + _frac_part(frac(residue) - lo))
    x = start
    while x <= hi:
        yield x
        x += 1
