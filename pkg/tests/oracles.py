"""Independent reference implementations used as test oracles.

Nothing here imports the package's mode tables: Fock states are rebuilt as
polynomials (boson) and sign-tracked words (fermion), binomials come from
the product formula, and series expansions from repeated multiplication.
"""

from __future__ import annotations

import math
from collections import defaultdict
from fractions import Fraction

HALF = Fraction(1, 2)


# -- scalars --------------------------------------------------------------------

def binom(n, i: int) -> Fraction:
    """n(n-1)...(n-i+1)/i! by the product formula."""
    if i < 0:
        return Fraction(0)
    out = Fraction(1)
    for k in range(i):
        out *= Fraction(n) - k
    return out / math.factorial(i)


def perm_sign_by_swaps(perm, parities) -> int:
    """Sort ``perm`` by adjacent swaps, picking up -1 per swap of two odd items."""
    seq = list(perm)
    sign = 1
    for i in range(len(seq)):
        for j in range(len(seq) - 1 - i):
            if seq[j] > seq[j + 1]:
                if parities[seq[j]] % 2 and parities[seq[j + 1]] % 2:
                    sign = -sign
                seq[j], seq[j + 1] = seq[j + 1], seq[j]
    return sign


# -- one-sector Laurent series by repeated multiplication -------------------------

def _mul(p, q, keep):
    out = defaultdict(Fraction)
    for (a1, b1), c1 in p.items():
        for (a2, b2), c2 in q.items():
            k = (a1 + a2, b1 + b2)
            if keep(k):
                out[k] += c1 * c2
    return {k: v for k, v in out.items() if v}


def int_power_series(n: int, sector: str, depth: int):
    """``(z - w)^n`` for an integer ``n`` in one sector: keys ``(power of z,
    power of w)``; negative powers via the geometric series.  Keeps terms
    whose subleading power is ``<= depth``."""
    if sector == "z>w":
        keep = lambda k: k[1] <= depth
        base = {(1, 0): Fraction(1), (0, 1): Fraction(-1)}
        inv = {(-1 - k, k): Fraction(1) for k in range(depth + 1)}
    else:
        keep = lambda k: k[0] <= depth
        base = {(1, 0): Fraction(1), (0, 1): Fraction(-1)}
        inv = {(k, -1 - k): Fraction(-1) for k in range(depth + 1)}
    out = {(0, 0): Fraction(1)}
    factor = base if n >= 0 else inv
    for _ in range(abs(n)):
        out = _mul(out, factor, keep)
    return out


# -- free boson by polynomials ----------------------------------------------------

class BosonFock:
    """``alpha_{-k}`` multiplies by ``x_k``, ``alpha_k`` acts as ``level * k d/dx_k``.

    States are dicts ``{tuple of ints sorted decreasingly: Fraction}``.
    """

    def __init__(self, level=1):
        self.level = Fraction(level)

    @staticmethod
    def _norm(mono):
        return tuple(sorted(mono, reverse=True))

    def mode(self, n: int, vec):
        out = defaultdict(Fraction)
        for mono, c in vec.items():
            if n < 0:
                out[self._norm(mono + (-n,))] += c
            elif n > 0:
                cnt = mono.count(n)
                if cnt:
                    rest = list(mono)
                    rest.remove(n)
                    out[self._norm(rest)] += c * cnt * n * self.level
        return {k: v for k, v in out.items() if v}

    def commutator(self, m: int, n: int) -> Fraction:
        return self.level * m if m + n == 0 else Fraction(0)

    @staticmethod
    def weight(vec):
        return max((sum(k) for k in vec), default=0)

    def virasoro(self, n: int, vec):
        """``L_n = 1/(2 level) sum_m :alpha_{n-m} alpha_m:`` (annihilators right)."""
        out = defaultdict(Fraction)
        W = self.weight(vec)
        r = W + abs(n) + 2
        for m in range(-r, r + 1):
            p, q = n - m, m
            if p > q:
                p, q = q, p
            img = self.mode(p, self.mode(q, vec))
            for k, c in img.items():
                out[k] += c / (2 * self.level)
        return {k: v for k, v in out.items() if v}


# -- free fermion by sign-tracked words -------------------------------------------

class FermionFock:
    """``{psi_r, psi_s} = delta_{r+s,0}``; states ``{tuple of decreasing
    positive half-integers s: coeff}`` for ``psi_{-s1} psi_{-s2} ... 1``."""

    @staticmethod
    def _sort(word):
        """Sort decreasingly by adjacent transpositions; None if a repeat."""
        w = list(word)
        sign = 1
        for i in range(len(w)):
            for j in range(len(w) - 1 - i):
                if w[j] < w[j + 1]:
                    w[j], w[j + 1] = w[j + 1], w[j]
                    sign = -sign
        if len(set(w)) != len(w):
            return None, 0
        return tuple(w), sign

    def mode(self, r: Fraction, vec):
        r = Fraction(r)
        out = defaultdict(Fraction)
        for word, c in vec.items():
            if r < 0:
                new, sign = self._sort((-r,) + word)
                if new is not None:
                    out[new] += sign * c
            else:
                for j, s in enumerate(word):
                    if s == r:
                        out[word[:j] + word[j + 1:]] += (-1) ** j * c
        return {k: v for k, v in out.items() if v}

    @staticmethod
    def anticommutator(r, s) -> Fraction:
        return Fraction(1) if Fraction(r) + Fraction(s) == 0 else Fraction(0)


def pair_power_series(vh, sector: str, depth: int):
    """``(vz - vw)^vh`` coefficientwise: ``z>w`` gives
    ``sum (-1)^(k+kb) C(h,k) C(hb,kb) z^(h-k, hb-kb) w^(k, kb)``; ``w>z`` is
    ``(-1)^(h-hb) (vw - vz)^vh`` expanded the same way with the roles swapped.
    Keys are ``((z, zbar), (w, wbar))`` as plain Fractions."""
    h, hb = Fraction(vh[0]), Fraction(vh[1])
    out = {}
    if sector == "z>w":
        sign = 1
    else:
        diff = h - hb
        assert diff.denominator == 1
        sign = -1 if diff.numerator % 2 else 1
    for k in range(depth + 1):
        for kb in range(depth + 1):
            c = sign * (-1) ** (k + kb) * binom(h, k) * binom(hb, kb)
            if not c:
                continue
            lead, tail = (h - k, hb - kb), (Fraction(k), Fraction(kb))
            key = (lead, tail) if sector == "z>w" else (tail, lead)
            out[key] = c
    return out


def plain_keys(dist):
    """A package distribution's coefficients with plain-tuple keys."""
    return {tuple((Fraction(e[0]), Fraction(e[1])) for e in k): Fraction(v)
            for k, v in dist.coeffs.items()}


def locality_order_oracle(bracket, indices, nmax=6):
    """Least ``N`` with ``sum_i (-1)^i C(N,i) [a_{p+N-i}, b_{q+i}] = 0`` for all
    sampled mode pairs, where ``bracket(p, q)`` is the scalar (super)bracket
    of modes in the ``z^{-p-1}`` (resp. ``w^{-q-1}``) convention."""
    for N in range(nmax + 1):
        if all(sum((-1) ** i * binom(N, i) * bracket(p + N - i, q + i) for i in range(N + 1)) == 0
               for p in indices for q in indices):
            return N
    return None
