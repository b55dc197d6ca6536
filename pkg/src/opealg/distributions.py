"""Truncated multi-variable two-sector formal distributions.

A :class:`Dist` in ``r`` variables stores scalar coefficients keyed by the
monomial *powers*: the key ``((p1, p1bar), ..., (pr, prbar))`` stands for
``z1^p1 z1bar^p1bar ... zr^pr zrbar^prbar``.

Truncation is explicit.  A distribution is either *complete* (finitely
supported, every coefficient known) or carries a :class:`Window`: the box of
coordinates inside which every coefficient is known exactly (absent keys
inside the box are known zeros).  Coordinates depend on the expansion
*order* (the sector tag): for ``order = (o1, ..., or)``, read as
``|z_o1| > ... > |z_or|``, coordinate ``(s, p)`` is the sector-``s`` sum of
the powers of ``z_op, ..., z_or``.  Coordinate ``p = 0`` is the total degree.
Expansions in the region of ``order`` are bounded below in every coordinate
with ``p >= 1``, which is what makes products computable by per-coordinate
interval arithmetic.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from typing import Callable, Dict, Iterable, Iterator, Mapping, Optional, Sequence, Tuple

from .scalars import ExpPair, NotInVbbK, frac, fmt, gen_binom, int_sign

INF = math.inf

Key = Tuple[ExpPair, ...]
Bound = Tuple[object, object]  # (lo, hi), entries Fraction or +-INF


class InfiniteCoefficientSum(ArithmeticError):
    """A product coefficient would need infinitely many terms."""


class NotInBracketSpace(ValueError):
    """No monomial-times-power-series presentation is available."""


class SectorMismatch(ValueError):
    """Distributions expanded in different regions were combined."""


Z_GT_W = (0, 1)
W_GT_Z = (1, 0)
_SECTORS = {"z>w": Z_GT_W, "w>z": W_GT_Z}


def sector_order(sector) -> Tuple[int, ...]:
    if isinstance(sector, str):
        return _SECTORS[sector]
    return tuple(sector)


def key_coords(key: Key, order: Sequence[int]) -> Tuple[Fraction, ...]:
    r = len(order)
    out = []
    for s in (0, 1):
        suffix = [Fraction(0)] * r
        acc = Fraction(0)
        for p in range(r - 1, -1, -1):
            acc += key[order[p]][s]
            suffix[p] = acc
        out.extend(suffix)
    return tuple(out)


def _fmt_bound(x) -> str:
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    return fmt(x)


@dataclass(frozen=True)
class Window:
    """Box of exactly-known coordinates for a given expansion order."""

    order: Tuple[int, ...]
    bounds: Tuple[Bound, ...]

    @classmethod
    def full(cls, order: Sequence[int]) -> "Window":
        return cls(tuple(order), tuple((-INF, INF) for _ in range(2 * len(order))))

    def contains(self, key: Key) -> bool:
        return all(lo <= c <= hi for c, (lo, hi) in zip(key_coords(key, self.order), self.bounds))

    def is_empty(self) -> bool:
        return any(lo > hi for lo, hi in self.bounds)

    def describe(self) -> str:
        r = len(self.order)
        parts = []
        for i, (lo, hi) in enumerate(self.bounds):
            s, p = divmod(i, r)
            if lo == -INF and hi == INF:
                continue
            parts.append(f"C{'b' if s else ''}{p}:[{_fmt_bound(lo)},{_fmt_bound(hi)}]")
        order = ">".join(f"z{o}" for o in self.order)
        return f"{order} " + (" ".join(parts) if parts else "all")


@dataclass(frozen=True)
class MeetWindow:
    """Intersection of windows taken in different expansion orders."""

    parts: Tuple[Window, ...]

    def contains(self, key: Key) -> bool:
        return all(w.contains(key) for w in self.parts)

    def describe(self) -> str:
        return " & ".join(w.describe() for w in self.parts)


@dataclass(frozen=True)
class Dist:
    nvars: int
    coeffs: Mapping[Key, Fraction] = field(default_factory=dict)
    order: Optional[Tuple[int, ...]] = None
    window: Optional[Window] = None  # None: complete
    support: Optional[Tuple[Bound, ...]] = None  # global bounds, coords of `order`

    # -- construction -----------------------------------------------------
    @classmethod
    def complete(cls, nvars: int, coeffs: Mapping, order=None) -> "Dist":
        clean = {}
        for k, v in coeffs.items():
            v = frac(v)
            if v:
                clean[tuple(ExpPair.of(*e) for e in k)] = v
        return cls(nvars, clean, tuple(order) if order is not None else None)

    @classmethod
    def zero(cls, nvars: int) -> "Dist":
        return cls(nvars, {})

    @classmethod
    def constant(cls, nvars: int, value=1) -> "Dist":
        return cls.complete(nvars, {tuple((0, 0) for _ in range(nvars)): value})

    @classmethod
    def monomial(cls, *powers, coeff=1) -> "Dist":
        return cls.complete(len(powers), {tuple(powers): coeff})

    # -- inspection -------------------------------------------------------
    @property
    def is_complete(self) -> bool:
        return self.window is None

    def coeff(self, key) -> Fraction:
        key = tuple(ExpPair.of(*e) for e in key)
        if self.window is not None and not self.window.contains(key):
            raise KeyError(f"coefficient {key} lies outside the window")
        return self.coeffs.get(key, Fraction(0))

    def knows(self, key: Key) -> bool:
        return self.window is None or self.window.contains(key)

    def is_zero(self) -> bool:
        return not self.coeffs

    def items(self) -> Iterator[Tuple[Key, Fraction]]:
        return iter(sorted(self.coeffs.items()))

    def bounds_in(self, order: Sequence[int]) -> Tuple[Tuple[Bound, ...], Tuple[Bound, ...]]:
        """(support, window) per coordinate of ``order``."""
        order = tuple(order)
        if self.window is None:
            r = 2 * self.nvars
            if not self.coeffs:
                sup = tuple((INF, -INF) for _ in range(r))
            else:
                cs = [key_coords(k, order) for k in self.coeffs]
                sup = tuple((min(c[i] for c in cs), max(c[i] for c in cs)) for i in range(r))
            return sup, Window.full(order).bounds
        if order != self.order or isinstance(self.window, MeetWindow):
            raise SectorMismatch(f"distribution expanded in {self.order}, requested {order}")
        sup = self.support or tuple((-INF, INF) for _ in range(2 * self.nvars))
        return sup, self.window.bounds

    # -- algebra ----------------------------------------------------------
    def _check_nvars(self, other: "Dist") -> None:
        if self.nvars != other.nvars:
            raise ValueError("distributions in different numbers of variables")

    def __add__(self, other: "Dist") -> "Dist":
        self._check_nvars(other)
        order = _common_order(self, other)
        coeffs = dict(self.coeffs)
        for k, v in other.coeffs.items():
            s = coeffs.get(k, 0) + v
            if s:
                coeffs[k] = s
            else:
                coeffs.pop(k, None)
        if self.window is None and other.window is None:
            return Dist(self.nvars, coeffs, order)
        sa, wa = self.bounds_in(order)
        sb, wb = other.bounds_in(order)
        win = Window(order, tuple((max(a[0], b[0]), min(a[1], b[1])) for a, b in zip(wa, wb)))
        sup = tuple((min(a[0], b[0]), max(a[1], b[1])) for a, b in zip(sa, sb))
        coeffs = {k: v for k, v in coeffs.items() if win.contains(k)}
        return Dist(self.nvars, coeffs, order, win, sup)

    def scale(self, c) -> "Dist":
        c = frac(c)
        if not c:
            return Dist(self.nvars, {}, self.order, self.window, self.support)
        return Dist(self.nvars, {k: v * c for k, v in self.coeffs.items()},
                    self.order, self.window, self.support)

    def __neg__(self) -> "Dist":
        return self.scale(-1)

    def __sub__(self, other: "Dist") -> "Dist":
        return self + (-other)

    def __mul__(self, other: "Dist") -> "Dist":
        return mul(self, other)

    def to_text(self) -> str:
        return to_text(self)


def _common_order(a: Dist, b: Dist):
    if a.order is not None and b.order is not None and a.order != b.order:
        if a.window is not None or b.window is not None:
            raise SectorMismatch(f"cannot combine expansions {a.order} and {b.order}")
    return a.order if a.order is not None else b.order


def _product_interval(sa, wa, sb, wb):
    """Exactly-known interval of one product coordinate."""
    if not ((sa[0] > -INF or sb[1] < INF) and (sa[1] < INF or sb[0] > -INF)):
        raise InfiniteCoefficientSum("product coefficient needs infinitely many terms")
    lo, hi = -INF, INF
    if sa[0] < wa[0]:
        lo = max(lo, wa[0] + sb[1])
    if sa[1] > wa[1]:
        hi = min(hi, wa[1] + sb[0])
    if sb[0] < wb[0]:
        lo = max(lo, wb[0] + sa[1])
    if sb[1] > wb[1]:
        hi = min(hi, wb[1] + sa[0])
    return lo, hi


def _accumulate(coeffs: Dict[Key, Fraction], a: Dist, b: Dist) -> None:
    """Add all products of terms of ``a`` and ``b`` into ``coeffs``.

    Exponents are rescaled to integers over a common denominator for the
    inner loop (hashing rationals dominates otherwise) and converted back
    once per distinct product key; coefficients are treated the same way.
    """
    den = 1
    for d in (a, b):
        for k in d.coeffs:
            for e in k:
                for x in e:
                    if type(x) is not int:
                        den = den * x.denominator // math.gcd(den, x.denominator)

    def scaled(k):
        return tuple(int(x * den) for e in k for x in e)

    def lcm_den(d):
        out = 1
        for v in d.coeffs.values():
            q = Fraction(v).denominator
            out = out * q // math.gcd(out, q)
        return out

    # coefficients likewise become integers over a common denominator
    qa, qb = lcm_den(a), lcm_den(b)
    sa = [(scaled(k), int(v * qa)) for k, v in a.coeffs.items()]
    sb = [(scaled(k), int(v * qb)) for k, v in b.coeffs.items()]
    acc: Dict[tuple, int] = {}
    for ka, va in sa:
        for kb, vb in sb:
            k = tuple(map(operator.add, ka, kb))
            acc[k] = acc.get(k, 0) + va * vb
    q = qa * qb
    for k, v in acc.items():
        key = tuple(ExpPair(Fraction(k[2 * i], den), Fraction(k[2 * i + 1], den))
                    for i in range(len(k) // 2))
        coeffs[key] = coeffs.get(key, 0) + Fraction(v, q)


def mul(a: Dist, b: Dist) -> Dist:
    """Product of distributions, with the window narrowed accordingly."""
    a._check_nvars(b)
    order = _common_order(a, b)
    if a.window is None and b.window is None:
        coeffs: Dict[Key, Fraction] = {}
        _accumulate(coeffs, a, b)
        return Dist(a.nvars, {k: v for k, v in coeffs.items() if v}, order)
    sa, wa = a.bounds_in(order)
    sb, wb = b.bounds_in(order)
    if not a.coeffs and a.window is None or not b.coeffs and b.window is None:
        return Dist(a.nvars, {}, order)
    bounds = tuple(_product_interval(*args) for args in zip(sa, wa, sb, wb))
    win = Window(order, bounds)
    sup = tuple((x[0] + y[0], x[1] + y[1]) for x, y in zip(sa, sb))
    coeffs = {}
    _accumulate(coeffs, a, b)
    coeffs = {k: v for k, v in coeffs.items() if v and win.contains(k)}
    return Dist(a.nvars, coeffs, order, win, sup)


def _depth_pair(depth) -> Tuple[int, int]:
    if isinstance(depth, (tuple, list)):
        return int(depth[0]), int(depth[1])
    return int(depth), int(depth)


def binomial_kernel(vh, i: int, j: int, nvars: int, order: Sequence[int], depth,
                    plus: bool = False) -> Dist:
    """``(z_i - z_j)^vh`` (or ``(z_i + z_j)^vh``) expanded in the region of
    ``order``, truncated after ``depth`` terms per sector.

    For the minus sign, if ``z_j`` dominates ``z_i`` the expansion is
    ``(-1)^vh (z_j - z_i)^vh``, which needs ``vh`` with integral difference.
    """
    vh = ExpPair.of(*vh)
    order = tuple(order)
    d = _depth_pair(depth)
    pi, pj = order.index(i), order.index(j)
    lead, tail = (i, j) if pi < pj else (j, i)
    sign = 1
    if pi > pj and not plus:
        sign = int_sign(vh)
    coeffs = {}
    for k in range(d[0] + 1):
        for kb in range(d[1] + 1):
            c = gen_binom(vh.n, k) * gen_binom(vh.nbar, kb)
            if not plus:
                c *= (-1) ** (k + kb)
            if not c:
                continue
            key = [ExpPair.of(0, 0)] * nvars
            key[lead] = ExpPair(vh.n - k, vh.nbar - kb)
            key[tail] = ExpPair.of(k, kb)
            coeffs[tuple(key)] = sign * c
    plead, ptail = min(pi, pj), max(pi, pj)
    sup, win = [], []
    for s in (0, 1):
        h = vh[s]
        for p in range(nvars):
            if p <= plead:
                sup.append((h, h))
                win.append((-INF, INF))
            elif p <= ptail:
                sup.append((Fraction(0), INF))
                win.append((-INF, Fraction(d[s])))
            else:
                sup.append((Fraction(0), Fraction(0)))
                win.append((-INF, INF))
    return Dist(nvars, coeffs, order, Window(order, tuple(win)), tuple(sup))


def expand_pow(vh, sector="z>w", window=4) -> Dist:
    """``(vz - vw)^vh`` in the sector ``z>w`` or ``w>z`` up to depth ``window``."""
    return binomial_kernel(vh, 0, 1, 2, sector_order(sector), window)


def expand_sum_pow(vh, sector="z>w", window=4) -> Dist:
    """``(vz + vw)^vh`` expanded in ``z>w`` or ``w>z``."""
    return binomial_kernel(vh, 0, 1, 2, sector_order(sector), window, plus=True)


def _shift_coords(bounds, order, var: int, sector: int, delta):
    r = len(order)
    pos = order.index(var)
    out = list(bounds)
    for p in range(pos + 1):
        lo, hi = out[sector * r + p]
        out[sector * r + p] = (lo + delta, hi + delta)
    return tuple(out)


def derive(a: Dist, var: int = 0, order: int = 1, divided: bool = False, sector: int = 0) -> Dist:
    """``d/dz_var`` (``sector=1``: ``d/dzbar_var``) applied ``order`` times."""
    coeffs = {}
    for k, v in a.coeffs.items():
        e = k[var][sector]
        c = gen_binom(e, order) if divided else gen_binom(e, order) * math.factorial(order)
        if c:
            nk = list(k)
            ep = list(k[var])
            ep[sector] = e - order
            nk[var] = ExpPair(*ep)
            coeffs[tuple(nk)] = v * c
    if a.window is None:
        return Dist(a.nvars, coeffs, a.order)
    win = Window(a.order, _shift_coords(a.window.bounds, a.order, var, sector, -order))
    sup = _shift_coords(a.support, a.order, var, sector, -order) if a.support else None
    return Dist(a.nvars, coeffs, a.order, win, sup)


def derive_pair(a: Dist, var: int, vk, divided: bool = True) -> Dist:
    """``d_{vz}^{(vk)}``; zero unless ``vk`` has natural components."""
    vk = ExpPair.of(*vk)
    if not vk.is_natural():
        return a.scale(0)
    out = derive(a, var, int(vk.n), divided, 0)
    return derive(out, var, int(vk.nbar), divided, 1)


def shift(a: Dist, depth=4) -> Dist:
    """``a(vz + vw) = e^{vw d_vz} a(vz)`` for one-variable ``a``, expanded
    in ``z>w`` and truncated at ``depth`` powers of ``vw`` per sector."""
    if a.nvars != 1:
        raise ValueError("shift takes a one-variable distribution")
    d = _depth_pair(depth)
    coeffs: Dict[Key, Fraction] = {}
    for (e,), v in a.coeffs.items():
        for k in range(d[0] + 1):
            for kb in range(d[1] + 1):
                c = gen_binom(e.n, k) * gen_binom(e.nbar, kb)
                if c:
                    key = (ExpPair(e.n - k, e.nbar - kb), ExpPair.of(k, kb))
                    coeffs[key] = coeffs.get(key, 0) + v * c
    coeffs = {k: v for k, v in coeffs.items() if v}
    order = Z_GT_W
    if a.window is None:
        sup1, win1 = a.bounds_in((0,))
    else:
        sup1, win1 = a.support or ((-INF, INF),) * 2, a.window.bounds
    sup = (sup1[0], (Fraction(0), INF), sup1[1], (Fraction(0), INF))
    win = (win1[0], (-INF, Fraction(d[0])), win1[1], (-INF, Fraction(d[1])))
    return Dist(2, coeffs, order, Window(order, win), sup)


def _raw_lower_bounds(a: Dist) -> Tuple[Tuple[object, ...], ...]:
    """Per-variable, per-sector lower bounds of the raw powers."""
    r = a.nvars
    if a.window is None:
        if not a.coeffs:
            return tuple((Fraction(0), Fraction(0)) for _ in range(r))
        return tuple(tuple(min(k[v][s] for k in a.coeffs) for s in (0, 1)) for v in range(r))
    sup = a.support or tuple((-INF, INF) for _ in range(2 * r))
    out = [[None, None] for _ in range(r)]
    for s in (0, 1):
        for p in range(r):
            lo = sup[s * r + p][0]
            nxt = sup[s * r + p + 1][1] if p + 1 < r else Fraction(0)
            out[a.order[p]][s] = lo - nxt
    return tuple(tuple(x) for x in out)


def diagonal(a: Dist) -> Dist:
    """Set all variables equal: ``a(vz, ..., vz)``.

    Needs a membership witness in the bracket space: every raw power must be
    bounded below (monomial times power series).
    """
    lbs = _raw_lower_bounds(a)
    if any(x == -INF or x != x for pair in lbs for x in pair):
        raise NotInBracketSpace("no monomial-times-power-series presentation")
    coeffs: Dict[Key, Fraction] = {}
    for k, v in a.coeffs.items():
        e = ExpPair(sum(x.n for x in k), sum(x.nbar for x in k))
        coeffs[(e,)] = coeffs.get((e,), 0) + v
    coeffs = {k: v for k, v in coeffs.items() if v}
    if a.window is None:
        return Dist(1, coeffs)
    r = a.nvars
    win = []
    for s in (0, 1):
        lo, hi = a.window.bounds[s * r]
        for p in range(1, r):
            before = sum(lbs[a.order[q]][s] for q in range(p))
            after = sum(lbs[a.order[q]][s] for q in range(p, r))
            wlo, whi = a.window.bounds[s * r + p]
            hi = min(hi, whi + before)
            if wlo > after:
                hi = -INF
        win.append((lo, hi))
    window = Window((0,), tuple(win))
    coeffs = {k: v for k, v in coeffs.items() if window.contains(k)}
    sup = tuple((sum(l[s] for l in lbs), INF) for s in (0, 1))
    return Dist(1, coeffs, (0,), window, sup)


class SupportSet:
    """Finite union of per-coordinate (coset, interval) constraints on powers.

    Each clause maps ``(var, sector)`` to ``(residue or None, lo, hi)``.
    """

    def __init__(self, clauses: Iterable[Mapping] = (), everything: bool = False):
        self.clauses = [dict(c) for c in clauses]
        self.everything = everything

    @classmethod
    def full(cls) -> "SupportSet":
        return cls(everything=True)

    @classmethod
    def empty(cls) -> "SupportSet":
        return cls()

    @classmethod
    def integral(cls, nvars: int) -> "SupportSet":
        return cls([{(v, s): (Fraction(0), -INF, INF) for v in range(nvars) for s in (0, 1)}])

    def contains(self, key: Key) -> bool:
        if self.everything:
            return True
        for clause in self.clauses:
            ok = True
            for (v, s), (res, lo, hi) in clause.items():
                x = key[v][s]
                if not lo <= x <= hi or (res is not None and (x - res).denominator != 1):
                    ok = False
                    break
            if ok:
                return True
        return False


def restrict(a: Dist, S: SupportSet) -> Dist:
    coeffs = {k: v for k, v in a.coeffs.items() if S.contains(k)}
    return Dist(a.nvars, coeffs, a.order, a.window, a.support)


def residue(a: Dist, var: int = 0, sector: int = 0) -> Dist:
    """Coefficient of ``z_var^{-1}`` (``sector=1``: ``zbar_var^{-1}``).

    The variable stays in the key with that power reset to 0.
    """
    coeffs = {}
    for k, v in a.coeffs.items():
        if k[var][sector] == -1:
            ep = list(k[var])
            ep[sector] = Fraction(0)
            nk = list(k)
            nk[var] = ExpPair(*ep)
            coeffs[tuple(nk)] = v
    if a.window is None:
        return Dist(a.nvars, coeffs, a.order)
    win = Window(a.order, _shift_coords(a.window.bounds, a.order, var, sector, 1))
    sup = _shift_coords(a.support, a.order, var, sector, 1) if a.support else None
    return Dist(a.nvars, coeffs, a.order, win, sup)


def agree(a: Dist, b: Dist) -> list:
    """Keys in both windows where the coefficients differ.

    Each entry is ``(key, a_coeff, b_coeff)``.
    """
    a._check_nvars(b)
    bad = []
    for k in sorted(set(a.coeffs) | set(b.coeffs)):
        if a.knows(k) and b.knows(k):
            x, y = a.coeffs.get(k, Fraction(0)), b.coeffs.get(k, Fraction(0))
            if x != y:
                bad.append((k, x, y))
    return bad


def cross_difference(a: Dist, b: Dist) -> Dist:
    """``a - b`` for expansions in different regions, e.g. the formal delta
    ``(z-w)^-1 - (z-w)^-1_{w>z}``.  Exact on the meet of both windows; the
    result carries no sector and cannot be multiplied further."""
    a._check_nvars(b)
    parts = tuple(w for w in (a.window, b.window) if w is not None)
    meet = MeetWindow(parts)
    coeffs = {}
    for k in set(a.coeffs) | set(b.coeffs):
        if meet.contains(k):
            v = a.coeffs.get(k, 0) - b.coeffs.get(k, 0)
            if v:
                coeffs[k] = v
    return Dist(a.nvars, coeffs, None, meet if parts else None)


def to_text(a: Dist) -> str:
    """Canonical text: window line, then one ``powers coeff`` line per term."""
    if a.window is None:
        head = "window: complete"
    else:
        head = "window: " + a.window.describe()
    lines = [head]
    for k, v in sorted(a.coeffs.items()):
        mono = ";".join(str(e) for e in k)
        lines.append(f"{mono} {fmt(v)}")
    return "\n".join(lines)


def from_terms(nvars: int, terms: Iterable[Tuple[Sequence, object]]) -> Dist:
    return Dist.complete(nvars, {tuple(tuple(e) for e in k): v for k, v in terms})


def truncate(a: Dist, keep: Callable[[Key], bool]) -> Dist:
    return Dist(a.nvars, {k: v for k, v in a.coeffs.items() if keep(k)}, a.order, a.window, a.support)
