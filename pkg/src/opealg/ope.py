"""Operator product expansions of fields on graded state spaces.

For fields ``a, b``, a basis state ``v`` and an output weight ``W`` the
``W``-component of ``a(vz) b(vw) v`` is homogeneous: one power pair (the
power of ``vw`` in the ``z>w`` expansion, of ``vz`` in the ``w>z``
expansion) determines the monomial.  Everything below works on such lines
of vector coefficients keyed by one :class:`ExpPair`.

Locality of ``a, b`` on ``v`` within a window means: for a pole order
``vh``, the series ``(vz-vw)^vh a(vz)b(vw)v`` (expanded ``z>w``) and
``(vz-vw)^vh zeta b(vw)a(vz)v`` (expanded ``w>z``) agree on every coefficient
both expansions know, and the common value is a polynomial.  The window is
chosen so that both expansions cover the whole polynomial plus ``margin``
extra powers beyond it on each side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

from .backends import Field, GradedSpace, IdentityField, LinearField, Vector, ZeroField, vadd, vscale
from .distributions import INF, Dist, Window, Z_GT_W, agree, expand_pow, sector_order, truncate
from .linalg import SparseEchelon
from .scalars import (ExpPair, MINUS_ONE, ZERO, coset_of, coset_range, fmt, frac, gen_binom,
                      in_vbbk, int_sign, koszul_sign, pow_minus_one, supersign)
from .verdict import Verdict, fails, holds

ONE = ExpPair.of(1, 1)


class NotLocal(ArithmeticError):
    def __init__(self, message: str, counterexample: Optional[dict] = None):
        super().__init__(message)
        self.counterexample = counterexample or {}


class WindowTooSmall(ArithmeticError):
    pass


class Inconsistent(ArithmeticError):
    def __init__(self, message: str, counterexample: Optional[dict] = None):
        super().__init__(message)
        self.counterexample = counterexample or {}


# -- exponent helpers -------------------------------------------------------

def _ceil_to(x: Fraction, residue: Fraction) -> Fraction:
    """Least ``y >= x`` with ``y = residue (mod 1)``."""
    y = x + ((residue - x) - math.floor(residue - x))
    return y


def pole_bound(a: Field, b: Field) -> ExpPair:
    """Upper bound for the pole order of ``a, b``.

    A product ``a_(vn) b`` has weight ``wt a + wt b - vn - 1``, which must be
    nonnegative, so no pole exceeds ``wt a + wt b``.  The bound is moved up
    into the coset of ``a``'s modes, which makes ``(vz-vw)^vh a(vz)b(vw)``
    have integral powers of ``vz``.
    """
    h = a.weight + b.weight
    return ExpPair(_ceil_to(h.n, a.coset.n), _ceil_to(h.nbar, a.coset.nbar))


def _le(x: ExpPair, y: ExpPair) -> bool:
    return x.n <= y.n and x.nbar <= y.nbar


def _box(lo: ExpPair, hi: ExpPair, residue: ExpPair) -> Iterable[ExpPair]:
    for x in coset_range(lo.n, hi.n, residue.n):
        for y in coset_range(lo.nbar, hi.nbar, residue.nbar):
            yield ExpPair(x, y)


def _pin(lo: ExpPair, hi: ExpPair, sector: int, value):
    """Narrow the box to ``value`` in one sector; None if empty."""
    if not lo[sector] <= value <= hi[sector]:
        return None
    if sector == 0:
        return ExpPair(value, lo.nbar), ExpPair(value, hi.nbar)
    return ExpPair(lo.n, value), ExpPair(hi.n, value)


def pair_binom(e: ExpPair, k: ExpPair) -> Fraction:
    return gen_binom(e.n, int(k.n)) * gen_binom(e.nbar, int(k.nbar))


def _diff_kernel(vh: ExpPair, reach: ExpPair, sign: int = 1) -> Dict[ExpPair, Fraction]:
    """Coefficients ``binom(vh, k) (-1)^|k|`` of ``(1 - t)^vh`` for ``0 <= k <= reach``."""
    out = {}
    if reach.n < 0 or reach.nbar < 0:
        return out
    for k in range(int(math.floor(reach.n)) + 1):
        ck = gen_binom(vh.n, k)
        if not ck:
            continue
        for kb in range(int(math.floor(reach.nbar)) + 1):
            c = ck * gen_binom(vh.nbar, kb)
            if c:
                out[ExpPair.of(k, kb)] = sign * c * (-1) ** (k + kb)
    return out


def _convolve(series: Dict[ExpPair, Vector], kernel: Dict[ExpPair, Fraction], hi: ExpPair):
    out: Dict[ExpPair, Vector] = {}
    for j0, vec in series.items():
        for k, c in kernel.items():
            j = j0 + k
            if _le(j, hi):
                vadd(out.setdefault(j, {}), vec, c)
    return {j: v for j, v in out.items() if v}


# -- two-point series --------------------------------------------------------

def series_zw(a: Field, b: Field, v, W: ExpPair, jmax: ExpPair) -> Dict[ExpPair, Vector]:
    """Weight-``W`` part of ``a(vz) b(vw) v`` expanded ``z>w``, keyed by the
    power ``j`` of ``vw`` (the power of ``vz`` is ``T - j``) for ``j <= jmax``."""
    space = a.space
    dv = space.weight(v)
    T = W - dv - a.weight - b.weight
    lo, hi = -(dv + b.weight), jmax
    for flag, sector, value in ((b.chiral, 1, 0), (b.antichiral, 0, 0),
                                (a.chiral, 1, T.nbar), (a.antichiral, 0, T.n)):
        if flag:
            box = _pin(lo, hi, sector, value)
            if box is None:
                return {}
            lo, hi = box
    out = {}
    for j in _box(lo, hi, coset_of(-b.coset)):
        x = b.act_key((-j.n - 1, -j.nbar - 1), v)
        if not x:
            continue
        y = a.act((j.n - T.n - 1, j.nbar - T.nbar - 1), x)
        if y:
            out[j] = y
    return out


def series_wz(a: Field, b: Field, v, W: ExpPair, imax: ExpPair) -> Dict[ExpPair, Vector]:
    """Weight-``W`` part of ``zeta b(vw) a(vz) v`` expanded ``w>z``, keyed by
    the power ``i`` of ``vz`` for ``i <= imax``."""
    space = a.space
    dv = space.weight(v)
    T = W - dv - a.weight - b.weight
    lo, hi = -(dv + a.weight), imax
    for flag, sector, value in ((a.chiral, 1, 0), (a.antichiral, 0, 0),
                                (b.chiral, 1, T.nbar), (b.antichiral, 0, T.n)):
        if flag:
            box = _pin(lo, hi, sector, value)
            if box is None:
                return {}
            lo, hi = box
    zeta = supersign(a.parity, b.parity)
    out = {}
    for i in _box(lo, hi, coset_of(-a.coset)):
        y = a.act_key((-i.n - 1, -i.nbar - 1), v)
        if not y:
            continue
        x = b.act((i.n - T.n - 1, i.nbar - T.nbar - 1), y)
        if x:
            out[i] = vscale(x, zeta)
    return out


def compare_lines(P1: Dict[ExpPair, Vector], J1: ExpPair, P2: Dict[ExpPair, Vector],
                  I2: ExpPair, S: ExpPair):
    """First disagreement between two expansions of one homogeneous line.

    ``P1`` is keyed by the second variable's power (known up to ``J1``),
    ``P2`` by the first variable's power (known up to ``I2``); the powers
    of a monomial add up to ``S``.  Returns ``(j, P1[j], P2[S-j])`` or None.
    """
    keys = set(P1) | {S - i for i in P2}
    for j in sorted(keys):
        if _le(j, J1) and _le(S - j, I2):
            x, y = P1.get(j, {}), P2.get(S - j, {})
            if x != y:
                return j, x, y
    return None


@dataclass
class LineData:
    """Certified polynomial ``(vz-vw)^vh F`` on one (state, weight) line."""

    v: Hashable
    W: ExpPair
    vh: ExpPair
    S: ExpPair  # total power pair
    poly: Dict[ExpPair, Vector]  # keyed by the power of vw


def certify_line(a: Field, b: Field, v, W: ExpPair, vh: ExpPair, margin: int):
    """Returns (LineData, None) or (None, counterexample)."""
    dv = a.space.weight(v)
    T = W - dv - a.weight - b.weight
    m = ExpPair.of(margin, margin)
    jmax = W + vh - b.weight
    imax = W + vh - a.weight
    f = series_zw(a, b, v, W, jmax + m)
    g = series_wz(a, b, v, W, imax + m)
    lo_w, lo_z = -(dv + b.weight), -(dv + a.weight)
    P1 = _convolve(f, _diff_kernel(vh, jmax + m - lo_w), jmax + m)
    P2 = _convolve(g, _diff_kernel(vh, imax + m - lo_z, int_sign(vh)), imax + m)
    S = T + vh
    bad = compare_lines(P1, jmax + m, P2, imax + m, S)
    if bad is not None:
        j, x, y = bad
        return None, {"state": v, "weight": str(W), "vh": str(vh),
                      "monomial": f"z^{S - j} w^{j}", "z>w": x, "w>z": y}
    poly = {j: vec for j, vec in P1.items() if _le(j, jmax)}
    return LineData(v, W, vh, S, poly), None


def divide_line(poly: Dict[ExpPair, Vector], sector: int):
    """Quotient of a line polynomial by ``(vz-vw)`` in one sector, or None."""
    groups: Dict[Fraction, List[ExpPair]] = {}
    for j in poly:
        groups.setdefault(j[1 - sector], []).append(j)
    out: Dict[ExpPair, Vector] = {}
    for other, js in groups.items():
        lo = min(j[sector] for j in js)
        hi = max(j[sector] for j in js)
        acc: Vector = {}
        x = lo
        while x <= hi:
            j = ExpPair(x, other) if sector == 0 else ExpPair(other, x)
            vadd(acc, poly.get(j, {}))
            if acc:
                out[j] = dict(acc)
            x += 1
        if acc:
            return None
    return out


def _sector_unit(sector: int) -> ExpPair:
    return ExpPair.of(1, 0) if sector == 0 else ExpPair.of(0, 1)


def reduce_line(line: LineData) -> Optional[LineData]:
    """Divide out ``(vz-vw)`` as long as possible; None for a zero line."""
    if not line.poly:
        return None
    poly, vh, S = line.poly, line.vh, line.S
    for sector in (0, 1):
        while True:
            q = divide_line(poly, sector)
            if q is None:
                break
            poly, vh, S = q, vh - _sector_unit(sector), S - _sector_unit(sector)
            if not poly:
                return None
    return LineData(line.v, line.W, vh, S, poly)


def lower_line(line: LineData, vh: ExpPair) -> LineData:
    """Re-express a reduced line with the (larger) pole order ``vh``."""
    poly, S = line.poly, line.S
    for sector in (0, 1):
        for _ in range(int(vh[sector] - line.vh[sector])):
            # multiply by (vz - vw): P_j -> P_j - P_{j-1}
            e = _sector_unit(sector)
            new: Dict[ExpPair, Vector] = {}
            for j, vec in poly.items():
                vadd(new.setdefault(j, {}), vec)
                vadd(new.setdefault(j + e, {}), vec, -1)
            poly = {j: v for j, v in new.items() if v}
            S = S + e
    return LineData(line.v, line.W, vh, S, poly)


# -- reduced OPEs -------------------------------------------------------------

@dataclass
class OpeTerm:
    """One term ``c(vz, vw) / (vz - vw)^vh``.

    ``c`` maps each basis state to ``{(power of vz, power of vw): vector}``.
    """

    vh: ExpPair
    c: Dict[Hashable, Dict[Tuple[ExpPair, ExpPair], Vector]]

    def dist(self, v, u) -> Dist:
        """The ``u``-component of ``c(vz, vw) v`` as a complete distribution."""
        coeffs = {}
        for (zp, wp), vec in self.c.get(v, {}).items():
            if vec.get(u):
                coeffs[(zp, wp)] = vec[u]
        return Dist.complete(2, coeffs)


@dataclass
class ReducedOpe:
    a: Field
    b: Field
    terms: List[OpeTerm]
    window: Dict[str, object]

    def to_text(self) -> str:
        space = self.a.space
        lines = [f"ope {self.a.name or '?'} {self.b.name or '?'}  parity {self.a.parity}{self.b.parity}"
                 f"  window {' '.join(f'{k}={self.window[k]}' for k in sorted(self.window))}"]
        if not self.terms:
            lines.append("  (no singular or regular terms on the window)")
        for t in self.terms:
            lines.append(f"term vh={t.vh}")
            for v in space.sort_keys(t.c):
                for (zp, wp) in sorted(t.c[v]):
                    vec = t.c[v][(zp, wp)]
                    lines.append(f"  {space.label(v)}: z^{zp} w^{wp} -> {space.describe_vector(vec)}")
        return "\n".join(lines)


def extract_reduced_ope(a: Field, b: Field, L, margin: int = 2, extra: int = 2) -> ReducedOpe:
    """Reduced OPE of ``a, b`` on the basis of weight ``<= L``.

    Every (state, output weight) line is certified in both orderings; the
    pole order is then lowered as far as every line allows.
    """
    space = a.space
    basis = space.basis(L)
    weights = space.weights(L)
    H0 = pole_bound(a, b)
    if not in_vbbk(H0):
        raise NotLocal(f"pole bound {H0} is not in vbbK")
    lines: List[LineData] = []
    last = None
    for e in range(extra + 1):
        H = H0 + ExpPair.of(e, e)
        lines, last = [], None
        for v in basis:
            for W in weights:
                line, ce = certify_line(a, b, v, W, H, margin)
                if ce is not None:
                    last = ce
                    break
                lines.append(line)
            if last is not None:
                break
        if last is None:
            break
    if last is not None:
        raise NotLocal(f"{a.name}, {b.name} are not local within the window",
                       counterexample=_printable(space, last))
    reduced = [r for r in (reduce_line(x) for x in lines) if r is not None]
    window = {"L": fmt(frac(L)), "margin": margin}
    if not reduced:
        return ReducedOpe(a, b, [], window)
    vh = ExpPair(max(r.vh.n for r in reduced), max(r.vh.nbar for r in reduced))
    c: Dict[Hashable, Dict] = {}
    for r in reduced:
        r = lower_line(r, vh)
        dest = c.setdefault(r.v, {})
        for j, vec in r.poly.items():
            dest[(r.S - j, j)] = vec
    return ReducedOpe(a, b, [OpeTerm(vh, c)], window)


def _printable(space: GradedSpace, ce: dict) -> dict:
    out = {}
    for k, x in ce.items():
        if isinstance(x, dict):
            out[k] = space.describe_vector(x)
        elif k == "state":
            out[k] = space.label(x)
        else:
            out[k] = str(x) if not isinstance(x, (int, str)) else x
    return out


def two_point_dist(a: Field, b: Field, v, u, sector=Z_GT_W, depth: int = 6) -> Dist:
    """The ``u``-component of ``a(vz)b(vw)v`` (``z>w``) or of
    ``zeta b(vw)a(vz)v`` (``w>z``) as a windowed distribution."""
    space = a.space
    sector = sector_order(sector)
    dv, W = space.weight(v), space.weight(u)
    T = W - dv - a.weight - b.weight
    d = ExpPair.of(depth, depth)
    coeffs = {}
    if sector == Z_GT_W:
        lo = -(dv + b.weight)
        for j, vec in series_zw(a, b, v, W, lo + d).items():
            if vec.get(u):
                coeffs[(T - j, j)] = vec[u]
        hi = lo + d
    else:
        lo = -(dv + a.weight)
        for i, vec in series_wz(a, b, v, W, lo + d).items():
            if vec.get(u):
                coeffs[(i, T - i)] = vec[u]
        hi = lo + d
    order = tuple(sector)
    win = Window(order, ((-INF, INF), (-INF, hi.n), (-INF, INF), (-INF, hi.nbar)))
    sup = ((T.n, T.n), (lo.n, INF), (T.nbar, T.nbar), (lo.nbar, INF))
    clean = {k: x for k, x in coeffs.items() if x}
    return Dist(2, clean, order, win, sup)


# -- scalar extraction ----------------------------------------------------------

def _degree_coset(key) -> ExpPair:
    return coset_of(key[0] + key[1])


def _degree_cosets(*dists: Dist) -> List[ExpPair]:
    return sorted({_degree_coset(k) for d in dists for k in d.coeffs})


def _lower(d: Dist, coord: int):
    return d.support[coord][0] if d.support else -INF


def extract_scalar_ope(s_zw: Dist, s_wz: Dist, depth: int = 6, search: int = 8,
                       hint: Sequence = ()) -> List[Tuple[ExpPair, Dist]]:
    """Recover ``[(vh_i, c^i)]`` from both expansions of
    ``sum_i c^i(vz, vw) / (vz - vw)^vh_i`` with polynomial ``c^i``.

    Terms are separated by the coset of the total degree, which is the
    same in both expansions; in each coset the pole order is the least
    ``vh`` (in the coset that makes ``c`` have integral total degree) for
    which both expansions of ``(vz-vw)^vh`` times the input agree and are
    polynomial.
    """
    out = []
    cosets = sorted(set(_degree_cosets(s_zw, s_wz)) | {coset_of(-ExpPair.of(*h)) for h in hint})
    for kappa in cosets:
        part_zw = truncate(s_zw, lambda k: _degree_coset(k) == kappa)
        part_wz = truncate(s_wz, lambda k: _degree_coset(k) == kappa)
        if part_zw.is_zero() and part_wz.is_zero():
            continue
        res = coset_of(-kappa)
        # c has total degree >= (least vz power) + (least vw power), and the
        # least total degree of the input is that minus vh
        start = []
        for s in (0, 1):
            lw = _lower(part_zw, 2 * s + 1)
            lz = _lower(part_wz, 2 * s + 1)
            d_lo = min((k[0][s] + k[1][s] for k in part_zw.coeffs), default=0)
            g = (lw if lw != -INF else 0) + (lz if lz != -INF else 0) - d_lo
            start.append(_ceil_to(frac(g), res[s]))
        found = None
        for total in range(2 * search + 1):
            for k in range(total + 1):
                kb = total - k
                if k > search or kb > search:
                    continue
                vh = ExpPair(start[0] + k, start[1] + kb)
                c = _scalar_certify(part_zw, part_wz, vh, depth)
                if c is not None:
                    found = (vh, c)
                    break
            if found:
                break
        if found is None:
            raise NotLocal(f"no pole order certified in coset {kappa}")
        vh, c = found
        vh, c = _reduce_scalar(vh, c)
        if not c.is_zero():
            out.append((vh, c))
    return out


def _kernel_depth(d: Dist, fallback: int):
    """Expansion depth that does not narrow the window of ``d``."""
    out = []
    for s in (0, 1):
        hi = d.window.bounds[2 * s + 1][1] if d.window is not None else INF
        lo = _lower(d, 2 * s + 1)
        out.append(int(math.floor(hi - lo)) if hi != INF and lo != -INF else fallback)
    return tuple(max(x, 0) for x in out)


def _scalar_certify(part_zw: Dist, part_wz: Dist, vh: ExpPair, depth: int) -> Optional[Dist]:
    p_zw = part_zw * expand_pow(vh, "z>w", _kernel_depth(part_zw, depth))
    p_wz = part_wz * expand_pow(vh, "w>z", _kernel_depth(part_wz, depth))
    if agree(p_zw, p_wz):
        return None
    lo_z = [_lower(p_wz, 2 * s + 1) for s in (0, 1)]
    lo_w = [_lower(p_zw, 2 * s + 1) for s in (0, 1)]
    for k in p_zw.coeffs:
        if k[0].n < lo_z[0] or k[0].nbar < lo_z[1]:
            return None
    for k in p_wz.coeffs:
        if k[1].n < lo_w[0] or k[1].nbar < lo_w[1]:
            return None
    coeffs = dict(p_wz.coeffs)
    coeffs.update(p_zw.coeffs)
    return Dist.complete(2, coeffs)


def _reduce_scalar(vh: ExpPair, c: Dist) -> Tuple[ExpPair, Dist]:
    """Divide ``c`` by ``(vz - vw)`` per sector while possible."""
    for sector in (0, 1):
        while c.coeffs:
            groups: Dict[tuple, Dict[Fraction, Fraction]] = {}
            for (z, w), x in c.coeffs.items():
                other = (z[1 - sector], w[1 - sector], z[sector] + w[sector])
                groups.setdefault(other, {})[w[sector]] = x
            new = {}
            ok = True
            for (zo, wo, tot), line in groups.items():
                acc = Fraction(0)
                j = min(line)
                top = max(line)
                while j <= top:
                    acc += line.get(j, 0)
                    if acc:
                        zs, ws = tot - 1 - j, j
                        if sector == 0:
                            key = (ExpPair(zs, zo), ExpPair(ws, wo))
                        else:
                            key = (ExpPair(zo, zs), ExpPair(wo, ws))
                        new[key] = acc
                    j += 1
                if acc:
                    ok = False
                    break
            if not ok:
                break
            c = Dist.complete(2, new)
            vh = vh - _sector_unit(sector)
    return vh, c


# -- products -----------------------------------------------------------------

def _pair(sector: int, x, other) -> ExpPair:
    return ExpPair.of(x, other) if sector == 0 else ExpPair.of(other, x)


def _product_name(a: Field, vn: ExpPair, b: Field) -> str:
    return f"{a.name or '?'}_{vn}{b.name or '?'}"


class ResidueProductField(Field):
    """``a_(vn) b`` for a chiral (``sector=0``) or antichiral (``sector=1``)
    field ``a``, from the commutator residue formula

    ``(a_(n) b)_(k) = sum_i (-1)^i C(n, i) [a_(n-i) b_(k+i) - zeta (-1)^n b_(k+n-i) a_(i)]``.
    """

    def __init__(self, a: Field, vn: ExpPair, b: Field, sector: int):
        weight = a.weight + b.weight - vn - ONE
        super().__init__(a.space, weight, a.parity + b.parity, _product_name(a, vn, b),
                         a.chiral and b.chiral, a.antichiral and b.antichiral, b.coset)
        self.a, self.b, self.vn, self.sector = a, b, vn, sector
        self.n = int(vn[sector])
        self.zeta = supersign(a.parity, b.parity)

    def _act(self, vk, v):
        a, b, n, s = self.a, self.b, self.n, self.sector
        k, ko = vk[s], vk[1 - s]
        dv = self.space.weight(v)
        bound1 = dv[s] + b.weight[s] - 1 - k
        bound2 = dv[s] + a.weight[s] - 1
        top = max(bound1, bound2)
        if n >= 0:
            top = min(top, n)
        sign2 = -self.zeta * pow_minus_one(n)
        out: Vector = {}
        for i in range(int(math.floor(top)) + 1):
            c = gen_binom(n, i)
            if not c:
                continue
            if i % 2:
                c = -c
            if i <= bound1:
                x = b.act_key(_pair(s, k + i, ko), v)
                if x:
                    vadd(out, a.act(_pair(s, n - i, -1), x), c)
            if i <= bound2:
                y = a.act_key(_pair(s, i, -1), v)
                if y:
                    vadd(out, b.act(_pair(s, k + n - i, ko), y), c * sign2)
        return out


class OpeProductField(Field):
    """``a_(vn) b = sum d_vz^{(vh-1-vn)} ((vz-vw)^vh a(vz)b(vw))|_{vz=vw}``,
    computed from the ``z>w`` expansion with ``vh`` the pole bound."""

    def __init__(self, a: Field, vn: ExpPair, b: Field):
        weight = a.weight + b.weight - vn - ONE
        super().__init__(a.space, weight, a.parity + b.parity, _product_name(a, vn, b),
                         a.chiral and b.chiral, a.antichiral and b.antichiral,
                         coset_of(a.coset + b.coset))
        self.a, self.b, self.vn = a, b, vn
        self.H = pole_bound(a, b)
        self.K = self.H - ONE - vn

    def _act(self, vk, v):
        K = self.K
        if not K.is_natural():
            return {}
        a, b, H = self.a, self.b, self.H
        dv = self.space.weight(v)
        W = dv + self.weight - vk - ONE
        if W.n < 0 or W.nbar < 0:
            return {}
        T = W - dv - a.weight - b.weight
        jmax = W + H - b.weight
        lo_w = -(dv + b.weight)
        f = series_zw(a, b, v, W, jmax)
        P = _convolve(f, _diff_kernel(H, jmax - lo_w), jmax)
        S = T + H
        out: Vector = {}
        for j, vec in P.items():
            c = pair_binom(S - j, K)
            if c:
                vadd(out, vec, c)
        return out


_PRODUCTS: Dict[tuple, Tuple[Field, Field, Field]] = {}


def general_product(a: Field, vn, b: Field, method: str = "auto") -> Field:
    """The field ``a(vz)_(vn) b(vz)``.

    ``method`` is ``"residue"`` (needs ``a`` chiral or antichiral),
    ``"ope"`` (from the two-point expansion), or ``"auto"``: the residue
    route whenever ``a`` is chiral or antichiral.
    """
    vn = ExpPair.of(*vn)
    key = (id(a), id(b), vn, method)
    hit = _PRODUCTS.get(key)
    if hit is not None:
        return hit[2]
    weight = a.weight + b.weight - vn - ONE
    parity = (a.parity + b.parity) % 2
    route = method
    if route == "auto":
        route = "residue" if (a.chiral or a.antichiral) else "ope"
    if weight.n < 0 or weight.nbar < 0:
        out: Field = ZeroField(a.space, (max(weight.n, 0), max(weight.nbar, 0)), parity,
                               _product_name(a, vn, b))
    elif route == "residue":
        if a.chiral and vn.nbar == -1 and vn.n.denominator == 1:
            out = ResidueProductField(a, vn, b, 0)
        elif a.antichiral and vn.n == -1 and vn.nbar.denominator == 1:
            out = ResidueProductField(a, vn, b, 1)
        elif a.chiral or a.antichiral:
            out = ZeroField(a.space, weight, parity, _product_name(a, vn, b))
        else:
            raise ValueError("the residue route needs a chiral or antichiral left field")
    elif route == "ope":
        out = OpeProductField(a, vn, b)
    else:
        raise ValueError(f"unknown product method {method!r}")
    _PRODUCTS[key] = (a, b, out)
    return out


def holomorphic_product(a: Field, n: int, b: Field) -> Field:
    """``a(w)_(n) b(vw) = res_z (z-w)^n [a(z), b(vw)]`` for chiral ``a``."""
    if not a.chiral:
        raise ValueError("holomorphic_product needs a chiral left field")
    return general_product(a, (n, -1), b, method="residue")


# -- locality order -------------------------------------------------------------

def _locality_defect(a: Field, b: Field, N: int, sector: int, basis, weights, margin: int):
    space = a.space
    s, o = sector, 1 - sector
    zeta = supersign(a.parity, b.parity)
    for v in basis:
        dv = space.weight(v)
        for W in weights:
            total = dv[s] + a.weight[s] + b.weight[s] - 2 - W[s] - N
            q_o = dv[o] + a.weight[o] + b.weight[o] - 1 - W[o]
            if coset_of((q_o, q_o))[0] != b.coset[o]:
                continue
            q_lo = b.weight[s] - 1 - W[s] - N - margin
            q_hi = dv[s] + b.weight[s] - 1 + margin
            for q in coset_range(q_lo, q_hi, b.coset[s]):
                p = total - q
                if p.denominator != 1:
                    continue
                acc: Vector = {}
                for i in range(N + 1):
                    c = gen_binom(N, i) * (-1) ** i
                    am = _pair(s, p + N - i, -1)
                    bm = _pair(s, q + i, q_o)
                    vadd(acc, a.act(am, b.act_key(bm, v)), c)
                    vadd(acc, b.act(bm, a.act_key(am, v)), -c * zeta)
                if acc:
                    return {"state": space.label(v), "N": N, "p": fmt(p), "q": str(_pair(s, q, q_o)),
                            "value": space.describe_vector(acc)}
    return None


def locality_order(a: Field, b: Field, L, margin: int = 2, nmax: Optional[int] = None) -> int:
    """Least ``N >= 0`` with ``(z-w)^N [a(z), b(vw)] = 0`` on the window.

    The window is every basis state of weight ``<= L``, every output weight
    ``<= L`` and a band of ``margin`` extra mode indices on each side of the
    range where both orderings can act.
    """
    if a.chiral:
        sector = 0
    elif a.antichiral:
        sector = 1
    else:
        raise ValueError("locality_order needs a chiral or antichiral left field")
    space = a.space
    basis, weights = space.basis(L), space.weights(L)
    if nmax is None:
        nmax = int(math.floor(pole_bound(a, b)[sector])) + 2
    last = None
    for N in range(max(nmax, 0) + 1):
        last = _locality_defect(a, b, N, sector, basis, weights, margin)
        if last is None:
            return N
    raise NotLocal(f"{a.name}, {b.name}: no locality order <= {nmax}", counterexample=last)


# -- field maps ---------------------------------------------------------------------

class YMap:
    """State-field correspondence ``a -> a(vz)`` on a graded space.

    The default builder writes a basis state as generator modes applied to
    the vacuum and nests the corresponding products, so
    ``Y(a^1_vn1 ... a^r_vnr 1) = a^1_(vn1)( ... (a^r_(vnr) 1(vz)))``.
    """

    def __init__(self, space: GradedSpace, table: Optional[Dict[Hashable, Field]] = None,
                 builder=None):
        self.space = space
        self.table: Dict[Hashable, Field] = dict(table or {})
        self._builder = builder if builder is not None else self._from_modes

    def _from_modes(self, key) -> Field:
        f: Field = self.space.identity
        for g, vn in reversed(self.space.key_modes(key)):
            f = general_product(g, vn, f)
        f.name = self.space.label(key)
        return f

    def __call__(self, key) -> Field:
        f = self.table.get(key)
        if f is None:
            f = self._builder(key)
            self.table[key] = f
        return f

    def act(self, state: Vector, vn, target: Vector) -> Vector:
        """``Y(state)_vn target`` for a (possibly inhomogeneous) vector."""
        out: Vector = {}
        for k, c in state.items():
            vadd(out, self(k).act(vn, target), c)
        return out

    def of_vector(self, vec: Vector) -> Field:
        if not vec:
            return ZeroField(self.space)
        terms = [(c, self(k)) for k, c in sorted(vec.items(), key=lambda kv: repr(kv[0]))]
        return terms[0][1] if len(terms) == 1 and terms[0][0] == 1 else LinearField(terms)


# -- fingerprints and closure -----------------------------------------------------

def fingerprint(f: Field, L) -> Vector:
    """All matrix elements of ``f`` between basis states of weight ``<= L``."""
    space = f.space
    out: Vector = {}
    weights = space.weights(L)
    for v in space.basis(L):
        dv = space.weight(v)
        for W in weights:
            vk = dv + f.weight - ONE - W
            for u, c in f.act_key(vk, v).items():
                out[(v, vk, u)] = c
    return out


@dataclass
class Closure:
    fields: List[Field]
    fingerprints: List[Vector]
    verdict: Verdict
    explored: int = 0


def _product_exponents(a: Field, b: Field, L) -> List[ExpPair]:
    """Exponents ``vn`` with ``a_(vn) b`` of weight in ``[0, L]``, most
    singular first."""
    L = frac(L)
    top = a.weight + b.weight - ONE
    out = []
    if a.chiral:
        ns = [(n, Fraction(-1)) for n in coset_range(top.n - L, top.n, a.coset.n)]
    elif a.antichiral:
        ns = [(Fraction(-1), n) for n in coset_range(top.nbar - L, top.nbar, a.coset.nbar)]
    else:
        ns = [(x, y) for x in coset_range(top.n - L, top.n, a.coset.n)
              for y in coset_range(top.nbar - L, top.nbar, a.coset.nbar)]
    for n, nb in ns:
        vn = ExpPair(n, nb)
        w = top - vn
        if w.n >= 0 and w.nbar >= 0 and w.n + w.nbar <= L:
            out.append(vn)
    return sorted(out, key=lambda e: (-(e.n + e.nbar), -e.n))


def check_pair_locality(a: Field, b: Field, L, margin: int = 2) -> Optional[dict]:
    """None if ``a, b`` are local on the window, else a counterexample."""
    try:
        if a.chiral or a.antichiral:
            locality_order(a, b, L, margin)
        else:
            extract_reduced_ope(a, b, L, margin)
    except NotLocal as exc:
        return dict(exc.counterexample)
    return None


def dong_closure(S: Sequence[Field], L, margin: int = 2, verify: bool = True,
                 space: Optional[GradedSpace] = None) -> Closure:
    """Least set of fields containing ``S`` and ``1(vz)``, closed under the
    products ``a_(vn) b`` of weight ``<= L``, kept as a linearly independent
    list (independence measured on all matrix elements of weight ``<= L``).
    """
    if space is None:
        if not S:
            raise ValueError("dong_closure needs a space when S is empty")
        space = S[0].space
    fields: List[Field] = []
    fps: List[Vector] = []
    span = SparseEchelon()

    def add(f: Field) -> bool:
        fp = fingerprint(f, L)
        if not span.add(fp):
            return False
        fields.append(f)
        fps.append(fp)
        return True

    add(space.identity)
    for f in S:
        add(f)
    done = set()
    explored = 0
    changed = True
    while changed:
        changed = False
        n = len(fields)
        for i in range(n):
            for j in range(n):
                if (i, j) in done:
                    continue
                done.add((i, j))
                for vn in _product_exponents(fields[i], fields[j], L):
                    explored += 1
                    if add(general_product(fields[i], vn, fields[j])):
                        changed = True
    window = {"L": fmt(frac(L)), "margin": margin, "fields": len(fields)}
    log = [f.name for f in fields]
    if verify:
        # locality is symmetric in the pair, so unordered pairs suffice
        for i, a in enumerate(fields):
            for b in fields[i:]:
                ce = check_pair_locality(a, b, L, margin)
                if ce is not None:
                    ce = dict(ce, pair=f"{a.name} | {b.name}")
                    return Closure(fields, fps, fails("dong-closure-locality", ce, window, log), explored)
    return Closure(fields, fps, holds("dong-closure-locality", window, log), explored)


# -- multiple locality --------------------------------------------------------------

@dataclass
class MultiOpeTerm:
    """``c(vz_1, ..., vz_r) / prod_{i<j} (vz_i - vz_j)^{vh_ij}``; ``c`` maps a
    basis state to ``{powers: vector}``."""

    alpha: Tuple[int, ...]
    exponents: Dict[Tuple[int, int], ExpPair]
    c: Dict[Hashable, Dict[Tuple[ExpPair, ...], Vector]]


def _poly_mul(p: Dict[tuple, Fraction], q: Dict[tuple, Fraction]) -> Dict[tuple, Fraction]:
    out: Dict[tuple, Fraction] = {}
    for k1, c1 in p.items():
        for k2, c2 in q.items():
            k = tuple(x + y for x, y in zip(k1, k2))
            out[k] = out.get(k, 0) + c1 * c2
    return {k: c for k, c in out.items() if c}


def _difference_power(r: int, i: int, j: int, h: ExpPair) -> Dict[tuple, Fraction]:
    """``(vz_i - vz_j)^h`` for natural ``h`` as a polynomial."""
    out = {}
    for k in range(int(h.n) + 1):
        for kb in range(int(h.nbar) + 1):
            key = [ZERO] * r
            key[i] = ExpPair.of(int(h.n) - k, int(h.nbar) - kb)
            key[j] = ExpPair.of(k, kb)
            out[tuple(key)] = gen_binom(h.n, k) * gen_binom(h.nbar, kb) * (-1) ** (k + kb)
    return out


def _ordered_series(fields: Sequence[Field], sigma: Sequence[int], v, W: ExpPair,
                    hi: Sequence[ExpPair], sign: int) -> Dict[tuple, Vector]:
    """``sign * a^{s1}(z_{s1}) ... a^{sr}(z_{sr}) v`` in the region
    ``|z_{s1}| > ... > |z_{sr}|``, weight-``W`` part, keyed by the powers in
    the original variable order; suffix sums of powers at position ``p``
    are at most ``hi[p]``."""
    space = fields[0].space
    r = len(fields)
    dv = space.weight(v)
    T = W - dv
    for f in fields:
        T = T - f.weight
    out: Dict[tuple, Vector] = {}

    def rec(p: int, state: Vector, wt: ExpPair, powers: Dict[int, ExpPair], suffix: ExpPair):
        f = fields[sigma[p]]
        if p == 0:
            e = T - suffix
            y = f.act((-e.n - 1, -e.nbar - 1), state)
            if y:
                powers[sigma[0]] = e
                key = tuple(powers[i] for i in range(r))
                vadd(out.setdefault(key, {}), y, sign)
            return
        lo = -(wt + f.weight)
        top = hi[p] - suffix
        if f.chiral:
            box = _pin(lo, top, 1, 0)
        elif f.antichiral:
            box = _pin(lo, top, 0, 0)
        else:
            box = (lo, top)
        if box is None:
            return
        for e in _box(box[0], box[1], coset_of(-f.coset)):
            y = f.act((-e.n - 1, -e.nbar - 1), state)
            if y:
                powers[sigma[p]] = e
                rec(p - 1, y, wt + f.weight + e, powers, suffix + e)
        powers.pop(sigma[p], None)

    rec(r - 1, {v: Fraction(1)}, dv, {}, ZERO)
    return {k: x for k, x in out.items() if x}


def verify_multiple_locality(fields: Sequence[Field], L, margin: int = 4) -> Verdict:
    """Check that all ``r!`` orderings of ``a^1(vz_1) ... a^r(vz_r) v`` (with
    Koszul signs) become one polynomial after multiplying by
    ``prod_{i<j} (vz_i - vz_j)^{vh_ij}``, for every basis state of weight
    ``<= L`` and output weight ``<= L``.

    Pair exponents are the pole bounds, which must be natural.
    """
    r = len(fields)
    name = "multiple-locality"
    if not 1 <= r <= 3:
        raise ValueError("multiple locality is implemented for 1 <= r <= 3")
    space = fields[0].space
    exps = {}
    K: Dict[tuple, Fraction] = {tuple([ZERO] * r): Fraction(1)}
    for i in range(r):
        for j in range(i + 1, r):
            h = pole_bound(fields[i], fields[j])
            if not h.is_natural():
                raise ValueError(f"pair exponent {h} is not natural")
            exps[(i, j)] = h
            K = _poly_mul(K, _difference_power(r, i, j, h))
    degK = sum((h for h in exps.values()), ZERO)
    parities = [f.parity for f in fields]
    orders = list(permutations(range(r)))
    m = ExpPair.of(margin, margin)
    window = {"L": fmt(frac(L)), "margin": margin, "orderings": len(orders)}
    log: List[str] = []
    c_data: Dict[Hashable, Dict] = {}
    for v in space.basis(L):
        dv = space.weight(v)
        for W in space.weights(L):
            S = W - dv + degK
            for f in fields:
                S = S - f.weight
            floor_ = [-(dv + f.weight) for f in fields]
            polys = []
            for sigma in orders:
                hi = []
                for p in range(r):
                    acc = S
                    for q in range(p):
                        acc = acc + dv + fields[sigma[q]].weight
                    hi.append(acc + m)
                F = _ordered_series(fields, sigma, v, W, hi, koszul_sign(sigma, parities))
                P: Dict[tuple, Vector] = {}
                for e0, vec in F.items():
                    for kap, c in K.items():
                        e = tuple(x + y for x, y in zip(e0, kap))
                        if _known(e, sigma, hi):
                            vadd(P.setdefault(e, {}), vec, c)
                P = {e: x for e, x in P.items() if x}
                for e, vec in P.items():
                    if any(not _le(floor_[i], e[i]) for i in range(r)):
                        ce = {"state": space.label(v), "ordering": str(sigma),
                              "powers": ";".join(str(x) for x in e), "value": space.describe_vector(vec),
                              "reason": "not a polynomial"}
                        return fails(name, ce, window, log)
                polys.append((sigma, hi, P))
            base_sigma, base_hi, base = polys[0]
            for sigma, hi, P in polys[1:]:
                for e in sorted(set(P) | set(base)):
                    if _known(e, sigma, hi) and _known(e, base_sigma, base_hi):
                        if P.get(e, {}) != base.get(e, {}):
                            ce = {"state": space.label(v), "ordering": str(sigma),
                                  "powers": ";".join(str(x) for x in e),
                                  "value": space.describe_vector(P.get(e, {})),
                                  "expected": space.describe_vector(base.get(e, {}))}
                            return fails(name, ce, window, log)
            if base:
                c_data.setdefault(v, {}).update(base)
            log.append(f"{space.label(v)} W={W}")
    term = MultiOpeTerm(tuple(0 for _ in exps), exps, c_data)
    return holds(name, window, log, terms=[term])


def _known(e: tuple, sigma: Sequence[int], hi: Sequence[ExpPair]) -> bool:
    r = len(sigma)
    acc = ZERO
    for p in range(r - 1, 0, -1):
        acc = acc + e[sigma[p]]
        if not _le(acc, hi[p]):
            return False
    return True
