"""Verdict-producing checks of the OPE-algebra axioms and their consequences.

States are basis keys of a :class:`GradedSpace`; ``Y`` is a state-field map
(:class:`YMap`).  Every check quantifies over an explicit window (basis
states of bounded weight, output weights, a margin of extra powers) and
returns a :class:`Verdict` whose failing form carries a counterexample.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

from .backends import Field, GradedSpace, LinearField, Vector, translate_power, vadd, vscale
from .linalg import SparseEchelon, nullspace, solve_in_span, vectors_to_rows
from .ope import (ONE, NotLocal, YMap, _box, _ceil_to, _le, check_pair_locality, compare_lines,
                  dong_closure, fingerprint, general_product, holomorphic_product, pair_binom,
                  series_zw, verify_multiple_locality)
from .scalars import (ExpPair, MINUS_ONE, NotInVbbK, ZERO, coset_of, fmt, frac, in_vbbk, int_sign,
                      supersign)
from .verdict import FAILS, HOLDS, Verdict, fails, holds


class NotDual(ArithmeticError):
    def __init__(self, message: str, counterexample: Optional[dict] = None):
        super().__init__(message)
        self.counterexample = counterexample or {}


class NotSpanning(ArithmeticError):
    def __init__(self, message: str, counterexample: Optional[dict] = None):
        super().__init__(message)
        self.counterexample = counterexample or {}


class Inconsistent(ArithmeticError):
    def __init__(self, message: str, counterexample: Optional[dict] = None):
        super().__init__(message)
        self.counterexample = counterexample or {}


def _desc(space: GradedSpace, vec: Vector) -> str:
    return space.describe_vector(vec)


def _naturals(hi: ExpPair) -> Iterable[ExpPair]:
    """Natural pairs ``k <= hi``."""
    return _box(ZERO, hi, ZERO)


# -- creativity, translation covariance, completeness ------------------------

def check_creativity(a: Field, L) -> Verdict:
    """``a(vz)1 = e^{vz vT} s_1 a(vz)``: ``a_(-1-i,-1-ibar) 1 = T^(i) Tbar^(ibar) s_1 a``
    and every other mode annihilates the vacuum, for output weights ``<= L``."""
    space = a.space
    s1 = a.s1()
    log = []
    window = {"L": fmt(frac(L))}
    for W in space.weights(L):
        vn = a.weight - ONE - W
        lhs = a.act_key(vn, space.vacuum)
        vi = MINUS_ONE - vn
        if vi.is_natural():
            rhs = translate_power(space, s1, vi)
        else:
            rhs = {}
        log.append(f"{a.name} mode {vn} on 1")
        if lhs != rhs:
            return fails("creativity", {"field": a.name, "mode": str(vn), "a(z)1": _desc(space, lhs),
                                        "exp(zT) s1 a": _desc(space, rhs)}, window, log)
    return holds("creativity", window, log)


def _mode_range(f: Field, v, L) -> List[ExpPair]:
    space = f.space
    dv = space.weight(v)
    return [dv + f.weight - ONE - W for W in space.weights(L)]


def check_translation_covariance(a: Field, L, translate: Optional[Callable] = None) -> Verdict:
    """``[T, a_(vn)] = -n a_(n-1, nbar)`` and ``[Tbar, a_(vn)] = -nbar a_(n, nbar-1)``
    on every basis state of weight ``<= L`` and every mode landing in weight ``<= L``."""
    space = a.space
    T = translate or space.translate
    window = {"L": fmt(frac(L))}
    log = []
    for v in space.basis(L):
        Tv = (T({v: 1}, 0), T({v: 1}, 1))
        for vn in _mode_range(a, v, L):
            for sector in (0, 1):
                img = a.act_key(vn, v)
                lhs = dict(T(img, sector))
                vadd(lhs, a.act(vn, Tv[sector]), -1)
                lower = vn - (ExpPair.of(1, 0) if sector == 0 else ExpPair.of(0, 1))
                rhs = vscale(a.act_key(lower, v), -vn[sector])
                lhs = {k: c for k, c in lhs.items() if c}
                if lhs != rhs:
                    return fails("translation-covariance",
                                 {"field": a.name, "state": space.label(v), "mode": str(vn),
                                  "sector": sector, "[T,a]": _desc(space, lhs), "d a": _desc(space, rhs)},
                                 window, log)
            log.append(f"{space.label(v)} mode {vn}")
    return holds("translation-covariance", window, log)


def s1_images(fields: Sequence[Field]) -> List[Vector]:
    return [f.s1() for f in fields]


def check_completeness(S: Sequence[Field], L, space: Optional[GradedSpace] = None) -> Verdict:
    """The ``s_1`` images of the Dong closure of ``S`` span the states of weight ``<= L``."""
    space = space or S[0].space
    closure = dong_closure(S, L, verify=False, space=space)
    span = SparseEchelon()
    for v in s1_images(closure.fields):
        span.add(v)
    basis = space.basis(L)
    window = {"L": fmt(frac(L)), "fields": len(closure.fields), "dim": len(basis)}
    log = [f.name for f in closure.fields]
    for v in basis:
        if not span.contains({v: 1}):
            return fails("completeness", {"missing": space.label(v), "rank": len(span),
                                          "dim": len(basis)}, window, log)
    return holds("completeness", window, log)


# -- locality and skew-symmetry ----------------------------------------------------

def check_locality(a: Field, b: Field, L, margin: int = 2) -> Verdict:
    window = {"L": fmt(frac(L)), "margin": margin}
    ce = check_pair_locality(a, b, L, margin)
    log = [f"{a.name} | {b.name}"]
    if ce is not None:
        return fails("locality", dict(ce, pair=f"{a.name} | {b.name}"), window, log)
    return holds("locality", window, log)


def check_skew_symmetry(a, b, Y: YMap, L) -> Verdict:
    """``zeta b_(vn) a = sum_{vi in N^2} (-1)^{vn+vi} T^(vi) (a_(vn+vi) b)`` for every
    ``vn`` whose output weight is ``<= L``; the sum is finite by weight."""
    space = Y.space
    Ya, Yb = Y(a), Y(b)
    zeta = supersign(space.parity(a), space.parity(b))
    window = {"L": fmt(frac(L))}
    log = []
    top = Ya.weight + Yb.weight - ONE
    for W in space.weights(L):
        vn = top - W
        lhs = vscale(Yb.act_key(vn, a), zeta)
        rhs: Vector = {}
        for vi in _naturals(W):
            term = Ya.act_key(vn + vi, b)
            if term:
                vadd(rhs, translate_power(space, term, vi), int_sign(vn + vi))
        log.append(f"{space.label(a)}, {space.label(b)} vn={vn}")
        if lhs != rhs:
            return fails("skew-symmetry", {"a": space.label(a), "b": space.label(b), "vn": str(vn),
                                           "zeta b_(vn) a": _desc(space, lhs),
                                           "sum T a_(vn+vi) b": _desc(space, rhs)}, window, log)
    return holds("skew-symmetry", window, log)


# -- duality --------------------------------------------------------------------

def _pole(x: ExpPair, y: ExpPair, coset: ExpPair) -> ExpPair:
    """``x + y`` moved up into ``coset``: bounds the pole between two states."""
    h = x + y
    return ExpPair(_ceil_to(h.n, coset.n), _ceil_to(h.nbar, coset.nbar))


@dataclass
class DualLine:
    """``d = (vx+vw)^vh_ac a(vx+vw) b(vw) c`` on one output weight, keyed by
    the power of ``vw`` (the power of ``vx`` is ``S - j``)."""

    c: Hashable
    W: ExpPair
    S: ExpPair
    d: Dict[ExpPair, Vector]


def dual_line(a, b, c, Y: YMap, W: ExpPair, h_ac: ExpPair, margin: int = 1):
    """Certify one line of ``a(vx+vw)b(vw)c`` against ``(a(vx)b)(vw)c``.

    Both are multiplied by ``(vx+vw)^h_ac`` in their own expansion (``x>w``,
    resp. ``w>x``); the products must agree on every monomial both know and
    vanish outside the Laurent polynomial allowed by the weights.  Returns
    ``(DualLine, None)`` or ``(None, counterexample)``.
    """
    space = Y.space
    Ya, Yb = Y(a), Y(b)
    ha, hb, dc = Ya.weight, Yb.weight, space.weight(c)
    T = W - dc - ha - hb
    S = T + h_ac
    m = ExpPair.of(margin, margin)
    lo_x, lo_w = -(ha + hb), -(dc + hb)
    J1 = S - lo_x + m
    I2 = S - lo_w + m
    # x>w side: a(z)b(w)c with z = x + w, times (x+w)^h_ac
    F = series_zw(Ya, Yb, c, W, J1)
    D1: Dict[ExpPair, Vector] = {}
    for j, vec in F.items():
        for k in _naturals(J1 - j):
            coef = pair_binom(S - j, k)
            if coef:
                vadd(D1.setdefault(j + k, {}), vec, coef)
    D1 = {j: v for j, v in D1.items() if v}
    # w>x side: sum_i x^i Y(a_(-i-1) b)(w) c, times (w+x)^h_ac
    L2: Dict[ExpPair, Vector] = {}
    target = {c: 1}
    for i in _box(lo_x, I2, coset_of(-Ya.coset)):
        s = Ya.act_key((-i.n - 1, -i.nbar - 1), b)
        if not s:
            continue
        y = Y.act(s, (i.n - T.n - 1, i.nbar - T.nbar - 1), target)
        if y:
            L2[i] = y
    D2: Dict[ExpPair, Vector] = {}
    for i, vec in L2.items():
        for k in _naturals(I2 - i):
            coef = pair_binom(h_ac, k)
            if coef:
                vadd(D2.setdefault(i + k, {}), vec, coef)
    D2 = {i: v for i, v in D2.items() if v}
    bad = compare_lines(D1, J1, D2, I2, S)
    if bad is not None:
        j, x, y = bad
        return None, {"a": space.label(a), "b": space.label(b), "c": space.label(c), "weight": str(W),
                      "monomial": f"x^{S - j} w^{j}", "x>w": _desc(space, x), "w>x": _desc(space, y)}
    d = {j: v for j, v in D1.items() if _le(j, S - lo_x)}
    return DualLine(c, W, S, d), None


@dataclass
class DualityWitness:
    """Exchange-channel data for ``a, b``: for each ``(c, W)`` the power
    series ``p(vw, vx) = vw^h_bc vx^h_ab d(vw, vx)`` keyed by
    ``(power of vw, power of vx)``, with the exponents used."""

    a: Hashable
    b: Hashable
    h_ab: ExpPair
    h_ac: Dict[Hashable, ExpPair] = field(default_factory=dict)
    h_bc: Dict[Hashable, ExpPair] = field(default_factory=dict)
    p: Dict[Tuple[Hashable, ExpPair], Dict[Tuple[ExpPair, ExpPair], Vector]] = field(default_factory=dict)


def _witness_poly(line: DualLine, h_bc: ExpPair, h_ab: ExpPair):
    """``vw^h_bc vx^h_ab d``; None if some power is not natural."""
    out = {}
    for j, vec in line.d.items():
        wp, xp = j + h_bc, line.S - j + h_ab
        if not (wp.is_natural() and xp.is_natural()):
            return None, (wp, xp)
        out[(wp, xp)] = vec
    return out, None


def check_duality_direct(a, c, Y: YMap, L, margin: int = 1, middle: Optional[Sequence] = None) -> Verdict:
    """``a, c`` dual in the direct channel: one set of ``d^j`` serves
    ``a(vx+vw)b(vw)c`` and ``(a(vx)b)(vw)c`` for every basis ``b`` of weight
    ``<= L`` (or the given ``middle`` states), output weights ``<= L``."""
    space = Y.space
    Ya = Y(a)
    h_ac = _pole(Ya.weight, space.weight(c), Ya.coset)
    window = {"L": fmt(frac(L)), "margin": margin, "h_ac": str(h_ac)}
    log = []
    for b in (middle if middle is not None else space.basis(L)):
        for W in space.weights(L):
            line, ce = dual_line(a, b, c, Y, W, h_ac, margin)
            log.append(f"b={space.label(b)} W={W}")
            if ce is not None:
                return fails("duality-direct", ce, window, log)
    return holds("duality-direct", window, log)


def check_duality_exchange(a, b, Y: YMap, L, margin: int = 1, targets: Optional[Sequence] = None,
                           h_ab: Optional[ExpPair] = None) -> Verdict:
    """``a, b`` dual in the exchange channel: for every basis ``c`` of weight
    ``<= L`` (or ``targets``) both expansions are certified and
    ``d = sum vw^-h_bc vx^-h_ab p`` with ``p`` a power series.  The
    :class:`DualityWitness` is returned in ``verdict.data["witness"]``."""
    space = Y.space
    Ya, Yb = Y(a), Y(b)
    if h_ab is None:
        h_ab = _pole(Ya.weight, Yb.weight, Ya.coset)
    wit = DualityWitness(a, b, h_ab)
    window = {"L": fmt(frac(L)), "margin": margin, "h_ab": str(h_ab)}
    log = []
    for c in (targets if targets is not None else space.basis(L)):
        dc = space.weight(c)
        h_ac = wit.h_ac[c] = _pole(Ya.weight, dc, Ya.coset)
        h_bc = wit.h_bc[c] = _pole(Yb.weight, dc, Yb.coset)
        for W in space.weights(L):
            line, ce = dual_line(a, b, c, Y, W, h_ac, margin)
            log.append(f"c={space.label(c)} W={W}")
            if ce is not None:
                return fails("duality-exchange", ce, window, log, witness=wit)
            p, bad = _witness_poly(line, h_bc, h_ab)
            if p is None:
                return fails("duality-exchange", {"a": space.label(a), "b": space.label(b),
                                                  "c": space.label(c), "weight": str(W),
                                                  "not a power series at": f"w^{bad[0]} x^{bad[1]}"},
                             window, log, witness=wit)
            if p:
                wit.p[(c, W)] = p
    return holds("duality-exchange", window, log, witness=wit)


def _substitute_ba(p_ba: Dict[Tuple[ExpPair, ExpPair], Vector]) -> Dict[Tuple[ExpPair, ExpPair], Vector]:
    """``p(vw + vx, -vx)`` for a polynomial ``p(vz, vx)`` with natural powers."""
    out: Dict[Tuple[ExpPair, ExpPair], Vector] = {}
    for (zp, xp), vec in p_ba.items():
        sign = -1 if int(xp.n + xp.nbar) % 2 else 1
        for k in _naturals(zp):
            coef = pair_binom(zp, k) * sign
            key = (zp - k, xp + k)
            vadd(out.setdefault(key, {}), vec, coef)
    return {k: v for k, v in out.items() if v}


def check_pijk_identity(a, b, Y: YMap, L, instances: int = 20, margin: int = 1,
                        targets: Optional[Sequence] = None) -> Verdict:
    """``p^ab(vw, vx) = zeta (-1)^h_ab p^ba(vw+vx, -vx)`` on up to ``instances``
    nonzero ``(c, W)`` lines of the exchange witnesses of ``a, b`` and ``b, a``."""
    space = Y.space
    wa = check_duality_exchange(a, b, Y, L, margin, targets)
    h_ab = wa.data["witness"].h_ab
    wb = check_duality_exchange(b, a, Y, L, margin, targets, h_ab=h_ab)
    window = {"L": fmt(frac(L)), "instances": instances}
    for v in (wa, wb):
        if not v.holds:
            return fails("pijk-identity", dict(v.counterexample, reason=v.name), window, [])
    pa, pb = wa.data["witness"], wb.data["witness"]
    zeta = supersign(space.parity(a), space.parity(b))
    sign = zeta * int_sign(h_ab)
    log = []
    for key in sorted(pa.p, key=lambda k: (repr(k[0]), k[1]))[:instances]:
        c, W = key
        if pa.h_ac[c] != pb.h_bc[c] or pa.h_bc[c] != pb.h_ac[c]:
            return fails("pijk-identity", {"c": space.label(c), "reason": "exponent tables differ"},
                         window, log)
        lhs = pa.p[key]
        rhs = {k: vscale(v, sign) for k, v in _substitute_ba(pb.p.get(key, {})).items()}
        log.append(f"{space.label(a)}, {space.label(b)}, c={space.label(c)} W={W}")
        if lhs != rhs:
            diff = sorted(set(lhs) | set(rhs), key=repr)
            k = next(k for k in diff if lhs.get(k) != rhs.get(k))
            return fails("pijk-identity", {"c": space.label(c), "weight": str(W),
                                           "monomial": f"w^{k[0]} x^{k[1]}",
                                           "p_ab": _desc(space, lhs.get(k, {})),
                                           "p_ba substituted": _desc(space, rhs.get(k, {}))},
                         window, log)
    return holds("pijk-identity", window, log)


@dataclass
class ExponentTable:
    """Pole exponents ``vh_ab^i`` per pair of states, pairwise in distinct
    cosets of Z^2 and inside the set with integral difference."""

    entries: Dict[Tuple[Hashable, Hashable], List[ExpPair]] = field(default_factory=dict)

    def add(self, a, b, exps: Sequence[ExpPair]) -> None:
        exps = [ExpPair.of(*e) for e in exps]
        for e in exps:
            if not in_vbbk(e):
                raise NotInVbbK(f"exponent {e} for {a!r}, {b!r}")
        if len({coset_of(e) for e in exps}) != len(exps):
            raise ValueError("exponents of one pair must lie in distinct cosets")
        self.entries[(a, b)] = exps

    def __getitem__(self, pair) -> List[ExpPair]:
        return self.entries[pair]

    @classmethod
    def from_weights(cls, Y: YMap, left: Iterable, right: Iterable) -> "ExponentTable":
        """One exponent per pair: the sum of weights in the coset of the
        left field's modes (products of negative weight vanish)."""
        t = cls()
        space = Y.space
        for a in left:
            for b in right:
                t.add(a, b, [_pole(Y(a).weight, space.weight(b), Y(a).coset)])
        return t


def check_module_dual(Y: YMap, L, samples: Optional[int] = None, seed: int = 0, margin: int = 1,
                      table: Optional[ExponentTable] = None, module: Optional[Sequence] = None) -> Verdict:
    """The space as a module over itself is dual: for triples ``(a, b, c)``
    of weight ``<= L`` the series
    ``p = vx^h_ab (vx+vw)^h_ac vw^h_bc a(vx+vw)b(vw)c`` agrees with the
    ``w>x`` version for ``(a(vx)b)(vw)c`` and is a power series.  When there
    are more than ``samples`` triples a seeded sample is checked."""
    space = Y.space
    V = space.basis(L)
    M = list(module) if module is not None else V
    triples = [(a, b, c) for a in V for b in V for c in M]
    if samples is not None and len(triples) > samples:
        triples = random.Random(seed).sample(triples, samples)
    if table is None:
        table = ExponentTable.from_weights(Y, V, sorted(set(V) | set(M), key=repr))
    window = {"L": fmt(frac(L)), "margin": margin, "triples": len(triples),
              "seed": seed if samples is not None else None}
    log = []
    for a, b, c in triples:
        (h_ab,), (h_ac,), (h_bc,) = table[(a, b)], table[(a, c)], table[(b, c)]
        for W in space.weights(L):
            line, ce = dual_line(a, b, c, Y, W, h_ac, margin)
            if ce is None:
                p, bad = _witness_poly(line, h_bc, h_ab)
                if p is None:
                    ce = {"a": space.label(a), "b": space.label(b), "c": space.label(c),
                          "weight": str(W), "not a power series at": f"w^{bad[0]} x^{bad[1]}"}
            log.append(f"{space.label(a)}, {space.label(b)}, {space.label(c)} W={W}")
            if ce is not None:
                return fails("module-dual", ce, window, log)
    return holds("module-dual", window, log)


# -- Goddard uniqueness and the existence construction ---------------------------

def goddard_probe(fields: Sequence[Field], L) -> Verdict:
    """``s_1`` is injective on the span of ``fields`` within the window: no
    combination with a nonzero matrix element has ``s_1 = 0``.  Raises
    :class:`Inconsistent` when that fails, since creativity, completeness and
    locality then cannot all hold."""
    fps = [fingerprint(f, L) for f in fields]
    s1s = s1_images(fields)
    window = {"L": fmt(frac(L)), "fields": len(fields)}
    log = [f.name for f in fields]
    rows, keys = vectors_to_rows(s1s)
    # the s_1 matrix has one column per field
    mat = [[rows[i][k] for i in range(len(fields))] for k in range(len(keys))]
    kernel = nullspace(mat, len(fields))
    for vec in kernel:
        combo: Vector = {}
        for c, fp in zip(vec, fps):
            vadd(combo, fp, c)
        if combo:
            names = {f.name: fmt(c) for c, f in zip(vec, fields) if c}
            raise Inconsistent("s_1 is not injective on the field span",
                               {"combination": names, "matrix elements": len(combo)})
    return holds("goddard-injective", window, log)


def spanning_check(S: Sequence[Field], space: GradedSpace, L) -> Optional[Hashable]:
    """A basis state of weight ``<= L`` outside the span of the monomials
    ``a^1_vn1 ... a^r_vnr 1`` (generators from ``S``), or None."""
    span = SparseEchelon()
    span.add({space.vacuum: 1})
    frontier: List[Vector] = [{space.vacuum: 1}]
    weights = space.weights(L)
    seen = 1
    while frontier:
        new = []
        for vec in frontier:
            k0 = next(iter(vec))
            dv = space.weight(k0)
            for f in S:
                for W in weights:
                    vn = dv + f.weight - ONE - W
                    if not _le(dv, W):
                        continue
                    img = f.act(vn, vec)
                    if img and span.add(img):
                        new.append(img)
        frontier = new
        seen += len(new)
    for v in space.basis(L):
        if not span.contains({v: 1}):
            return v
    return None


@dataclass
class Construction:
    Y: YMap
    verdict: Verdict
    closure_fields: List[Field]


def construct_by_existence(S: Sequence[Field], space: GradedSpace, L, margin: int = 2,
                           multi_depth: Optional[int] = None) -> Construction:
    """Build ``Y`` on every basis state of weight ``<= L`` from generator
    fields ``S``: check the hypotheses (creativity, translation covariance,
    spanning, locality of the Dong closure, optionally multiple locality of
    each generator triple), invert ``s_1`` on the closure and cross-check
    against the monomial construction and ``Y(s_1 a) = a`` for ``a`` in ``S``."""
    window = {"L": fmt(frac(L)), "margin": margin}
    log: List[str] = []
    for a in S:
        for v in (check_creativity(a, L), check_translation_covariance(a, L)):
            log.append(f"{v.name} {a.name}")
            if not v.holds:
                return Construction(YMap(space), fails("existence", dict(v.counterexample, reason=v.name),
                                                       window, log), [])
    missing = spanning_check(S, space, L)
    if missing is not None:
        raise NotSpanning(f"{space.label(missing)} is not reached by generator modes",
                          {"state": space.label(missing)})
    if multi_depth is not None:
        for x in S:
            for y in S:
                for z in S:
                    v = verify_multiple_locality([x, y, z], multi_depth)
                    log.append(f"multiple-locality {x.name},{y.name},{z.name}")
                    if not v.holds:
                        raise NotLocal("generators are not multiply local", v.counterexample)
    closure = dong_closure(S, L, margin=margin, verify=True, space=space)
    log.append(f"closure: {len(closure.fields)} fields")
    if not closure.verdict.holds:
        raise NotLocal("Dong closure is not local", closure.verdict.counterexample)
    fields = closure.fields
    s1s = s1_images(fields)
    table: Dict[Hashable, Field] = {}
    for v in space.basis(L):
        wv, pv = space.weight(v), space.parity(v)
        idx = [i for i, f in enumerate(fields) if f.weight == wv and f.parity == pv]
        sol = solve_in_span([s1s[i] for i in idx], {v: 1})
        if sol is None:
            raise NotSpanning(f"{space.label(v)} is not s_1 of a closure field", {"state": space.label(v)})
        terms = [(c, fields[i]) for c, i in zip(sol, idx) if c]
        f = terms[0][1] if len(terms) == 1 and terms[0][0] == 1 else LinearField(terms, space.label(v))
        table[v] = f
    Y = YMap(space, table)
    ref = YMap(space)
    for a in S:
        s = a.s1()
        if fingerprint(Y.of_vector(s), L) != fingerprint(a, L):
            return Construction(Y, fails("existence", {"generator": a.name, "reason": "Y(s1 a) != a"},
                                         window, log), fields)
    for v in space.basis(L):
        log.append(f"Y({space.label(v)})")
        if fingerprint(Y(v), L) != fingerprint(ref(v), L):
            return Construction(Y, fails("existence", {"state": space.label(v),
                                                       "reason": "constructions differ"}, window, log),
                                fields)
    return Construction(Y, holds("existence", window, log, fields=len(fields)), fields)


# -- chiral subalgebra and two-sector sanity -------------------------------------

def chiral_states(space: GradedSpace, L) -> List[Hashable]:
    """Basis states with ``Tbar a = 0`` (no vz-bar dependence of ``a(vz)1``)."""
    return [v for v in space.basis(L) if not space.translate({v: 1}, 1)]


def check_chiral_subalgebra(Y: YMap, L, spot: int = 12) -> Verdict:
    """For chiral states ``a, b`` of weight ``<= L``: ``Y(a)`` has only
    ``nbar = -1`` modes on the window, ``a_(vn) b = 0`` off ``Z x {-1}``,
    ``a_(n,-1) b`` is chiral, and ``(a_(n,-1) b)(vz) = a(z)_(n) b(vz)`` on
    up to ``spot`` products."""
    space = Y.space
    Vz = chiral_states(space, L)
    window = {"L": fmt(frac(L)), "chiral states": len(Vz)}
    log = []
    if space.vacuum not in Vz:
        return fails("chiral-subalgebra", {"reason": "vacuum is not chiral"}, window, log)
    for a in Vz:
        for key in fingerprint(Y(a), L):
            if key[1].nbar != -1:
                return fails("chiral-subalgebra", {"a": space.label(a), "mode": str(key[1]),
                                                   "reason": "zbar dependence"}, window, log)
    checked = 0
    for a in Vz:
        Ya = Y(a)
        for b in Vz:
            top = Ya.weight + space.weight(b) - ONE
            for W in space.weights(L):
                vn = top - W
                x = Ya.act_key(vn, b)
                log.append(f"{space.label(a)}_({vn}) {space.label(b)}")
                on_lattice = vn.nbar == -1 and vn.n.denominator == 1
                if not on_lattice:
                    if x:
                        return fails("chiral-subalgebra", {"a": space.label(a), "b": space.label(b),
                                                           "vn": str(vn), "value": _desc(space, x)},
                                     window, log)
                    continue
                if space.translate(x, 1):
                    return fails("chiral-subalgebra", {"a": space.label(a), "b": space.label(b),
                                                       "vn": str(vn), "reason": "product not chiral"},
                                 window, log)
                if x and checked < spot:
                    checked += 1
                    lhs = fingerprint(Y.of_vector(x), L)
                    rhs = fingerprint(holomorphic_product(Ya, int(vn.n), Y(b)), L)
                    if lhs != rhs:
                        return fails("chiral-subalgebra", {"a": space.label(a), "b": space.label(b),
                                                           "n": fmt(vn.n),
                                                           "reason": "Y(a_(n) b) != a(z)_(n) b(z)"},
                                     window, log)
    return holds("chiral-subalgebra", window, log, spot_checked=checked)


def check_supercommute(a: Field, b: Field, L) -> Verdict:
    """``a_vm b_vn = zeta b_vn a_vm`` on every basis state of weight ``<= L``
    for every pair of modes landing in weight ``<= L``."""
    space = a.space
    zeta = supersign(a.parity, b.parity)
    window = {"L": fmt(frac(L))}
    log = []
    reach = L + a.weight.n + a.weight.nbar + b.weight.n + b.weight.nbar
    for v in space.basis(L):
        dv = space.weight(v)
        for Wm in space.weights(reach):
            vk = dv + b.weight - ONE - Wm
            for W in space.weights(L):
                vm = Wm + a.weight - ONE - W
                lhs = a.act(vm, b.act_key(vk, v))
                rhs = vscale(b.act(vk, a.act_key(vm, v)), zeta)
                if lhs != rhs:
                    return fails("supercommute", {"a": a.name, "b": b.name, "state": space.label(v),
                                                  "modes": f"{vm} {vk}", "ab": _desc(space, lhs),
                                                  "zeta ba": _desc(space, rhs)}, window, log)
            log.append(space.label(v))
    return holds("supercommute", window, log)


def check_vbbk_support(Y: YMap, L) -> Verdict:
    """Every nonzero product ``a_(vn) b`` of basis states of weight ``<= L``
    with output weight ``<= L`` has ``vn`` with integral difference."""
    space = Y.space
    window = {"L": fmt(frac(L))}
    log = []
    for a in space.basis(L):
        Ya = Y(a)
        for b in space.basis(L):
            top = Ya.weight + space.weight(b) - ONE
            for W in space.weights(L):
                vn = top - W
                x = Ya.act_key(vn, b)
                if x and not in_vbbk(vn):
                    return fails("vbbk-support", {"a": space.label(a), "b": space.label(b), "vn": str(vn)},
                                 window, log)
            log.append(f"{space.label(a)}, {space.label(b)}")
    return holds("vbbk-support", window, log)


# -- verdict implications over a corpus ------------------------------------------------

@dataclass
class ImplicationReport:
    """Outcome of ``premise => conclusion`` over corpus instances."""

    name: str
    instances: int = 0
    premise_held: int = 0
    falsifications: List[dict] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.falsifications

    def summary(self) -> str:
        return (f"{self.name}: {self.instances} instances, premise held on {self.premise_held}, "
                f"{len(self.falsifications)} falsifications")


def run_implication(name: str, instances: Iterable, premise: Callable, conclusion: Callable,
                    both_ways: bool = False) -> ImplicationReport:
    """``premise(x) => conclusion(x)`` (and the converse when ``both_ways``);
    both callables return Verdicts."""
    rep = ImplicationReport(name)
    for x in instances:
        rep.instances += 1
        p = premise(x)
        if p.holds:
            rep.premise_held += 1
        if p.holds or both_ways:
            q = conclusion(x)
            if p.holds != q.holds and (p.holds or both_ways):
                rep.falsifications.append({"instance": repr(x), "premise": p.record(),
                                           "conclusion": q.record()})
    return rep
