"""Graded state spaces with vacuum, translations and generator fields.

States are sparse vectors ``{basis_key: Fraction}``.  Mode actions are
computed exactly on demand, at any weight, so truncation only decides which
states and exponents a check quantifies over.  Materialized matrices
(:func:`realize`) flag images that leave the truncation instead of
dropping them.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

from .scalars import ExpPair, MINUS_ONE, ZERO, coset_of, fmt, frac, gen_binom, norm

Vector = Dict[Hashable, Fraction]


class InvalidSpec(ValueError):
    pass


# -- sparse vectors ---------------------------------------------------------

def vadd(acc: Vector, vec: Vector, c=1) -> Vector:
    """acc += c * vec, in place; returns acc."""
    if not c:
        return acc
    for k, v in vec.items():
        s = acc.get(k, 0) + c * v
        if s:
            acc[k] = s
        else:
            acc.pop(k, None)
    return acc


def vscale(vec: Vector, c) -> Vector:
    if not c:
        return {}
    return {k: v * c for k, v in vec.items()}


def _sort_desc_signed(seq: Sequence, odd: bool):
    """Sort descending; with ``odd`` items, track the permutation sign.
    Returns (tuple, sign) or None on a repeated odd item."""
    items = list(seq)
    sign = 1
    # insertion sort keeps the sign bookkeeping obvious
    for i in range(1, len(items)):
        j = i
        while j > 0 and items[j - 1] < items[j]:
            items[j - 1], items[j] = items[j], items[j - 1]
            sign = -sign
            j -= 1
    if odd:
        if len(set(items)) != len(items):
            return None
        return tuple(items), sign
    return tuple(items), 1


def _partitions(n: int, largest: Optional[int] = None) -> Iterable[Tuple[int, ...]]:
    if largest is None:
        largest = n
    if n == 0:
        yield ()
        return
    for k in range(min(n, largest), 0, -1):
        for rest in _partitions(n - k, k):
            yield (k,) + rest


def _strict_half_partitions(limit: Fraction) -> List[Tuple[Fraction, ...]]:
    out: List[Tuple[Fraction, ...]] = []
    parts = []
    s = Fraction(1, 2)
    while s <= limit:
        parts.append(s)
        s += 1

    def rec(i, chosen, total):
        if i == len(parts):
            out.append(tuple(sorted(chosen, reverse=True)))
            return
        rec(i + 1, chosen, total)
        if total + parts[i] <= limit:
            rec(i + 1, chosen + [parts[i]], total + parts[i])

    rec(0, [], Fraction(0))
    return out


# -- fields -----------------------------------------------------------------

class Field:
    """A homogeneous field ``a(vz) = sum a_vn vz^{-vn-1}`` on a graded space.

    Mode ``vn`` shifts weights by ``weight - vn - 1``; modes that would
    produce negative weight vanish.  ``chiral`` fields only have modes with
    ``nbar = -1``, ``antichiral`` ones only ``n = -1``.
    """

    def __init__(self, space: "GradedSpace", weight, parity: int, name: str = "",
                 chiral: bool = False, antichiral: bool = False, coset=ZERO):
        self.space = space
        self.weight = ExpPair.of(*weight)
        self.parity = int(parity) % 2
        self.name = name
        self.chiral = chiral
        self.antichiral = antichiral
        self.coset = coset_of(coset)
        self._integral = self.coset == ZERO
        self._top = (self.weight.n - 1, self.weight.nbar - 1)
        self._cache: Dict[Tuple[ExpPair, Hashable], Vector] = {}

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name or '?'} wt={self.weight}>"

    def mode_bound(self, key) -> ExpPair:
        """Largest exponent pair whose mode can be nonzero on ``key``."""
        w = self.space.weight(key)
        return ExpPair(w.n + self.weight.n - 1, w.nbar + self.weight.nbar - 1)

    def may_act(self, vn: ExpPair, key) -> bool:
        if self.chiral and vn[1] != -1:
            return False
        if self.antichiral and vn[0] != -1:
            return False
        if self._integral:
            if vn[0].denominator != 1 or vn[1].denominator != 1:
                return False
        elif coset_of(vn) != self.coset:
            return False
        w = self.space.weight(key)
        return vn[0] <= w[0] + self._top[0] and vn[1] <= w[1] + self._top[1]

    def act_key(self, vn, key) -> Vector:
        if type(vn) is not ExpPair:
            vn = ExpPair(*vn)
        ck = (vn, key)
        hit = self._cache.get(ck)
        if hit is None:
            if not self.may_act(vn, key):
                return {}
            hit = self._act(vn, key)
            self._cache[ck] = hit
        return hit

    def act(self, vn, vec: Vector) -> Vector:
        out: Vector = {}
        for k, c in vec.items():
            vadd(out, self.act_key(vn, k), c)
        return out

    def _act(self, vn: ExpPair, key) -> Vector:
        raise NotImplementedError

    def s1(self) -> Vector:
        """The state ``a_{(-1,-1)} 1``."""
        return self.act_key(MINUS_ONE, self.space.vacuum)


class IdentityField(Field):
    def __init__(self, space):
        super().__init__(space, (0, 0), 0, "1", chiral=True, antichiral=True)

    def _act(self, vn, key):
        return {key: 1} if vn == MINUS_ONE else {}


class ModeField(Field):
    """Field whose modes come from a backend mode function."""

    def __init__(self, space, weight, parity, name, mode_fn, bar=False):
        super().__init__(space, weight, parity, name, chiral=not bar, antichiral=bar)
        self.bar = bar
        self._mode_fn = mode_fn

    def _act(self, vn, key):
        n = vn.nbar if self.bar else vn.n
        return self._mode_fn(n, key)


class ScaledModeField(Field):
    """Negative-control field: one mode of ``base`` multiplied by ``factor``."""

    def __init__(self, base: Field, vn, factor):
        super().__init__(base.space, base.weight, base.parity, base.name + "~",
                         base.chiral, base.antichiral, base.coset)
        self.base = base
        self.bad = ExpPair.of(*vn)
        self.factor = frac(factor)

    def _act(self, vn, key):
        out = self.base.act_key(vn, key)
        return vscale(out, self.factor) if vn == self.bad else out


class LinearField(Field):
    """Finite linear combination of fields of equal weight and parity."""

    def __init__(self, terms: Sequence[Tuple[Fraction, Field]], name=""):
        terms = [(norm(c), f) for c, f in terms if c]
        if not terms:
            raise ValueError("empty combination")
        f0 = terms[0][1]
        for _, f in terms:
            if f.weight != f0.weight or f.parity != f0.parity:
                raise ValueError("combination of inhomogeneous fields")
        super().__init__(f0.space, f0.weight, f0.parity, name or "+".join(f.name for _, f in terms),
                         all(f.chiral for _, f in terms), all(f.antichiral for _, f in terms),
                         f0.coset)
        self.terms = terms

    def _act(self, vn, key):
        out: Vector = {}
        for c, f in self.terms:
            vadd(out, f.act_key(vn, key), c)
        return out


class ZeroField(Field):
    def __init__(self, space, weight=(0, 0), parity=0, name="0"):
        super().__init__(space, weight, parity, name, chiral=True, antichiral=True)

    def may_act(self, vn, key):
        return False

    def _act(self, vn, key):
        return {}


# -- spaces -----------------------------------------------------------------

class GradedSpace:
    """Basis keys with weights (Delta, Delta_bar) and parities."""

    vacuum: Hashable = ()

    def __init__(self):
        self.generators: Dict[str, Field] = {}
        self._wcache: Dict[Hashable, ExpPair] = {}
        self.identity = IdentityField(self)

    def weight(self, key) -> ExpPair:
        w = self._wcache.get(key)
        if w is None:
            w = self._wcache[key] = self._weight(key)
        return w

    def _weight(self, key) -> ExpPair:
        raise NotImplementedError

    def parity(self, key) -> int:
        raise NotImplementedError

    def basis(self, L) -> List[Hashable]:
        raise NotImplementedError

    def translate_key(self, key, sector: int = 0) -> Vector:
        raise NotImplementedError

    def translate(self, vec: Vector, sector: int = 0) -> Vector:
        out: Vector = {}
        for k, c in vec.items():
            vadd(out, self.translate_key(k, sector), c)
        return out

    def total_weight(self, key) -> Fraction:
        w = self.weight(key)
        return w.n + w.nbar

    def label(self, key) -> str:
        return repr(key)

    def describe_vector(self, vec: Vector) -> str:
        if not vec:
            return "0"
        return " + ".join(f"{fmt(c)}*{self.label(k)}" for k, c in sorted(vec.items(), key=lambda kv: repr(kv[0])))

    def key_modes(self, key) -> List[Tuple[Field, Tuple]]:
        raise NotImplementedError

    def weights(self, L) -> List[ExpPair]:
        """Distinct weights of the basis of weight <= L."""
        return sorted({self.weight(k) for k in self.basis(L)})

    def sort_keys(self, keys: Iterable) -> List:
        return sorted(keys, key=lambda k: (self.total_weight(k), repr(k)))


class HeisenbergSpace(GradedSpace):
    """Fock module of the free boson: keys are partitions (k1 >= k2 >= ...)
    standing for ``alpha_{-k1} alpha_{-k2} ... 1``."""

    def __init__(self, level=1, name="alpha", bar=False):
        super().__init__()
        level = frac(level)
        if level == 0:
            raise InvalidSpec("Heisenberg level must be nonzero")
        self.level = norm(level)
        self.bar = bar
        self.name = name
        wt = (0, 1) if bar else (1, 0)
        self.alpha = ModeField(self, wt, 0, name, self._mode, bar=bar)
        self.generators[name] = self.alpha

    def barred(self, name=None) -> "HeisenbergSpace":
        return HeisenbergSpace(self.level, name or self.name, not self.bar)

    def _weight(self, key):
        w = sum(key)
        return ExpPair.of(0, w) if self.bar else ExpPair.of(w, 0)

    def parity(self, key):
        return 0

    def basis(self, L):
        L = frac(L)
        out = []
        n = 0
        while n <= L:
            out.extend(_partitions(n))
            n += 1
        return self.sort_keys(out)

    def _mode(self, n, key) -> Vector:
        if n.denominator != 1:
            return {}
        n = int(n)
        if n < 0:
            return {tuple(sorted(key + (-n,), reverse=True)): 1}
        if n == 0:
            return {}
        c = key.count(n)
        if not c:
            return {}
        rest = list(key)
        rest.remove(n)
        return {tuple(rest): self.level * n * c}

    def translate_key(self, key, sector=0):
        if sector != (1 if self.bar else 0):
            return {}
        out: Vector = {}
        for j, k in enumerate(key):
            new = tuple(sorted(key[:j] + (k + 1,) + key[j + 1:], reverse=True))
            out[new] = out.get(new, 0) + k
        return {k: v for k, v in out.items() if v}

    def key_modes(self, key):
        """Generator modes, outermost first, whose product on the vacuum is
        exactly the basis state ``key``."""
        return [(self.alpha, (-1, -k) if self.bar else (-k, -1)) for k in key]

    def label(self, key):
        if not key:
            return "1"
        sym = self.name + ("b" if self.bar else "")
        return "".join(f"{sym}[-{k}]" for k in key) + "1"


class FermionSpace(GradedSpace):
    """Neveu-Schwarz free fermion: keys are strictly decreasing half-integers
    (s1 > s2 > ...) standing for ``psi_{-s1} psi_{-s2} ... 1``.

    Normalization ``{psi_r, psi_s} = delta_{r+s,0}``; the field mode
    ``psi_(n)`` is ``psi_{n+1/2}``.
    """

    def __init__(self, name="psi", bar=False):
        super().__init__()
        self.bar = bar
        self.name = name
        wt = (0, Fraction(1, 2)) if bar else (Fraction(1, 2), 0)
        self.psi = ModeField(self, wt, 1, name, self._mode, bar=bar)
        self.generators[name] = self.psi

    def barred(self, name=None) -> "FermionSpace":
        return FermionSpace(name or self.name, not self.bar)

    def _weight(self, key):
        w = sum(key, Fraction(0))
        return ExpPair.of(0, w) if self.bar else ExpPair.of(w, 0)

    def parity(self, key):
        return len(key) % 2

    def basis(self, L):
        return self.sort_keys(_strict_half_partitions(frac(L)))

    def _mode(self, n, key) -> Vector:
        if n.denominator != 1:
            return {}
        r = n + Fraction(1, 2)
        if r < 0:
            s = -r
            if s in key:
                return {}
            pos = sum(1 for x in key if x > s)
            new = key[:pos] + (s,) + key[pos:]
            return {new: -1 if pos % 2 else 1}
        if r in key:
            pos = key.index(r)
            return {key[:pos] + key[pos + 1:]: -1 if pos % 2 else 1}
        return {}

    def translate_key(self, key, sector=0):
        if sector != (1 if self.bar else 0):
            return {}
        out: Vector = {}
        for j, s in enumerate(key):
            res = _sort_desc_signed(key[:j] + (s + 1,) + key[j + 1:], odd=True)
            if res is None:
                continue
            new, sign = res
            out[new] = out.get(new, 0) + sign * norm(s + Fraction(1, 2))
        return {k: v for k, v in out.items() if v}

    def key_modes(self, key):
        half = Fraction(1, 2)
        return [(self.psi, (-1, -s - half) if self.bar else (-s - half, -1)) for s in key]

    def label(self, key):
        if not key:
            return "1"
        sym = self.name + ("b" if self.bar else "")
        return "".join(f"{sym}[-{fmt(s)}]" for s in key) + "1"


class _LiftedField(Field):
    def __init__(self, tensor: "TensorSpace", base: Field, right: bool):
        super().__init__(tensor, base.weight, base.parity, base.name,
                         base.chiral, base.antichiral, base.coset)
        self.base = base
        self.right = right

    def _act(self, vn, key):
        ka, kb = key
        if self.right:
            sign = -1 if (self.parity and self.space.left.parity(ka)) else 1
            return {(ka, k): sign * c for k, c in self.base.act_key(vn, kb).items()}
        return {(k, kb): c for k, c in self.base.act_key(vn, ka).items()}


class TensorSpace(GradedSpace):
    """Graded tensor product with Koszul signs; keys are pairs."""

    def __init__(self, left: GradedSpace, right: GradedSpace):
        super().__init__()
        self.left = left
        self.right = right
        self.vacuum = (left.vacuum, right.vacuum)
        self._lift: Dict[int, Field] = {}
        for name, f in left.generators.items():
            self.generators[name] = self._lift[id(f)] = _LiftedField(self, f, right=False)
        for name, f in right.generators.items():
            if name in self.generators:
                raise InvalidSpec(f"duplicate generator name {name!r}")
            self.generators[name] = self._lift[id(f)] = _LiftedField(self, f, right=True)

    def _weight(self, key):
        return self.left.weight(key[0]) + self.right.weight(key[1])

    def parity(self, key):
        return (self.left.parity(key[0]) + self.right.parity(key[1])) % 2

    def basis(self, L):
        L = frac(L)
        out = []
        for ka in self.left.basis(L):
            rest = L - self.left.total_weight(ka)
            for kb in self.right.basis(rest):
                out.append((ka, kb))
        return self.sort_keys(out)

    def translate_key(self, key, sector=0):
        ka, kb = key
        out: Vector = {}
        for k, c in self.left.translate_key(ka, sector).items():
            out[(k, kb)] = out.get((k, kb), 0) + c
        for k, c in self.right.translate_key(kb, sector).items():
            out[(ka, k)] = out.get((ka, k), 0) + c
        return {k: v for k, v in out.items() if v}

    def key_modes(self, key):
        left = [(self._lift[id(f)], vn) for f, vn in self.left.key_modes(key[0])]
        right = [(self._lift[id(f)], vn) for f, vn in self.right.key_modes(key[1])]
        return left + right

    def label(self, key):
        a, b = self.left.label(key[0]), self.right.label(key[1])
        return f"{a}(x){b}"


def build_heisenberg(level=1, L=2, name="alpha", bar=False):
    """Free boson space and its generator; ``L`` only validated here."""
    if frac(L) < 1:
        raise InvalidSpec("truncation L must be at least 1")
    space = HeisenbergSpace(level, name, bar)
    return space, space.alpha


def build_fermion(L=Fraction(3, 2), name="psi", bar=False):
    if frac(L) < Fraction(1, 2):
        raise InvalidSpec("truncation L must be at least 1/2")
    space = FermionSpace(name, bar)
    return space, space.psi


def tensor(A: GradedSpace, B: GradedSpace, bar_swap: bool = False) -> TensorSpace:
    """``A (x) B``; with ``bar_swap`` the fields of ``B`` live in ``zbar``.

    A barred generator whose name collides with one of ``A`` gets the
    suffix ``bar``.
    """
    if bar_swap:
        if not hasattr(B, "barred"):
            raise InvalidSpec("bar_swap needs a primitive right factor")
        name = B.name + "bar" if B.name in A.generators else B.name
        B = B.barred(name)
    return TensorSpace(A, B)


# -- translations and materialization --------------------------------------

def translate_power(space: GradedSpace, vec: Vector, vi) -> Vector:
    """``T^{(i)} Tbar^{(ibar)} vec`` (divided powers)."""
    i, ib = int(vi[0]), int(vi[1])
    out = dict(vec)
    for k in range(ib):
        out = vscale(space.translate(out, 1), Fraction(1, k + 1))
    for k in range(i):
        out = vscale(space.translate(out, 0), Fraction(1, k + 1))
    return out


def exp_T(space: GradedSpace, vec: Vector, budget) -> Dict[ExpPair, Vector]:
    """Coefficients of ``e^{vz vT} vec`` up to ``vz^(budget, budget)``."""
    b = (int(budget[0]), int(budget[1])) if isinstance(budget, (tuple, list)) else (int(budget),) * 2
    out = {}
    for i in range(b[0] + 1):
        for ib in range(b[1] + 1):
            v = translate_power(space, vec, (i, ib))
            if v:
                out[ExpPair.of(i, ib)] = v
    return out


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense exact matrix of one mode on the weight <= L basis.

    ``overflow`` lists columns whose image has components above the
    truncation; those images are not represented in ``rows``.
    """

    vn: ExpPair
    basis: Tuple[Hashable, ...]
    rows: Tuple[Tuple[Fraction, ...], ...]
    shift: ExpPair
    parity: int
    overflow: Tuple[int, ...]

    def apply(self, col: int) -> List[Fraction]:
        return [row[col] for row in self.rows]

    def is_zero(self) -> bool:
        return not any(any(r) for r in self.rows) and not self.overflow


def realize(field: Field, L, vns: Iterable) -> Dict[ExpPair, OperatorMatrix]:
    """Matrices of the given modes on the basis of weight <= L."""
    space = field.space
    basis = tuple(space.basis(L))
    index = {k: i for i, k in enumerate(basis)}
    out = {}
    for vn in vns:
        vn = ExpPair.of(*vn)
        rows = [[Fraction(0)] * len(basis) for _ in basis]
        overflow = []
        for j, key in enumerate(basis):
            img = field.act_key(vn, key)
            for k, c in img.items():
                if k in index:
                    rows[index[k]][j] = c
                else:
                    overflow.append(j)
                    break
        shift = ExpPair(field.weight.n - vn.n - 1, field.weight.nbar - vn.nbar - 1)
        out[vn] = OperatorMatrix(vn, basis, tuple(tuple(r) for r in rows), shift,
                                 field.parity, tuple(sorted(set(overflow))))
    return out


def derive_translation(Y: Callable[[Hashable], Field], space: GradedSpace, L):
    """``T_1 a = a_{(-2,-1)} 1`` and ``Tbar_1 a = a_{(-1,-2)} 1`` on the
    basis of weight <= L, returned as dicts key -> vector."""
    T, Tb = {}, {}
    for key in space.basis(L):
        f = Y(key)
        T[key] = f.act_key((-2, -1), space.vacuum)
        Tb[key] = f.act_key((-1, -2), space.vacuum)
    return T, Tb
