"""Graded Fock backends against independent polynomial / Clifford models."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from opealg.backends import (ScaledModeField, LinearField, build_fermion, build_heisenberg,
                             derive_translation, exp_T, realize, tensor, translate_power)
from opealg.ope import YMap
from opealg.scalars import ExpPair
from oracles import BosonFock, FermionFock

F = Fraction
HALF = F(1, 2)


def _same(x, y):
    return {k: F(v) for k, v in x.items() if v} == {k: F(v) for k, v in y.items() if v}


def _partition_count(n):
    p = [1] + [0] * n
    for k in range(1, n + 1):
        for m in range(k, n + 1):
            p[m] += p[m - k]
    return p[n]


def test_heisenberg_basis_is_partitions():
    sp, _ = build_heisenberg(1, 6)
    basis = sp.basis(6)
    assert len(basis) == sum(_partition_count(n) for n in range(7))
    assert all(sp.weight(k) == ExpPair.of(sum(k), 0) for k in basis)
    assert basis[0] == () and sp.parity((2, 1)) == 0


def test_fermion_basis_is_strict_half_partitions():
    sp, psi = build_fermion(F(7, 2))
    basis = sp.basis(F(7, 2))
    assert len(basis) == 7
    assert sorted(basis, key=len)[0] == ()
    for k in basis:
        assert list(k) == sorted(set(k), reverse=True)
        assert sp.parity(k) == len(k) % 2
        assert sp.weight(k) == ExpPair.of(sum(k, F(0)), 0)


@pytest.mark.parametrize("level", [1, 2, F(1, 3)])
def test_heisenberg_modes_match_polynomial_model(level):
    sp, alpha = build_heisenberg(level, 4)
    fock = BosonFock(level)
    for key in sp.basis(4):
        for n in range(-3, 5):
            assert _same(alpha.act_key((n, -1), key), fock.mode(n, {key: 1})), (n, key)


def test_fermion_modes_match_clifford_model():
    sp, psi = build_fermion(F(7, 2))
    fock = FermionFock()
    for key in sp.basis(F(7, 2)):
        for n in range(-4, 4):
            r = n + HALF
            assert _same(psi.act_key((n, -1), key), fock.mode(r, {key: 1})), (r, key)


@given(st.integers(-4, 4), st.integers(-4, 4))
@settings(max_examples=40, deadline=None)
def test_boson_commutators(m, n):
    sp, alpha = build_heisenberg(1, 4)
    for key in sp.basis(3):
        lhs = {}
        for k, v in alpha.act((m, -1), alpha.act_key((n, -1), key)).items():
            lhs[k] = lhs.get(k, 0) + v
        for k, v in alpha.act((n, -1), alpha.act_key((m, -1), key)).items():
            lhs[k] = lhs.get(k, 0) - v
        expect = {key: BosonFock(1).commutator(m, n)}
        assert _same(lhs, expect)


@given(st.integers(-4, 3), st.integers(-4, 3))
@settings(max_examples=40, deadline=None)
def test_fermion_anticommutators(m, n):
    sp, psi = build_fermion(F(7, 2))
    for key in sp.basis(F(5, 2)):
        lhs = {}
        for a, b in (((m, -1), (n, -1)), ((n, -1), (m, -1))):
            for k, v in psi.act(a, psi.act_key(b, key)).items():
                lhs[k] = lhs.get(k, 0) + v
        expect = {key: FermionFock.anticommutator(m + HALF, n + HALF)}
        assert _same(lhs, expect)


def test_boson_translation_is_virasoro_minus_one():
    sp, _ = build_heisenberg(1, 5)
    fock = BosonFock(1)
    for key in sp.basis(4):
        assert _same(sp.translate_key(key), fock.virasoro(-1, {key: 1})), key


def test_fermion_translation_is_a_derivation():
    sp, _ = build_fermion(F(7, 2))
    fock = FermionFock()
    for key in sp.basis(F(5, 2)):
        # [T, psi_{-s}] = (s + 1/2) psi_{-s-1}, T1 = 0
        expect = {}
        for j, s in enumerate(key):
            rest = {key[j + 1:]: F(1)}
            vec = fock.mode(-(s + 1), rest)
            for t in reversed(key[:j]):
                vec = fock.mode(-t, vec)
            for k, v in vec.items():
                expect[k] = expect.get(k, 0) + (s + HALF) * v
        assert _same(sp.translate_key(key), expect), key


def test_translation_from_modes_agrees_with_backend():
    sp, _ = build_heisenberg(1, 4)
    T, Tb = derive_translation(YMap(sp), sp, 3)
    for key in sp.basis(3):
        assert _same(T[key], sp.translate_key(key))
        assert not Tb[key]


def test_divided_powers_and_exponential():
    sp, _ = build_heisenberg(1, 4)
    assert _same(translate_power(sp, {(1,): 1}, (2, 0)), {(3,): 1})
    e = exp_T(sp, {(1,): 1}, (2, 0))
    assert set(e) == {ExpPair.of(0, 0), ExpPair.of(1, 0), ExpPair.of(2, 0)}


def test_tensor_with_antichiral_copy():
    A, _ = build_heisenberg(1, 2)
    B, _ = build_heisenberg(1, 2)
    t = tensor(A, B, bar_swap=True)
    alpha, alphabar = t.generators["alpha"], t.generators["alphabar"]
    assert alpha.chiral and alphabar.antichiral
    assert alphabar.weight == ExpPair.of(0, 1)
    assert t.weight(((1,), (2,))) == ExpPair.of(1, 2)
    assert _same(alphabar.act_key((-1, -2), ((), ())), {((), (2,)): 1})
    assert _same(alpha.act_key((-2, -1), ((), (1,))), {((2,), (1,)): 1})
    assert _same(t.translate_key(((1,), (1,)), 1), {((1,), (2,)): 1})
    assert not alpha.act_key((-1, -2), ((), ()))


def test_tensor_of_fermions_carries_koszul_signs():
    A, _ = build_fermion(F(5, 2), name="psi")
    B, _ = build_fermion(F(5, 2), name="chi")
    t = tensor(A, B)
    psi, chi = t.generators["psi"], t.generators["chi"]
    one = t.vacuum
    # psi_{-1/2} chi_{-1/2} 1 = - chi_{-1/2} psi_{-1/2} 1
    x = psi.act((-1, -1), chi.act_key((-1, -1), one))
    y = chi.act((-1, -1), psi.act_key((-1, -1), one))
    assert x and _same(x, {k: -v for k, v in y.items()})


def test_realized_matrices_and_scaled_fields():
    sp, alpha = build_heisenberg(1, 3)
    mats = realize(alpha, 2, [(1, -1), (-1, -1)])
    up = mats[ExpPair.of(-1, -1)]
    assert up.shift == ExpPair.of(1, 0) and up.overflow
    assert not mats[ExpPair.of(1, -1)].overflow
    bad = ScaledModeField(alpha, (1, -1), 2)
    assert _same(bad.act_key((1, -1), (1,)), {(): 2})
    assert _same(bad.act_key((-1, -1), (1,)), {(1, 1): 1})
    lin = LinearField([(F(1, 2), alpha), (F(1, 2), alpha)])
    assert _same(lin.act_key((-2, -1), ()), {(2,): 1})
