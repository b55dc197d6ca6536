"""Exact scalar kernel: binomials, exponent pairs, signs."""

from fractions import Fraction
from itertools import permutations

import pytest
from hypothesis import given, strategies as st

from opealg.scalars import (ExpPair, NotInVbbK, binom_pair, coset_of, coset_range,
                            fmt, gen_binom, in_vbbk, int_sign, koszul_sign,
                            parse_rational, pow_minus_one, same_coset, supersign)
from oracles import binom, perm_sign_by_swaps

rationals = st.fractions(min_value=-20, max_value=20, max_denominator=6)
halves = st.integers(-20, 20).map(lambda k: Fraction(k, 2))


@given(rationals, st.integers(0, 12))
def test_gen_binom_matches_product_formula(n, i):
    assert gen_binom(n, i) == binom(n, i)


@given(rationals, st.integers(1, 12))
def test_gen_binom_pascal_recurrence(n, i):
    assert gen_binom(n + 1, i) == gen_binom(n, i) + gen_binom(n, i - 1)


def test_gen_binom_edges():
    assert gen_binom(Fraction(7, 3), 0) == 1
    assert gen_binom(5, -1) == 0
    assert gen_binom(3, 5) == 0
    assert gen_binom(-1, 4) == 1
    assert gen_binom(Fraction(1, 2), 2) == Fraction(-1, 8)
    assert isinstance(gen_binom(6, 3), int)


def test_binom_pair_is_product():
    assert binom_pair((Fraction(1, 2), 3), (2, 1)) == binom(Fraction(1, 2), 2) * 3


@given(halves, halves)
def test_exppair_normalizes_integers(a, b):
    p = ExpPair.of(a, b)
    for x in p:
        if Fraction(x).denominator == 1:
            assert isinstance(x, int)
    assert ExpPair.of(a, b) == ExpPair.of(Fraction(a), Fraction(b))
    assert p + ExpPair.of(-a, -b) == ExpPair.of(0, 0)
    assert -p == ExpPair.of(-a, -b)


def test_exppair_predicates_and_text():
    assert ExpPair.of(2, 0).is_natural()
    assert not ExpPair.of(-1, 0).is_natural()
    assert ExpPair.of(Fraction(1, 2), Fraction(1, 2)).is_integral() is False
    assert str(ExpPair.of(Fraction(1, 2), -1)) == "(1/2,-1)"
    assert fmt(Fraction(-3, 2)) == "-3/2"


@given(halves, halves)
def test_int_sign_law(a, b):
    if (a - b).denominator != 1:
        assert not in_vbbk((a, b))
        with pytest.raises(NotInVbbK):
            int_sign((a, b))
        return
    assert int_sign((a, b)) == (-1) ** int(a - b)
    # shifting by an integral pair multiplies by (-1)^(k - kb)
    assert int_sign((a + 3, b + 1)) == int_sign((a, b))
    assert int_sign((a + 1, b)) == -int_sign((a, b))


def test_pow_minus_one():
    assert pow_minus_one(3) == -1 and pow_minus_one(-4) == 1
    with pytest.raises(NotInVbbK):
        pow_minus_one(Fraction(1, 2))


def test_cosets():
    assert coset_of((Fraction(3, 2), -2)) == ExpPair.of(Fraction(1, 2), 0)
    assert same_coset((Fraction(-1, 2), 1), (Fraction(5, 2), 7))
    assert not same_coset((Fraction(1, 2), 0), (0, 0))
    assert list(coset_range(Fraction(-1), Fraction(2), Fraction(1, 2))) == \
        [Fraction(-1, 2), Fraction(1, 2), Fraction(3, 2)]


@given(st.permutations(range(5)), st.lists(st.integers(0, 1), min_size=5, max_size=5))
def test_koszul_sign_matches_bubble_sort(perm, parities):
    assert koszul_sign(perm, parities) == perm_sign_by_swaps(perm, parities)


def test_koszul_sign_all_odd_is_permutation_sign():
    for perm in permutations(range(4)):
        inv = sum(1 for i in range(4) for j in range(i + 1, 4) if perm[i] > perm[j])
        assert koszul_sign(perm, [1] * 4) == (-1) ** inv


def test_supersign():
    assert supersign(1, 1) == -1
    assert supersign(0, 1) == supersign(1, 0) == supersign(0, 0) == 1


def test_parse_rational():
    assert parse_rational("7/2") == Fraction(7, 2)
    assert parse_rational("-3") == -3
    with pytest.raises(ValueError):
        parse_rational("x")
