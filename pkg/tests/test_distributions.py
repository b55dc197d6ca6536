"""Truncated two-sector distributions against direct-series oracles."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from opealg.distributions import (Dist, SectorMismatch, agree, cross_difference, derive,
                                  derive_pair, expand_pow, expand_sum_pow, residue, shift,
                                  to_text, truncate)
from opealg.scalars import NotInVbbK
from oracles import binom, int_power_series, pair_power_series, plain_keys

F = Fraction
ints = st.integers(-4, 4)
# exponent pairs with integral difference (the set where the w>z sign exists)
vbbk_pairs = st.tuples(st.integers(-6, 6), st.integers(-3, 3), st.booleans()).map(
    lambda t: (F(2 * t[0] + t[2], 2), F(2 * t[1] + t[2], 2)))


def _known_part(dist, oracle):
    return {k: v for k, v in oracle.items() if dist.knows(k)}


@given(vbbk_pairs, st.sampled_from(["z>w", "w>z"]))
@settings(max_examples=60)
def test_expand_pow_matches_direct_series(vh, sector):
    d = expand_pow(vh, sector, 4)
    assert plain_keys(d) == _known_part(d, pair_power_series(vh, sector, 4))


@given(st.integers(-4, 4), st.sampled_from(["z>w", "w>z"]))
def test_integer_powers_match_repeated_multiplication(n, sector):
    d = expand_pow((n, 0), sector, 5)
    got = {(k[0][0], k[1][0]): v for k, v in plain_keys(d).items()}
    assert got == int_power_series(n, sector, 5)


@given(vbbk_pairs, vbbk_pairs, st.sampled_from(["z>w", "w>z"]))
@settings(max_examples=60)
def test_expand_pow_multiplicative(h1, h2, sector):
    prod = expand_pow(h1, sector, 4) * expand_pow(h2, sector, 4)
    total = expand_pow((h1[0] + h2[0], h1[1] + h2[1]), sector, 4)
    assert agree(prod, total) == []


@given(vbbk_pairs)
@settings(max_examples=60)
def test_sector_sign_law(vh):
    """The w>z expansion is (-1)^(h-hb) times the z>w one with variables swapped."""
    zw, wz = expand_pow(vh, "z>w", 4), expand_pow(vh, "w>z", 4)
    sign = (-1) ** int(vh[0] - vh[1])
    swapped = {(k[1], k[0]): sign * v for k, v in plain_keys(zw).items()}
    assert plain_keys(wz) == swapped


def test_w_gt_z_needs_integral_difference():
    with pytest.raises(NotInVbbK):
        expand_pow((F(1, 2), 0), "w>z", 2)


def test_sum_power_has_no_signs():
    d = expand_sum_pow((-2, 0), "z>w", 3)
    for (z, w), v in plain_keys(d).items():
        k = int(w[0])
        assert v == binom(-2, k)


def test_mixing_sectors_is_refused():
    with pytest.raises(SectorMismatch):
        expand_pow((-1, 0), "z>w", 2) * expand_pow((-1, 0), "w>z", 2)


def test_formal_delta_from_cross_difference():
    d = cross_difference(expand_pow((-1, 0), "z>w", 3), expand_pow((-1, 0), "w>z", 3))
    for k, v in plain_keys(d).items():
        assert v == 1 and k[0][0] + k[1][0] == -1 and k[0][1] == k[1][1] == 0
    assert len(d.coeffs) == 8


def test_window_refuses_unknown_coefficients():
    d = expand_pow((-2, 0), "z>w", 3)
    assert d.coeff(((-5, 0), (3, 0))) == 4
    assert d.coeff(((-4, 0), (3, 0))) == 0
    with pytest.raises(KeyError):
        d.coeff(((-6, 0), (4, 0)))


@given(ints, ints, st.integers(0, 3))
def test_derive_matches_power_rule(n, nb, order):
    d = derive(Dist.monomial((n, nb), coeff=3), 0, order)
    expect = 3 * binom(n, order)
    for i in range(order):
        expect *= i + 1
    target = {} if not expect else {((F(n - order), F(nb)),): expect}
    assert plain_keys(d) == target


def test_divided_derivative_pair():
    d = derive_pair(Dist.monomial((3, 2)), 0, (2, 1))
    assert plain_keys(d) == {((F(1), F(1)),): F(3 * 2)}
    assert derive_pair(Dist.monomial((3, 2)), 0, (-1, 0)).is_zero()


def test_residue_keeps_variable():
    d = Dist.monomial((-1, 0), (2, 0)) + Dist.monomial((0, 0), (2, 0))
    assert plain_keys(residue(d, 0)) == {((F(0), F(0)), (F(2), F(0))): F(1)}


@given(st.integers(-4, 3))
def test_shift_is_binomial_translation(n):
    """a(z+w) for a = z^n equals the z>w expansion of (z+w)^n."""
    s = shift(Dist.monomial((n, 0)), 3)
    e = expand_sum_pow((n, 0), "z>w", 3)
    assert agree(s, e) == [] and plain_keys(s) == plain_keys(e)


def test_text_form_is_canonical():
    d = Dist.monomial((1, 0), (0, F(1, 2)), coeff=F(2, 3))
    assert to_text(d) == "window: complete\n(1,0);(0,1/2) 2/3"
    kept = truncate(expand_pow((-1, 0), "z>w", 3), lambda k: k[1][0] <= 1)
    assert len(kept.coeffs) == 2
