from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from floerkit.novikov import (INFINITY, DiscreteMonoid, IncompatibleScalars, NotAUnit, NovikovError,
                              NovikovScalar, as_rational, format_rational, monoid_levels, nov_add,
                              nov_invert, nov_mul, nov_val)

F = Fraction
HALF = DiscreteMonoid([F(1, 2)])
ONE = DiscreteMonoid([1])
MIXED = DiscreteMonoid([F(2, 3), 1])


def s(*exps, cutoff=2, monoid=HALF):
    return NovikovScalar([as_rational(e) for e in exps], cutoff, monoid)


def brute_levels(gens, E):
    # every Z>=0 combination with coefficients bounded by E / g
    out = {F(0)}
    bounds = [int(E / g) + 1 for g in gens]

    def rec(i, acc):
        if i == len(gens):
            if acc < E:
                out.add(acc)
            return
        for c in range(bounds[i]):
            rec(i + 1, acc + c * gens[i])

    rec(0, F(0))
    return sorted(out)


@pytest.mark.parametrize("monoid, E, expected", [
    (ONE, 3, ["0", "1", "2"]),
    (HALF, 2, ["0", "1/2", "1", "3/2"]),
    (MIXED, 2, ["0", "2/3", "1", "4/3", "5/3"]),
])
def test_monoid_levels_examples(monoid, E, expected):
    assert [format_rational(x) for x in monoid_levels(monoid, E)] == expected


@given(st.lists(st.fractions(min_value=F(1, 6), max_value=2, max_denominator=6), min_size=1,
                max_size=3),
       st.fractions(min_value=F(1, 3), max_value=4, max_denominator=4))
@settings(max_examples=60)
def test_monoid_levels_match_brute_force(gens, E):
    assert monoid_levels(DiscreteMonoid(gens), E) == brute_levels(sorted(set(gens)), E)


@given(st.lists(st.fractions(min_value=F(1, 5), max_value=2, max_denominator=5), min_size=1,
                max_size=3),
       st.fractions(min_value=F(1, 2), max_value=3, max_denominator=3))
@settings(max_examples=40)
def test_monoid_levels_closed_under_addition(gens, E):
    levels = monoid_levels(DiscreteMonoid(gens), E)
    present = set(levels)
    assert levels[0] == 0 and levels == sorted(present)
    for a in levels:
        for b in levels:
            if a + b < E:
                assert a + b in present


def test_monoid_rejects_nonpositive_generator():
    with pytest.raises(NovikovError):
        DiscreteMonoid([0])
    with pytest.raises(NovikovError):
        DiscreteMonoid(["-1/2"])


def test_monoid_membership():
    assert HALF.contains("3/2") and not HALF.contains("1/3") and not HALF.contains(-1)
    assert MIXED.contains("5/3") and not MIXED.contains("1/3")


def test_rationals_are_exact():
    assert as_rational("4/6") == F(2, 3)
    assert format_rational(F(4, 2)) == "2" and format_rational(F(-3, 6)) == "-1/2"
    for bad in ("0.5", "1/0", "", "1e3", 0.5):
        with pytest.raises(NovikovError):
            as_rational(bad)


def test_addition_examples():
    assert nov_add(s(0, 1), s(1)) == s(0)
    x = s("1/2", "3/2")
    assert nov_add(x, s()) == x
    assert nov_add(s("1/2", 1), s("1/2")) == s(1)


def test_multiplication_examples():
    assert nov_mul(s(0, "1/2"), s("1/2")) == s("1/2", 1)
    assert nov_mul(s(0, 1, cutoff=3, monoid=ONE), s(0, 1, cutoff=3, monoid=ONE)) == \
        s(0, 2, cutoff=3, monoid=ONE)
    assert nov_mul(s(0, "1/2", cutoff=1), s("1/2", cutoff=1)) == s("1/2", cutoff=1)


def test_valuation_examples():
    assert nov_val(s("1/2", 1)) == F(1, 2)
    assert nov_val(s()) == INFINITY and INFINITY > 10 ** 9
    assert nov_val(s(0, 3, cutoff=4, monoid=ONE)) == 0


def test_inverse_examples():
    assert nov_invert(s(0)) == s(0)
    assert nov_invert(s(0, 1, cutoff=3, monoid=ONE)) == s(0, 1, 2, cutoff=3, monoid=ONE)
    assert nov_invert(s(0, "1/2", cutoff="3/2")) == s(0, "1/2", 1, cutoff="3/2")
    for bad in (s(), s("1/2")):
        with pytest.raises(NotAUnit):
            nov_invert(bad)


def test_mixed_cutoffs_rejected():
    with pytest.raises(IncompatibleScalars):
        s(0) + s(0, cutoff=3)
    with pytest.raises(IncompatibleScalars):
        s(0) * NovikovScalar([0], 2, ONE)


def test_exponent_outside_monoid_rejected():
    with pytest.raises(NovikovError):
        s("1/3")


def test_rendering():
    assert str(s("1/2", 0)) == "T^0 + T^1/2"
    assert str(s()) == "0"
    assert s(1, "1/2").to_strings() == ["1/2", "1"]


LEVELS = monoid_levels(HALF, 3)
scalars = st.frozensets(st.sampled_from(LEVELS)).map(lambda e: NovikovScalar(e, 3, HALF))


@given(scalars, scalars, scalars)
def test_ring_axioms(a, b, c):
    zero, one = NovikovScalar.zero(3, HALF), NovikovScalar.one(3, HALF)
    assert a + b == b + a and a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + zero == a and a * one == a and a + a == zero


@given(scalars, scalars, st.sampled_from(LEVELS[1:]))
def test_truncation_is_a_ring_map(a, b, E):
    assert (a * b).truncate(E) == a.truncate(E) * b.truncate(E)
    assert (a + b).truncate(E) == a.truncate(E) + b.truncate(E)


@given(scalars, scalars)
def test_valuation_laws(a, b):
    if a and b and nov_val(a) + nov_val(b) < 3:
        assert nov_val(a * b) == nov_val(a) + nov_val(b)
    assert nov_val(a + b) >= min(nov_val(a), nov_val(b))


@given(scalars)
def test_inverse_multiplies_back(a):
    if nov_val(a) == 0:
        assert a * nov_invert(a) == NovikovScalar.one(3, HALF)
