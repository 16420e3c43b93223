from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lipsharp.dyadic import Dyadic, ScaledFloat, frac_log2_floor

dyadics = st.builds(Dyadic, st.integers(-10**6, 10**6), st.integers(0, 40))


def test_canonical_form():
    assert Dyadic(4, 3) == Dyadic(1, 1)
    assert Dyadic(4, 3).num == 1 and Dyadic(4, 3).exp == 1
    assert Dyadic(0, 7).exp == 0
    assert hash(Dyadic(6, 2)) == hash(Dyadic(3, 1))


@pytest.mark.parametrize("text,value", [("3/2^4", Fraction(3, 16)), ("5", Fraction(5)),
                                         ("-7/8", Fraction(-7, 8)), ("0.25", Fraction(1, 4))])
def test_parse(text, value):
    assert Dyadic.parse(text).to_fraction() == value


def test_rejects_non_dyadic():
    with pytest.raises(ValueError):
        Dyadic.coerce(Fraction(1, 3))
    with pytest.raises(ValueError):
        Dyadic(1, -1)


@given(dyadics, dyadics)
def test_arithmetic_matches_fractions(a, b):
    fa, fb = a.to_fraction(), b.to_fraction()
    assert (a + b).to_fraction() == fa + fb
    assert (a - b).to_fraction() == fa - fb
    assert (a * b).to_fraction() == fa * fb
    assert (a < b) == (fa < fb)


@given(dyadics, st.integers(-30, 30))
def test_scale_floor_ceil(a, e):
    f = a.to_fraction()
    assert a.scale2(e).to_fraction() == f * Fraction(2) ** e
    assert a.floor() == f.__floor__()
    assert a.ceil() == f.__ceil__()


def test_log_far_below_float_range():
    d = Dyadic.pow2(-5000)
    assert abs(d.log() + 5000 * 0.6931471805599453) < 1e-9


@given(st.fractions(min_value=Fraction(1, 10**30), max_value=10**30))
def test_frac_log2_floor(x):
    e = frac_log2_floor(x)
    assert Fraction(2) ** e <= x < Fraction(2) ** (e + 1)


@given(st.fractions(min_value=Fraction(1, 10**12), max_value=10**12))
def test_scaled_float_rounding(x):
    lo = ScaledFloat.from_fraction(x, "down")
    hi = ScaledFloat.from_fraction(x, "up")
    to_frac = lambda s: Fraction(s.mantissa) * Fraction(2) ** s.exponent
    assert to_frac(lo) <= x <= to_frac(hi)
    r = lo.sqrt("down")
    assert to_frac(r) ** 2 <= x


def test_scaled_float_huge_exponents():
    s = ScaledFloat.pow2(-5000)
    assert float(s) == 0.0 and s.log2() == -5000
    assert "2^-5000" in str(s)
    assert ScaledFloat.pow2(-3) < ScaledFloat.pow2(-2)
    assert str(ScaledFloat(1.5, 3)) == "12"
