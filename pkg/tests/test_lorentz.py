import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipsharp.lorentz import (
    CallableProfile,
    IndicatorProfile,
    LogProfile,
    LorentzIndex,
    StepFunction,
    TruncatedProfile,
    distribution_function,
    lorentz_norm,
    profile_from_dict,
    radial_map_norm,
    rearrangement,
)

positive = st.fractions(min_value=Fraction(1, 64), max_value=16, max_denominator=64)
step_functions = st.lists(st.tuples(positive, st.fractions(min_value=0, max_value=8, max_denominator=16)),
                          min_size=1, max_size=12).map(
    lambda ps: StepFunction.from_pieces([p[0] for p in ps], [p[1] for p in ps]))


def two_level():
    return StepFunction.from_pieces([1, 2], [2, 1])


class TestDistribution:
    def test_zero_function(self):
        assert distribution_function(StepFunction([0, 1], [0]), 0) == 0

    @pytest.mark.parametrize("alpha,expected", [(0.5, 3), (1, 0)])
    def test_indicator(self, alpha, expected):
        assert distribution_function(StepFunction.indicator(3), alpha) == expected

    @pytest.mark.parametrize("alpha,expected", [(1.5, 1), (0.5, 3), (1, 1), (2, 0)])
    def test_two_level(self, alpha, expected):
        assert distribution_function(two_level(), alpha) == expected

    def test_negative_alpha_rejected(self):
        with pytest.raises(ValueError):
            distribution_function(two_level(), -1)


class TestRearrangement:
    def test_indicator(self):
        f = StepFunction([0, 2, 5], [0, 1])
        assert rearrangement(f) == StepFunction.indicator(3)

    def test_two_level_sorted(self):
        f = StepFunction.from_pieces([2, 1], [1, 2])
        r = rearrangement(f)
        assert r.rearranged
        assert r == StepFunction([0, 1, 3], [2, 1])

    def test_idempotent(self):
        r = rearrangement(two_level())
        assert rearrangement(r) == r

    @given(step_functions, st.fractions(min_value=0, max_value=9, max_denominator=32))
    def test_equimeasurable(self, f, alpha):
        assert distribution_function(f, alpha) == distribution_function(rearrangement(f), alpha)

    @given(step_functions)
    def test_nonincreasing(self, f):
        vals = rearrangement(f).values
        assert all(a >= b for a, b in zip(vals, vals[1:]))

    def test_rearranged_flag_enforced(self):
        with pytest.raises(ValueError):
            StepFunction([0, 1, 2], [1, 2], rearranged=True)


class TestStepNorms:
    @pytest.mark.parametrize("Q", [1, 1.5, 2, 3, 7])
    def test_indicator_q1(self, Q):
        m = Fraction(7, 3)
        got = lorentz_norm(StepFunction.indicator(m), LorentzIndex(Q, 1)).value
        assert got == pytest.approx(Q * float(m) ** (1 / Q), rel=1e-12)

    @pytest.mark.parametrize("Q", [1, 2, 3.5])
    def test_indicator_lq(self, Q):
        got = lorentz_norm(StepFunction.indicator(5), LorentzIndex(Q, Q)).value
        assert got == pytest.approx(5 ** (1 / Q), rel=1e-12)

    def test_unit_indicator_21(self):
        assert lorentz_norm(StepFunction.indicator(1), LorentzIndex(2, 1)).value == pytest.approx(2.0)

    @given(step_functions, st.fractions(min_value=Fraction(1, 8), max_value=8, max_denominator=8))
    def test_scaling(self, f, c):
        idx = LorentzIndex(2, 1.5)
        base = lorentz_norm(f, idx).value
        assert lorentz_norm(f.scaled(c), idx).value == pytest.approx(float(c) * base, rel=1e-12, abs=1e-300)

    @given(step_functions)
    def test_rearrangement_invariance(self, f):
        idx = LorentzIndex(3, 2)
        assert lorentz_norm(f, idx).value == lorentz_norm(rearrangement(f), idx).value

    @settings(max_examples=100, deadline=None)
    @given(step_functions, st.sampled_from([1.0, 2.0, 3.0]))
    def test_lebesgue_consistency(self, f, Q):
        # q = Q: compare against a Riemann sum of |f|^Q on the original ordering
        got = lorentz_norm(f, LorentzIndex(Q, Q)).value
        end = float(f.breakpoints[-1])
        t = (np.arange(200_000) + 0.5) * end / 200_000
        vals = np.array([float(v) for v in f.values])
        idx = np.searchsorted(np.array([float(b) for b in f.breakpoints]), t, side="right") - 1
        oracle = (np.sum(vals[idx] ** Q) * end / 200_000) ** (1 / Q)
        assert got == pytest.approx(oracle, rel=1e-6, abs=1e-12) or abs(got - oracle) <= 2 * end / 200_000 * max(vals) ** Q

    def test_serialization_round_trip(self):
        f = two_level()
        assert StepFunction.from_dict(f.to_dict()) == f

    def test_index_constraints(self):
        with pytest.raises(ValueError):
            LorentzIndex(2, 3)
        with pytest.raises(ValueError):
            LorentzIndex(0.5, 0.5)


class TestProfiles:
    def test_log_profile_22_closed_form(self):
        r = lorentz_norm(LogProfile(2), LorentzIndex(2, 2))
        assert r.finite and r.value == pytest.approx(1.0, abs=1e-12)

    def test_log_profile_21_divergent(self):
        r = lorentz_norm(LogProfile(2), LorentzIndex(2, 1))
        assert r.divergent
        assert r.certificate["partial"] > 1e6

    def test_quadrature_route_agrees(self):
        g = LogProfile(2)
        cp = CallableProfile(log_func=g.log_g)
        r = lorentz_norm(cp, LorentzIndex(2, 2))
        assert r.finite and r.value == pytest.approx(1.0, abs=1e-6)

    def test_quadrature_intermediate_q(self):
        g = LogProfile(2)
        closed = lorentz_norm(g, LorentzIndex(2, 1.5)).value
        quad = lorentz_norm(CallableProfile(log_func=g.log_g), LorentzIndex(2, 1.5)).value
        # (2/(q-1))^(1/q) * ... : s = log(e/t) turns the integral into int_1^inf s^-q ds
        assert closed == pytest.approx((1 / 0.5) ** (1 / 1.5), rel=1e-12)
        assert quad == pytest.approx(closed, rel=1e-6)

    def test_quadrature_never_fabricates(self):
        g = LogProfile(2)
        r = lorentz_norm(CallableProfile(log_func=g.log_g), LorentzIndex(2, 1))
        assert not r.finite

    @pytest.mark.parametrize("N", [2, 3, 5])
    def test_radial_indicator(self, N):
        assert radial_map_norm(IndicatorProfile(), N, LorentzIndex(N, N)).value == pytest.approx(1.0)

    def test_radial_zero_profile(self):
        assert radial_map_norm(IndicatorProfile(height=0.0), 2, LorentzIndex(2, 1)).value == 0.0

    def test_radial_log_profile(self):
        assert radial_map_norm(LogProfile(2), 2, LorentzIndex(2, 2)).value == pytest.approx(1.0)

    def test_radial_needs_dimension_two(self):
        with pytest.raises(ValueError):
            radial_map_norm(LogProfile(2), 1, LorentzIndex(2, 2))

    def test_monotone_range(self):
        # the log profile is nonincreasing only up to t = e^(1 - N)
        g = LogProfile(2)
        assert g.log_monotone_limit == pytest.approx(-1.0)
        assert g.is_monotone(log_upper=g.log_monotone_limit)
        assert not g.is_monotone()

    def test_truncation_scales_norm(self):
        g = LogProfile(2)
        full = lorentz_norm(g, LorentzIndex(2, 2)).value
        trunc = lorentz_norm(TruncatedProfile(g, -5.0), LorentzIndex(2, 2)).value
        # int over t < e^-5 of (log(e/t))^-2 dt/t = 1/6
        assert trunc == pytest.approx(math.sqrt(1 / 6), rel=1e-12)
        assert trunc < full

    def test_profile_dict_round_trip(self):
        g = profile_from_dict(LogProfile(3, 2.0).to_dict())
        assert isinstance(g, LogProfile) and g.dim == 3 and g.beta == 2.0
        with pytest.raises(ValueError):
            profile_from_dict({"name": "nope"})
