import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipsharp.capacity import (
    BumpSpec,
    NotDegenerateError,
    bump_lip,
    eval_bump,
    lip_constant,
    lip_field_norm,
    make_bump,
    u_value,
)
from lipsharp.dyadic import Dyadic
from lipsharp.lorentz import IndicatorProfile, LogProfile, LorentzIndex, radial_map_norm, unit_ball_volume


def point_at(b, rho, angle=0.3):
    return b.center_float + rho * np.array([math.cos(angle), math.sin(angle)])


class TestPotential:
    @pytest.mark.parametrize("r", [0.0, 0.01, 0.25, 0.9, 1.0])
    def test_indicator_closed_form(self, r):
        assert u_value(IndicatorProfile(), 2, r) == pytest.approx(2 * (1 - math.sqrt(r)), abs=1e-12)

    @pytest.mark.parametrize("r", [1e-300, 1e-12, 0.01, 0.3])
    def test_log_profile_closed_form(self, r):
        assert u_value(LogProfile(2), 2, r) == pytest.approx(math.log(math.log(math.e / r)), rel=1e-12)

    def test_empty_integral(self):
        assert u_value(LogProfile(2), 2, 1.0) == 0.0

    def test_degenerate_at_zero(self):
        assert u_value(LogProfile(2), 2, 0.0) == math.inf

    @settings(max_examples=50)
    @given(st.floats(1e-200, 0.5), st.floats(1e-200, 0.5))
    def test_nonincreasing(self, r1, r2):
        lo, hi = sorted((r1, r2))
        g = LogProfile(2)
        assert u_value(g, 2, lo) >= u_value(g, 2, hi)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            u_value(LogProfile(2), 2, 2.0)


class TestMakeBump:
    def test_constants(self, small_bump):
        b = small_bump
        assert b.C_N == pytest.approx(2 * math.sqrt(math.pi))
        assert b.Lam == pytest.approx(b.lam * b.u_outer, rel=1e-12)
        assert 1 / b.lam == pytest.approx(b.u_inner - b.u_outer, rel=1e-12)
        assert b.log_delta < math.log(0.05)
        # golden: delta is astronomically small for the log profile
        assert float(b.log_delta) == pytest.approx(-1.32e24, rel=0.01)

    def test_lambda_matches_potential_oracle(self, small_bump):
        b = small_bump
        t1 = unit_ball_volume(2) * 0.05 ** 2
        assert b.u_outer == pytest.approx(math.log(math.log(math.e / t1)), rel=1e-12)
        # u(Omega delta^2) from log delta without forming delta
        log_t0 = math.log(math.pi) + 2 * float(b.log_delta)
        assert b.u_inner == pytest.approx(math.log(1 - log_t0), rel=1e-12)

    def test_budget_verified(self, small_bump):
        assert small_bump.verified_norm <= 0.05
        assert lip_field_norm(small_bump) == pytest.approx(small_bump.verified_norm)

    def test_norm_identity_upper_bound(self, small_bump):
        b = small_bump
        full = radial_map_norm(LogProfile(2), 2, LorentzIndex(2, 2)).value
        assert b.norm_bound <= b.C_N * b.lam * full
        assert b.verified_norm <= b.norm_bound * (1 + 1e-6)

    def test_zero_height(self):
        b = make_bump(BumpSpec((0, 0), 0.1, 0.0, 2, LogProfile(2), 0.05))
        pts = np.random.default_rng(1).uniform(-0.1, 0.1, (100, 2))
        assert np.all(b.values(pts) == 0) and np.all(b.lip(pts) == 0)
        assert lip_field_norm(b) == 0.0

    def test_bounded_profile_rejected(self):
        with pytest.raises(NotDegenerateError, match="not capacity-degenerate"):
            make_bump(BumpSpec((0, 0), 0.1, 1.0, 2, IndicatorProfile(), 0.01))

    def test_eps_outside_monotone_range(self):
        with pytest.raises(ValueError):
            make_bump(BumpSpec((0, 0), 1.5, 1.0, 2, LogProfile(2), 0.05))

    @pytest.mark.parametrize("bad", [dict(eps=0.0), dict(tau=1.5), dict(norm_budget=0.0), dict(N=1)])
    def test_spec_validation(self, bad):
        kw = dict(center=(0, 0), eps=0.1, tau=1.0, N=2, profile=LogProfile(2), norm_budget=0.05)
        kw.update(bad)
        if "N" in bad:
            kw["center"] = (0,)
        with pytest.raises(ValueError):
            BumpSpec(**kw)

    def test_smaller_budget_means_smaller_delta_and_norm(self):
        prev = None
        for budget in (0.2, 0.1, 0.05, 0.02):
            b = make_bump(BumpSpec((0, 0), 0.1, 1.0, 2, LogProfile(2), budget))
            if prev is not None:
                assert b.log_delta <= prev.log_delta
                assert b.lam <= prev.lam
                assert b.verified_norm <= prev.verified_norm * (1 + 1e-9)
            prev = b

    def test_tiny_budget_reachable(self):
        b = make_bump(BumpSpec((0, 0), 0.1, 1.0, 2, LogProfile(2), 1e-6), verify=False)
        assert b.norm_bound <= 1e-6

    def test_tau_scaling(self):
        half = make_bump(BumpSpec((0, 0), 0.1, 0.5, 2, LogProfile(2), 0.05))
        assert eval_bump(half, (0, 0)) == 0.5
        pts = np.random.default_rng(3).uniform(-0.05, 0.05, (200, 2))
        assert np.all(half.values(pts) <= 0.5)
        # value = tau * (lam u - Lam)
        x = point_at(half, 0.02)
        u = math.log(math.log(math.e / (math.pi * 0.02 ** 2)))
        assert eval_bump(half, x) == pytest.approx(0.5 * (half.lam * u - half.Lam), rel=1e-12)


class TestEvaluation:
    def test_center_and_outside(self, small_bump):
        b = small_bump
        assert eval_bump(b, (0, 0)) == 1.0
        # 2^-1000 is far outside delta, yet exact dyadic input still resolves it
        log_t = math.log(math.pi) - 2000 * math.log(2)
        want = b.lam * math.log(1 - log_t) - b.Lam
        assert eval_bump(b, (Dyadic.pow2(-1000), 0)) == pytest.approx(want, rel=1e-12)
        assert eval_bump(b, point_at(b, 0.05)) == pytest.approx(0.0, abs=1e-12)
        assert eval_bump(b, point_at(b, 0.06)) == 0.0
        assert bump_lip(b, point_at(b, 0.06)) == 0.0

    def test_continuity(self, small_bump):
        b = small_bump
        ld = float(b.log_delta)
        inside = b.value_at_log_radius(ld * (1 + 1e-15))
        at = b.value_at_log_radius(ld)
        outside = b.value_at_log_radius(ld * (1 - 1e-15))
        assert abs(inside - at) <= 1e-9 and abs(outside - at) <= 1e-9
        lo = math.log(0.05)
        assert abs(b.value_at_log_radius(lo - 1e-12)) <= 1e-9
        assert b.value_at_log_radius(lo + 1e-12) == 0.0

    def test_range_and_radial_monotonicity(self, small_bump):
        b = small_bump
        rho = np.concatenate([[0], np.geomspace(1e-300, 0.2, 4000)])
        for ang in np.linspace(0, 2 * math.pi, 7):
            pts = b.center_float + rho[:, None] * np.array([math.cos(ang), math.sin(ang)])
            v = b.values(pts)
            assert np.all((v >= 0) & (v <= 1))
            assert np.all(np.diff(v) <= 1e-15)

    def test_lip_zero_inside_plateau(self, small_bump):
        assert bump_lip(small_bump, (0, 0)) == 0.0
        assert small_bump.lip_at_log_radius(float(small_bump.log_delta) * 1.01) == 0.0

    @pytest.mark.parametrize("rho", [0.0125, 0.025, 0.04])
    def test_finite_difference_slope(self, small_bump, rho):
        b = small_bump
        h = rho * 1e-5
        slope = (b.value_at_log_radius(math.log(rho - h)) - b.value_at_log_radius(math.log(rho + h))) / (2 * h)
        assert slope == pytest.approx(bump_lip(b, point_at(b, rho)), rel=1e-4)

    def test_lip_formula(self, small_bump):
        b = small_bump
        rho = 0.025
        t = math.pi * rho ** 2
        g = t ** -0.5 / math.log(math.e / t)
        assert bump_lip(b, point_at(b, rho)) == pytest.approx(b.C_N * b.lam * g, rel=1e-12)

    def test_slope_consistency(self, small_bump):
        b = small_bump
        rng = np.random.default_rng(7)
        for _ in range(500):
            x, y = rng.uniform(-0.06, 0.06, (2, 2))
            d = y - x
            s = np.clip(-(x @ d) / (d @ d), 0, 1)
            closest = np.hypot(*(x + s * d))
            sup_lip = float(b.lip_at_log_radius(math.log(closest))) if closest > 0 else math.inf
            if closest >= 0.05:
                sup_lip = 0.0
            diff = abs(float(b.values(x)) - float(b.values(y)))
            assert diff <= sup_lip * np.hypot(*d) * (1 + 1e-9) + 1e-15

    def test_translation(self, small_bump):
        c = (Dyadic(1, 2), Dyadic(-3, 3))
        t = small_bump.translated(c)
        off = np.array([0.01, -0.02])
        assert float(t.values(t.center_float + off)) == pytest.approx(float(small_bump.values(off)))

    def test_to_dict(self, small_bump):
        d = small_bump.to_dict()
        assert d["lambda"] == small_bump.lam and d["C_N"] == lip_constant(2)
        assert d["delta"] == 0.0 and d["log_delta"].startswith("-1.3")
