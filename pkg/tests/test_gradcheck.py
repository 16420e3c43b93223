import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from lipsharp import suite
from lipsharp.gradcheck import (
    GridField,
    PolyCurve,
    _ball_sums,
    chain_inequality,
    grid_lorentz_norm,
    hajlasz_pair_check,
    maximal_function,
    maximal_lorentz_ratio,
    minimal_hajlasz_constant,
    random_pairs,
    random_polyline,
    segment_integral,
    sphere_breakpoints,
)
from lipsharp.lorentz import LorentzIndex, StepFunction, lorentz_norm

fields = arrays(float, (9, 9), elements=st.floats(0, 10))


@pytest.fixture(scope="module")
def bump_case():
    return suite.bump_grid_case(201, 1.0, 10_000, 0)


class TestGridField:
    def test_shape_checks(self):
        with pytest.raises(ValueError):
            GridField(np.zeros((3, 4)))
        with pytest.raises(ValueError):
            GridField(np.array([[0, np.nan], [1, 1]]))

    def test_nodes(self):
        g = GridField(np.zeros((5, 5)))
        assert g.h == 0.5 and g.points()[0, 4].tolist() == [-1.0, 1.0]

    def test_interpolation_exact_on_linear(self):
        g = GridField.from_function(lambda p: 3 * p[..., 0] - p[..., 1], 11)
        pts = np.random.default_rng(0).uniform(-1, 1, (50, 2))
        assert np.allclose(g(pts), 3 * pts[:, 0] - pts[:, 1])

    def test_csv_round_trip(self, tmp_path):
        g = GridField(np.random.default_rng(1).random((6, 6)))
        g.to_csv(tmp_path / "f.csv")
        assert (tmp_path / "f.csv").read_text().splitlines()[0] == "i_0,i_1,value"
        assert np.array_equal(GridField.from_csv(tmp_path / "f.csv").values, g.values)

    def test_csv_incomplete(self, tmp_path):
        (tmp_path / "f.csv").write_text("i_0,i_1,value\n0,0,1\n1,1,2\n")
        with pytest.raises(ValueError):
            GridField.from_csv(tmp_path / "f.csv")


class TestCurves:
    def test_length(self):
        c = PolyCurve(np.array([[0, 0], [3, 4], [3, 0]]))
        assert c.length == 9.0
        assert np.allclose(c(np.array([0, 5, 7])), [[0, 0], [3, 4], [3, 2]])

    def test_repeated_points_rejected(self):
        with pytest.raises(ValueError):
            PolyCurve(np.array([[0, 0], [0, 0]]))

    def test_random_polyline_dyadic(self):
        c = random_polyline(np.random.default_rng(2), box=0.3)
        assert np.all(np.abs(c.points) <= 0.3)
        assert np.all(c.points * 2**12 == np.round(c.points * 2**12))

    def test_segment_integral_oracle(self):
        val, ok = segment_integral(lambda p: p[..., 0] ** 2, [0, 0], [1, 0])
        assert ok and val == pytest.approx(1 / 3, rel=1e-9)

    def test_sphere_breakpoints(self):
        hook = sphere_breakpoints((0, 0), [0.5])
        ts = sorted(hook(np.array([-1.0, 0.0]), np.array([1.0, 0.0])))
        assert ts == pytest.approx([0.25, 0.5, 0.75])


class TestChaining:
    def test_constant(self):
        c = random_polyline(np.random.default_rng(3))
        r = chain_inequality(lambda p: np.ones(len(p)), lambda p: np.zeros(len(p)), c)
        assert r.lhs == 0 and r.passed

    def test_linear_slack_four(self):
        c = PolyCurve(np.array([[-0.5, 0.1], [0.5, 0.1]]))
        r = chain_inequality(lambda p: p[:, 0], lambda p: np.ones(len(p)), c, n=16)
        assert r.lhs == pytest.approx(1.0) and r.integral == pytest.approx(1.0)
        assert r.slack == pytest.approx(4.0) and r.passed and r.step_violations == 0

    def test_infinite_integral_vacuous(self):
        c = PolyCurve(np.array([[0.0, 0.0], [1.0, 0.0]]))
        r = chain_inequality(lambda p: p[:, 0], lambda p: np.full(len(p), np.inf), c)
        assert r.vacuous and r.passed

    def test_bump_polylines(self, wide_bump):
        rng = np.random.default_rng(4)
        hook = sphere_breakpoints((0, 0), [0.25])
        for _ in range(10):
            r = chain_inequality(wide_bump.values, wide_bump.lip, random_polyline(rng, box=0.3), 64,
                                 breakpoints=hook)
            assert r.passed and r.converged and r.step_violations == 0

    def test_lhs_independent_of_n(self, wide_bump):
        c = random_polyline(np.random.default_rng(5), box=0.3)
        hook = sphere_breakpoints((0, 0), [0.25])
        reps = [chain_inequality(wide_bump.values, wide_bump.lip, c, n, breakpoints=hook) for n in (8, 64, 512)]
        assert len({r.lhs for r in reps}) == 1
        assert reps[-1].bound == pytest.approx(reps[0].bound, rel=1e-7)

    def test_grid_field_as_gradient(self):
        f = GridField.from_function(lambda p: np.sin(p[..., 0]) * p[..., 1], 41)
        g = GridField.from_function(lambda p: np.hypot(np.cos(p[..., 0]) * p[..., 1], np.sin(p[..., 0])), 41)
        for seed in range(5):
            c = random_polyline(np.random.default_rng(seed))
            assert chain_inequality(f, g, c, 32).passed


class TestMaximal:
    def test_constant(self):
        g = GridField(np.full((21, 21), 2.5))
        for q in (1, 2):
            assert np.allclose(maximal_function(g, q, [0.1, 0.5, 2.0]).values, 2.5)

    def test_single_cell_decay(self):
        v = np.zeros((41, 41))
        v[20, 20] = 1.0
        g = GridField(v)
        for k in (2, 4, 8):
            M = maximal_function(g, 2, [k * g.h])
            count = sum(1 for a in range(-k, k + 1) for b in range(-k, k + 1) if a * a + b * b <= k * k)
            assert M.values[20, 20] == pytest.approx(1.0)  # the node itself
            # a neighbour sees the cell only through the ball
            assert M.values[20, 21] == pytest.approx((1 / count) ** 0.5)

    def test_rejects_bad_input(self):
        g = GridField(np.ones((5, 5)))
        for radii in ([], [0.0], [10.0]):
            with pytest.raises(ValueError):
                maximal_function(g, 1, radii)
        with pytest.raises(ValueError):
            maximal_function(g, 0.5, [0.5])

    @settings(max_examples=40, deadline=None)
    @given(fields, st.floats(0.2, 2.5))
    def test_ball_sums_match_convolution(self, arr, r):
        h = 2 / 8
        m = int(r / h)
        yy, xx = np.mgrid[-m:m + 1, -m:m + 1]
        kern = (xx * xx + yy * yy <= (r / h) ** 2 + 1e-9).astype(float)
        ref = ndimage.correlate(arr, kern, mode="constant")
        assert np.allclose(_ball_sums(arr, r / h), ref, rtol=1e-12, atol=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(fields)
    def test_dominates_and_power_mean(self, arr):
        g = GridField(arr)
        radii = [0.25, 0.6, 1.3]
        M1, M2 = maximal_function(g, 1, radii), maximal_function(g, 2, radii)
        assert np.all(M1.values >= g.values * (1 - 1e-12))
        assert np.all(M1.values <= M2.values * (1 + 1e-12) + 1e-12)

    def test_lorentz_ratio_finite(self):
        rng = np.random.default_rng(6)
        g = GridField(rng.random((41, 41)))
        ratio = maximal_lorentz_ratio(g, 1, [0.1, 0.3])
        assert 1.0 <= ratio < math.inf

    def test_grid_lorentz_matches_step_norm(self):
        vals = np.array([3.0, 0.0, 1.0, 2.0])
        f = StepFunction.from_pieces([0.25] * 4, [3, 0, 1, 2])
        assert grid_lorentz_norm(vals, 0.25, 2, 1) == pytest.approx(lorentz_norm(f, LorentzIndex(2, 1)).value)


class TestHajlasz:
    def test_constant_function(self):
        f = GridField(np.full((11, 11), 4.0))
        M = GridField(np.zeros((11, 11)))
        pairs = random_pairs(f, 200, np.random.default_rng(0))
        assert hajlasz_pair_check(f, M, pairs, 0.0) == []
        assert minimal_hajlasz_constant(f, M, pairs) == 0.0

    def test_one_lipschitz(self):
        f = GridField.from_function(lambda p: np.abs(p[..., 0] - 0.3) + 0 * p[..., 1], 21)
        g = GridField(np.ones((21, 21)))
        M = maximal_function(g, 1, [0.2])
        pairs = random_pairs(f, 2000, np.random.default_rng(1))
        assert hajlasz_pair_check(f, M, pairs, 1.0) == []

    def test_pairs_distinct(self):
        p = random_pairs(GridField(np.ones((3, 3))), 500, np.random.default_rng(2))
        assert p.shape == (500, 2) and np.all(p[:, 0] != p[:, 1])

    def test_bump_random_pairs_constant_two(self, bump_case):
        c = bump_case
        assert hajlasz_pair_check(c["f"], c["M"], c["pairs"], 2.0) == []

    def test_bump_minimal_constant_golden(self, bump_case):
        c = bump_case
        C = minimal_hajlasz_constant(c["f"], c["M"], c["pairs"])
        assert C == pytest.approx(0.4513833292630272, rel=1e-9)
        assert hajlasz_pair_check(c["f"], c["M"], c["pairs"], C) == []
        assert hajlasz_pair_check(c["f"], c["M"], c["pairs"], C * (1 - 1e-9))

    def test_center_node_needs_larger_constant(self, bump_case):
        # the plateau and the steep drop of the bump sit inside one cell, so
        # pairs through the centre node see a tiny discrete maximal function
        c = bump_case
        n = c["f"].n
        center = (n // 2) * n + n // 2
        pairs = np.array([[center, center + d] for d in (1, -1, n, -n)])
        assert minimal_hajlasz_constant(c["f"], c["M"], pairs) > 2.0
