import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from colfuse import (
    EARTH_RADIUS_KM,
    InputError,
    KernelParams,
    SpaceTimePoint,
    build_cov,
    kernel_value,
    normalize_point,
    scaled_distance,
)
from colfuse.covariance import points_array, scaled_distance_matrix

from conftest import random_points


class TestScaledDistance:
    def test_zero_at_identical_points(self, exp_params):
        p = SpaceTimePoint(12.0, 34.0, 5.0)
        assert scaled_distance(p, p, exp_params) == 0.0

    def test_one_at_temporal_range(self, exp_params):
        a = SpaceTimePoint(12.0, 34.0, 0.0)
        b = SpaceTimePoint(12.0, 34.0, exp_params.temporal_range_days)
        assert scaled_distance(a, b, exp_params) == 1.0

    def test_antipodal_equatorial_points(self):
        # great-circle arithmetic: half circumference = pi * R, so with
        # spatial_range = pi * R the scaled separation is exactly 1
        params = KernelParams("exponential", 1.0, EARTH_RADIUS_KM * math.pi, 1.0)
        a = SpaceTimePoint(0.0, 0.0, 0.0)
        b = SpaceTimePoint(0.0, -180.0, 0.0)
        assert abs(scaled_distance(a, b, params) - 1.0) < 1e-12

    def test_symmetry(self, exp_params, rng):
        pts = random_points(rng, 20)
        for a, b in zip(pts[:10], pts[10:]):
            assert scaled_distance(a, b, exp_params) == scaled_distance(b, a, exp_params)

    def test_triangle_inequality_fixed_time(self, exp_params, rng):
        for _ in range(50):
            a, b, c = random_points(rng, 3, day_span=0.0)
            dab = scaled_distance(a, b, exp_params)
            dbc = scaled_distance(b, c, exp_params)
            dac = scaled_distance(a, c, exp_params)
            assert dac <= dab + dbc + 1e-12


class TestKernelValue:
    def test_exponential_closed_form(self):
        params = KernelParams("exponential", 1.0, 100.0, 1.0)
        assert kernel_value(params, 0.0) == 1.0
        assert abs(kernel_value(params, 1.0) - math.exp(-1.0)) < 1e-15

    def test_matern_at_zero(self):
        params = KernelParams("matern32", 2.0, 100.0, 1.0)
        assert kernel_value(params, 0.0) == 2.0

    def test_rejects_negative_distance(self, exp_params):
        with pytest.raises(InputError):
            kernel_value(exp_params, -0.5)

    @given(
        st.sampled_from(["exponential", "matern32"]),
        st.floats(0.0, 50.0),
        st.floats(0.0, 50.0),
    )
    def test_monotone_nonincreasing(self, family, d1, d2):
        params = KernelParams(family, 1.7, 100.0, 1.0)
        lo, hi = sorted((d1, d2))
        assert kernel_value(params, hi) <= kernel_value(params, lo)
        assert kernel_value(params, hi) > 0.0
        assert kernel_value(params, lo) <= params.sill


class TestBuildCov:
    def test_single_point_diagonal_composition(self):
        params = KernelParams("exponential", 1.0, 100.0, 1.0, nugget=0.1)
        pts = [SpaceTimePoint(0.0, 0.0, 0.0)]
        cov = build_cov(pts, None, params, noise_sd=np.array([0.5]))
        assert cov.shape == (1, 1)
        assert abs(cov[0, 0] - 1.35) < 1e-15

    def test_duplicate_points_rank_deficient(self):
        params = KernelParams("exponential", 2.0, 100.0, 1.0, nugget=0.3)
        pts = [SpaceTimePoint(5.0, 5.0, 1.0), SpaceTimePoint(5.0, 5.0, 1.0)]
        cov = build_cov(pts, None, params)
        assert cov[0, 0] == cov[1, 1] == 2.3
        assert cov[0, 1] == cov[1, 0] == 2.0
        nonug = build_cov(pts, None, KernelParams("exponential", 2.0, 100.0, 1.0))
        assert np.linalg.matrix_rank(nonug) == 1

    def test_matches_elementwise_recomputation(self, exp_params, rng):
        pts = random_points(rng, 6)
        cov = build_cov(pts, None, exp_params)
        for i in range(6):
            for j in range(6):
                d = scaled_distance(pts[i], pts[j], exp_params)
                expected = kernel_value(exp_params, d)
                if i == j:
                    expected += exp_params.nugget
                assert abs(cov[i, j] - expected) < 1e-14

    def test_cross_block_rejects_noise(self, exp_params, rng):
        a = random_points(rng, 3)
        b = random_points(rng, 2)
        with pytest.raises(InputError):
            build_cov(a, b, exp_params, noise_sd=np.ones(3))
        cross = build_cov(a, b, exp_params)
        assert cross.shape == (3, 2)

    def test_bitwise_symmetry(self, rng):
        params = KernelParams("matern32", 1.3, 420.0, 1.7, 0.05)
        pts = random_points(rng, 40)
        cov = build_cov(pts, None, params, noise_sd=rng.uniform(0.1, 1.0, 40))
        assert np.array_equal(cov, cov.T)

    def test_psd_with_nugget(self, rng):
        params = KernelParams("exponential", 1.0, 300.0, 2.0, nugget=0.05)
        for n in (10, 50, 200):
            pts = random_points(rng, n)
            cov = build_cov(pts, None, params)
            eigmin = float(np.linalg.eigvalsh(cov).min())
            assert eigmin > -1e-8 * params.sill


def test_distance_matrix_matches_scalar(exp_params, rng):
    a = points_array(random_points(rng, 5))
    b = points_array(random_points(rng, 4))
    mat = scaled_distance_matrix(a, b, exp_params)
    for i in range(5):
        for j in range(4):
            pa = SpaceTimePoint(*a[i])
            pb = SpaceTimePoint(*b[j])
            assert mat[i, j] == scaled_distance(pa, pb, exp_params)
