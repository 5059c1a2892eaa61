import math

import numpy as np
import pytest

from colfuse import (
    InputError,
    KernelParams,
    Observation,
    SingularSystemError,
    SoundingGeometry,
    SpaceTimePoint,
    combine_ancillary,
    normalize_point,
    solve_kriging,
)
from colfuse.covariance import build_cov, kernel_value, points_array, scaled_distance_matrix

from conftest import random_observations, random_points, simple_geometry


def _augmented_oracle(obs, target, params):
    """Independent dense solve of the (p+1) saddle system."""
    pts = points_array([o.point for o in obs])
    noise = np.array([o.noise_sd for o in obs])
    p = len(obs)
    sigma = kernel_value(params, scaled_distance_matrix(pts, pts, params))
    sigma[np.arange(p), np.arange(p)] += params.nugget + noise**2
    c0 = kernel_value(params, scaled_distance_matrix(pts, points_array([target]), params))[:, 0]
    aug = np.zeros((p + 1, p + 1))
    aug[:p, :p] = sigma
    aug[:p, p] = 1.0
    aug[p, :p] = 1.0
    rhs = np.append(c0, 1.0)
    sol = np.linalg.solve(aug, rhs)
    return sol[:p], sol[p]


class TestSolveKriging:
    def test_single_observation_forces_unit_weight(self, exp_params):
        obs = [Observation(SpaceTimePoint(10.0, 20.0, 0.0), 407.3, 0.4, 1)]
        sol = solve_kriging(obs, SpaceTimePoint(30.0, -5.0, 1.0), exp_params)
        assert sol.weights.tolist() == [1.0]
        assert sol.prediction == 407.3

    def test_mirror_symmetric_pair_splits_evenly(self, exp_params):
        target = SpaceTimePoint(0.0, 0.0, 0.0)
        obs = [
            Observation(SpaceTimePoint(0.0, -3.0, 0.0), 401.0, 0.5, 1),
            Observation(SpaceTimePoint(0.0, 3.0, 0.0), 403.0, 0.5, 1),
        ]
        sol = solve_kriging(obs, target, exp_params)
        np.testing.assert_allclose(sol.weights, [0.5, 0.5], atol=1e-12)
        assert abs(sol.prediction - 402.0) < 1e-10

    def test_five_points_match_augmented_solve(self):
        params = KernelParams("exponential", 1.3, 400.0, 2.0, 0.05)
        obs = [
            Observation(normalize_point(0.0, lon, 0.1 * lon), 400.0 + lon, 0.2 + 0.02 * k, 1)
            for k, lon in enumerate((-10.0, -5.0, 0.0, 5.0, 10.0))
        ]
        target = normalize_point(1.0, 2.0, 0.3)
        sol = solve_kriging(obs, target, params)
        w_oracle, lam_oracle = _augmented_oracle(obs, target, params)
        np.testing.assert_allclose(sol.weights, w_oracle, atol=1e-9)
        assert abs(sol.lagrange - lam_oracle) < 1e-9

    def test_exactness_at_noise_free_point(self):
        params = KernelParams("matern32", 1.0, 300.0, 2.0, nugget=0.0)
        rng = np.random.default_rng(4)
        obs = [
            Observation(p, float(rng.normal(400, 1)), 0.0, 1)
            for p in random_points(rng, 8, day_span=0.5)
        ]
        for k in (0, 3, 7):
            sol = solve_kriging(obs, obs[k].point, params)
            assert abs(sol.prediction - obs[k].value) < 1e-8
            assert sol.prediction_variance < 1e-8

    def test_weight_sum_and_variance_on_random_instances(self, rng):
        params = KernelParams("exponential", 0.8, 350.0, 1.5, 0.02)
        for n in (3, 20, 200):
            obs = random_observations(rng, n)
            target = random_points(rng, 1)[0]
            sol = solve_kriging(obs, target, params)
            assert abs(math.fsum(sol.weights.tolist()) - 1.0) <= 1e-10
            assert sol.prediction_variance >= -1e-9

    def test_permutation_equivariance(self, rng):
        params = KernelParams("matern32", 1.0, 400.0, 2.0, 0.1)
        obs = random_observations(rng, 12)
        target = random_points(rng, 1)[0]
        base = solve_kriging(obs, target, params)
        perm = rng.permutation(12)
        permuted = solve_kriging([obs[i] for i in perm], target, params)
        np.testing.assert_allclose(permuted.weights, base.weights[perm], atol=1e-12)
        assert abs(permuted.prediction - base.prediction) < 1e-12
        assert abs(permuted.prediction_variance - base.prediction_variance) < 1e-12

    def test_duplicate_noise_free_points_named(self, exp_params):
        pt = SpaceTimePoint(5.0, 5.0, 0.5)
        obs = [
            Observation(SpaceTimePoint(0.0, 0.0, 0.0), 400.0, 0.3, 1),
            Observation(pt, 401.0, 0.0, 1),
            Observation(pt, 402.0, 0.0, 1),
        ]
        with pytest.raises(SingularSystemError, match="1 and 2"):
            solve_kriging(obs, SpaceTimePoint(1.0, 1.0, 0.0), exp_params)

    def test_empty_observations_rejected(self, exp_params):
        with pytest.raises(InputError):
            solve_kriging([], SpaceTimePoint(0, 0, 0), exp_params)

    def test_variance_formula_against_direct_evaluation(self, rng):
        params = KernelParams("exponential", 1.1, 300.0, 1.0, 0.05)
        obs = random_observations(rng, 9)
        target = random_points(rng, 1)[0]
        sol = solve_kriging(obs, target, params)
        pts = points_array([o.point for o in obs])
        noise = np.array([o.noise_sd for o in obs])
        sigma = build_cov(pts, None, params, noise_sd=noise)
        c0 = kernel_value(params, scaled_distance_matrix(pts, points_array([target]), params))[:, 0]
        a = sol.weights
        direct = (params.sill + params.nugget) - 2 * a @ c0 + a @ sigma @ a
        assert abs(sol.prediction_variance - direct) < 1e-12


class TestCombineAncillary:
    def test_identity_weight(self):
        g = simple_geometry()
        out = combine_ancillary([1.0], [g])
        np.testing.assert_array_equal(out.weighting, g.weighting)
        np.testing.assert_array_equal(out.averaging_kernel, g.averaging_kernel)

    def test_even_average(self):
        g1 = simple_geometry(prior=398.0)
        g2 = simple_geometry(prior=402.0)
        out = combine_ancillary([0.5, 0.5], [g1, g2])
        np.testing.assert_allclose(out.prior_profile, np.full(3, 400.0))

    def test_weighted_elementwise_recomputation(self):
        p = np.array([1000.0, 600.0, 200.0])
        g1 = SoundingGeometry(p, np.array([398.0, 399.0, 400.0]), np.array([0.3, 0.4, 0.3]), 0.9 * np.eye(3))
        g2 = SoundingGeometry(p, np.array([402.0, 403.0, 404.0]), np.array([0.2, 0.5, 0.3]), 0.7 * np.eye(3))
        out = combine_ancillary([0.25, 0.75], [g1, g2])
        np.testing.assert_allclose(out.prior_profile, 0.25 * g1.prior_profile + 0.75 * g2.prior_profile)
        np.testing.assert_allclose(out.weighting, 0.25 * g1.weighting + 0.75 * g2.weighting, atol=1e-15)
        np.testing.assert_allclose(
            out.averaging_kernel, 0.25 * g1.averaging_kernel + 0.75 * g2.averaging_kernel
        )
        assert abs(math.fsum(out.weighting.tolist()) - 1.0) <= 1e-9

    def test_level_count_mismatch_rejected(self):
        with pytest.raises(InputError):
            combine_ancillary([0.5, 0.5], [simple_geometry(3), simple_geometry(4)])

    def test_weights_must_sum_to_one(self):
        with pytest.raises(InputError):
            combine_ancillary([0.5, 0.6], [simple_geometry(), simple_geometry()])
