import math

import numpy as np
import pytest

from colfuse import (
    GridSpec,
    InputError,
    KernelParams,
    Observation,
    Raster,
    SpaceTimePoint,
    SurfaceClass,
    concat_instruments,
    effective_weights,
    fuse_day,
    normalize_point,
    sample_realizations,
    solve_kriging,
)
from colfuse.vecchia import SparsePrecision

from conftest import random_observations, simple_geometry


@pytest.fixture
def params_by_class():
    return {
        SurfaceClass.LAND: KernelParams("exponential", 1.0, 300.0, 2.0, 0.0),
        SurfaceClass.OCEAN: KernelParams("exponential", 1.0, 500.0, 2.0, 0.0),
    }


@pytest.fixture
def grid():
    return GridSpec(0.0, 5.0, 0.0, 5.0, 1.0, day=0)


@pytest.fixture
def mask():
    vals = np.zeros((5, 5), dtype=int)
    vals[:3, :] = 1  # southern three rows land, northern two ocean
    return Raster(0.0, 0.0, 1.0, vals)


def _obs_in(grid, mask, rng, n, noise=0.3):
    out = []
    for _ in range(n):
        pt = normalize_point(
            float(rng.uniform(grid.lat_min, grid.lat_max)),
            float(rng.uniform(grid.lon_min, grid.lon_max)),
            float(rng.uniform(grid.day, grid.day + 1)),
        )
        cls = SurfaceClass.LAND if mask.lookup(pt.lat, pt.lon) == 1 else SurfaceClass.OCEAN
        out.append(Observation(pt, float(rng.normal(400, 1)), noise, 1, True, cls))
    return out


class TestConcatInstruments:
    def test_block_order_preserved(self, rng):
        a = random_observations(rng, 3)
        b = random_observations(rng, 2)
        meta = concat_instruments([a, b])
        assert len(meta) == 5
        assert meta.instrument_sizes == (3, 2)
        assert list(meta.observations[:3]) == a
        assert list(meta.observations[3:]) == b

    def test_empty_second_dataset(self, rng):
        a = random_observations(rng, 4)
        meta = concat_instruments([a, []])
        assert list(meta.observations) == a
        assert meta.instrument_sizes == (4, 0)

    def test_requires_one_dataset(self):
        with pytest.raises(InputError):
            concat_instruments([])

    def test_fusion_equals_concatenation_for_kriging(self, rng, exp_params):
        a = random_observations(rng, 6)
        b = random_observations(rng, 5)
        target = SpaceTimePoint(0.0, 0.0, 1.0)
        split = concat_instruments([a, b])
        joint = concat_instruments([a + b])
        sol_split = solve_kriging(list(split.observations), target, exp_params)
        sol_joint = solve_kriging(list(joint.observations), target, exp_params)
        assert sol_split.prediction == sol_joint.prediction
        assert np.array_equal(sol_split.weights, sol_joint.weights)


class TestEffectiveWeights:
    def test_single_observation(self, exp_params):
        cell = SpaceTimePoint(0.5, 0.5, 0.5)
        obs = [Observation(SpaceTimePoint(1.0, 1.0, 0.2), 400.0, 0.3, 1)]
        np.testing.assert_array_equal(effective_weights(cell, obs, exp_params, m=5), [1.0])

    def test_two_symmetric_observations(self, exp_params):
        cell = SpaceTimePoint(0.0, 0.0, 0.0)
        obs = [
            Observation(SpaceTimePoint(0.0, -2.0, 0.0), 400.0, 0.4, 1),
            Observation(SpaceTimePoint(0.0, 2.0, 0.0), 402.0, 0.4, 1),
        ]
        np.testing.assert_allclose(effective_weights(cell, obs, exp_params, m=2), [0.5, 0.5], atol=1e-12)

    def test_matches_dense_kriging_weights(self, rng):
        params = KernelParams("matern32", 1.1, 350.0, 2.0, 0.05)
        obs = random_observations(rng, 14)
        cell = SpaceTimePoint(1.0, -2.0, 0.7)
        w = effective_weights(cell, obs, params, m=14)
        sol = solve_kriging(obs, cell, params)
        np.testing.assert_allclose(w, sol.weights, atol=1e-9)
        assert abs(math.fsum(w.tolist()) - 1.0) <= 1e-9

    def test_truncated_weights_still_sum_to_one(self, rng):
        params = KernelParams("exponential", 1.0, 200.0, 1.0, 0.0)
        obs = random_observations(rng, 40)
        w = effective_weights(SpaceTimePoint(0.0, 0.0, 1.0), obs, params, m=5)
        assert abs(math.fsum(w.tolist()) - 1.0) <= 1e-9


class TestFuseDay:
    def test_zero_observations_prior_fallback(self, params_by_class, grid, mask):
        meta = concat_instruments([[]])
        product = fuse_day(meta, grid, mask, params_by_class, m=5, mean_ppm=402.5)
        assert product.warnings
        for est in product.land + product.ocean:
            assert est.value == 402.5
            assert abs(est.sd - 1.0) < 0.05  # sqrt(sill + nugget) = 1, far-apart cells
            assert est.n_contributing == 0 and est.geometry is None

    def test_single_noise_free_observation_interpolates(self, params_by_class, grid, mask):
        center = grid.cell_center(0)
        meta = concat_instruments([[Observation(center, 405.0, 0.0, 1, True, SurfaceClass.LAND)]])
        product = fuse_day(meta, grid, mask, params_by_class, m=4, mean_ppm=400.0)
        cell0 = product.land[0]
        assert cell0.grid_index == 0
        assert abs(cell0.value - 405.0) < 1e-9
        assert cell0.sd <= 1e-5

    def test_dense_oracle_at_saturation(self, params_by_class, mask, rng):
        grid = GridSpec(0.0, 5.0, 0.0, 5.0, 1.0, day=0)
        obs = _obs_in(grid, mask, rng, 40)
        meta = concat_instruments([obs])
        p_land = sum(o.surface_class is SurfaceClass.LAND for o in obs)
        product = fuse_day(meta, grid, mask, params_by_class, m=max(p_land, 40), mean_ppm=400.0)
        land_obs = [o for o in obs if o.surface_class is SurfaceClass.LAND]
        for est in product.land:
            sol = solve_kriging(land_obs, est.center, params_by_class[SurfaceClass.LAND])
            assert abs(est.value - sol.prediction) < 1e-6

    def test_land_ocean_bitwise_separation(self, params_by_class, grid, mask, rng):
        obs = _obs_in(grid, mask, rng, 30)
        meta_a = concat_instruments([obs])
        perturbed = [
            Observation(
                o.point,
                o.value + (11.0 if o.surface_class is SurfaceClass.OCEAN else 0.0),
                o.noise_sd, o.instrument_id, o.quality_flag, o.surface_class,
            )
            for o in obs
        ]
        meta_b = concat_instruments([perturbed])
        pa = fuse_day(meta_a, grid, mask, params_by_class, m=8, mean_ppm=400.0)
        pb = fuse_day(meta_b, grid, mask, params_by_class, m=8, mean_ppm=400.0)
        assert all(x.value == y.value and x.sd == y.sd for x, y in zip(pa.land, pb.land))
        assert any(x.value != y.value for x, y in zip(pa.ocean, pb.ocean))

    def test_fusion_equals_concatenation_bitwise(self, params_by_class, grid, mask, rng):
        obs = _obs_in(grid, mask, rng, 24)
        split = concat_instruments([obs[:10], obs[10:]])
        joint = concat_instruments([obs])
        pa = fuse_day(split, grid, mask, params_by_class, m=6, mean_ppm=400.0)
        pb = fuse_day(joint, grid, mask, params_by_class, m=6, mean_ppm=400.0)
        assert all(
            x.value == y.value and x.sd == y.sd
            for x, y in zip(pa.land + pa.ocean, pb.land + pb.ocean)
        )

    def test_posterior_sd_never_exceeds_prior(self, params_by_class, grid, mask, rng):
        obs = _obs_in(grid, mask, rng, 35)
        product = fuse_day(concat_instruments([obs]), grid, mask, params_by_class, m=8, mean_ppm=400.0)
        for est in product.land + product.ocean:
            params = params_by_class[est.surface_class]
            assert est.sd <= math.sqrt(params.sill + params.nugget) + 1e-9

    def test_quality_filter_applied(self, params_by_class, grid, mask):
        center = grid.cell_center(0)
        bad = Observation(center, 500.0, 0.0, 1, False, SurfaceClass.LAND)
        product = fuse_day(concat_instruments([[bad]]), grid, mask, params_by_class, m=3, mean_ppm=400.0)
        assert product.land[0].value == 400.0  # prior fallback: the flagged obs is ignored
        assert product.warnings

    def test_combined_geometry_from_effective_weights(self, params_by_class, grid, mask, rng):
        obs = _obs_in(grid, mask, rng, 20)
        geoms = [simple_geometry(prior=float(rng.normal(400, 2))) for _ in obs]
        meta = concat_instruments([obs], [geoms])
        product = fuse_day(meta, grid, mask, params_by_class, m=25, mean_ppm=400.0)
        land_obs = [o for o in obs if o.surface_class is SurfaceClass.LAND]
        land_geoms = [g for o, g in zip(obs, geoms) if o.surface_class is SurfaceClass.LAND]
        est = next(e for e in product.land if e.n_contributing > 0)
        w = effective_weights(est.center, land_obs, params_by_class[SurfaceClass.LAND], m=25)
        expected_prior = sum(wk * g.prior_profile for wk, g in zip(w, land_geoms))
        np.testing.assert_allclose(est.geometry.prior_profile, expected_prior, atol=1e-9)
        assert abs(math.fsum(est.geometry.weighting.tolist()) - 1.0) <= 1e-9

    def test_rerun_from_provenance_is_bit_identical(self, params_by_class, grid, mask, rng):
        obs = _obs_in(grid, mask, rng, 18)
        meta = concat_instruments([obs])
        pa = fuse_day(meta, grid, mask, params_by_class, m=7, mean_ppm=400.0, seed=5)
        assert pa.provenance["m"] == "7"
        assert pa.provenance["ordering"] == "maxmin"
        pb = fuse_day(meta, grid, mask, params_by_class, m=7, mean_ppm=400.0, seed=5)
        assert all(x.value == y.value and x.sd == y.sd for x, y in zip(pa.land, pb.land))
        assert np.array_equal(pa.land_precision.values, pb.land_precision.values)

    def test_mask_must_cover_grid(self, params_by_class, grid):
        small = Raster(0.0, 0.0, 1.0, np.ones((2, 2), dtype=int))
        with pytest.raises(InputError):
            fuse_day(concat_instruments([[]]), grid, small, params_by_class, m=3, mean_ppm=400.0)


def posterior_6dim():
    """Posterior over a 2x3 block of cells: strongly correlated, sill 1."""
    from colfuse import posterior_precision

    params = KernelParams("exponential", 1.0, 1500.0, 2.0, 0.0)
    obs = [
        Observation(normalize_point(2.0 + i, 2.0, 0.2), 400.0 + 0.1 * i, 0.7, 1) for i in range(4)
    ]
    grid = [normalize_point(0.5 + i, 0.5 + j, 0.5) for i in range(2) for j in range(3)]
    means, prec = posterior_precision(obs, grid, params, m=9)
    return params, means, prec


class TestSampleRealizations:
    @pytest.fixture
    def small_precision(self, rng):
        a = rng.normal(size=(6, 9))
        return SparsePrecision.from_matrix(a @ a.T + 2.0 * np.eye(6))

    def test_zero_count(self, small_precision):
        out = sample_realizations(np.zeros(6), small_precision, 0, seed=1)
        assert out.shape == (0, 6)

    def test_deterministic(self, small_precision):
        a = sample_realizations(np.full(6, 400.0), small_precision, 5, seed=7)
        b = sample_realizations(np.full(6, 400.0), small_precision, 5, seed=7)
        assert np.array_equal(a, b)
        c = sample_realizations(np.full(6, 400.0), small_precision, 5, seed=8)
        assert not np.array_equal(a, c)

    def test_sample_covariance_matches_inverse(self):
        params, means, prec = posterior_6dim()
        draws = sample_realizations(means, prec, 10_000, seed=3)
        target = np.linalg.inv(prec.to_dense())
        sample_cov = np.cov(draws.T)
        mask = np.abs(target) > 0.05 * params.sill
        rel = np.abs(sample_cov[mask] - target[mask]) / np.abs(target[mask])
        assert rel.max() < 0.05
        np.testing.assert_allclose(draws.mean(axis=0), means, atol=0.05)

    def test_mean_shape_checked(self, small_precision):
        with pytest.raises(InputError):
            sample_realizations(np.zeros(5), small_precision, 1, seed=0)
