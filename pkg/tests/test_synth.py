import math

import numpy as np
import pytest

from colfuse import (
    InputError,
    KernelParams,
    NumericalError,
    ScenarioConfig,
    SpaceTimePoint,
    assess_product,
    simulate_gp_field,
    simulate_hierarchical,
)

from conftest import random_points


class TestSimulateHierarchical:
    def test_pure_shift_scenario(self):
        cfg = ScenarioConfig(
            n_stations=4, n_days=3, n_obs_per_day=5,
            mu=0.5, sigma_station=0.0, sigma_daily=0.0, sigma_obs=0.0,
            validation_sd=0.0, kappa_sd=0.0, seed=1,
        )
        matchups, truth = simulate_hierarchical(cfg)
        assert len(matchups) == 12
        for mu_ in matchups:
            np.testing.assert_array_equal(mu_.values - mu_.references, np.full(5, 0.5))
        summary = assess_product(matchups, validation_error=0.0)
        assert summary.overall_bias == 0.5

    def test_deterministic_per_seed(self):
        cfg = ScenarioConfig(n_stations=3, n_days=4, n_obs_per_day=6, seed=77)
        a, _ = simulate_hierarchical(cfg)
        b, _ = simulate_hierarchical(cfg)
        assert len(a) == len(b)
        for x, y in zip(a, b):
            assert np.array_equal(x.values, y.values)
            assert np.array_equal(x.references, y.references)
            assert np.array_equal(x.model_obs_columns, y.model_obs_columns)

    def test_component_recovery_at_scale(self):
        cfg = ScenarioConfig(
            n_stations=30, n_days=60, n_obs_per_day=25,
            mu=0.2, sigma_station=0.4, sigma_daily=0.9, sigma_obs=1.0,
            validation_sd=0.0, kappa_sd=0.0, seed=5,
        )
        matchups, truth = simulate_hierarchical(cfg)
        s = assess_product(matchups, validation_error=0.0)
        assert abs(s.systematic - truth.expected_systematic) < 0.08 * truth.expected_systematic + 0.05
        assert abs(s.random - truth.expected_random) < 0.08 * truth.expected_random

    def test_recovery_tightens_with_scale(self):
        errs = []
        for (j, n_days, n_obs) in ((8, 12, 6), (24, 48, 20)):
            devs = []
            for seed in range(6):
                cfg = ScenarioConfig(
                    n_stations=j, n_days=n_days, n_obs_per_day=n_obs,
                    mu=0.0, sigma_station=0.4, sigma_daily=0.9, sigma_obs=1.0,
                    validation_sd=0.0, kappa_sd=0.0, seed=seed,
                )
                matchups, truth = simulate_hierarchical(cfg)
                s = assess_product(matchups, validation_error=0.0)
                devs.append(abs(s.systematic - truth.expected_systematic))
            errs.append(float(np.mean(devs)))
        assert errs[1] < errs[0]

    def test_colocation_offsets_surface_in_model_columns(self):
        cfg = ScenarioConfig(
            n_stations=40, n_days=25, n_obs_per_day=4,
            mu=0.0, sigma_station=0.0, sigma_daily=0.0, sigma_obs=0.0,
            coloc_station_sd=0.5, coloc_daily_sd=0.0, seed=9,
        )
        matchups, truth = simulate_hierarchical(cfg)
        from colfuse import colocation_error

        c = colocation_error(matchups)
        assert abs(c.station_component - 0.5) < 0.15
        assert c.daily_component == 0.0


class TestSimulateGpField:
    def test_degenerate_sill_collapses_to_mean(self, rng):
        params = KernelParams("exponential", 1e-12, 300.0, 2.0)
        pts = random_points(rng, 15)
        field = simulate_gp_field(pts, params, 400.0, seed=4)
        np.testing.assert_allclose(field, 400.0, atol=1e-4)

    def test_marginal_sd_matches_sill_plus_nugget(self):
        params = KernelParams("matern32", 0.8, 300.0, 2.0, nugget=0.2)
        pt = [SpaceTimePoint(0.0, 0.0, 0.0)]
        draws = np.array([simulate_gp_field(pt, params, 400.0, seed=s)[0] for s in range(10_000)])
        assert abs(draws.std(ddof=1) - math.sqrt(1.0)) < 0.03
        assert abs(draws.mean() - 400.0) < 0.05

    def test_distant_points_uncorrelated(self):
        params = KernelParams("exponential", 1.0, 50.0, 0.1)
        pts = [SpaceTimePoint(0.0, 0.0, 0.0), SpaceTimePoint(0.0, 170.0, 0.0)]
        draws = np.array([simulate_gp_field(pts, params, 0.0, seed=s) for s in range(10_000)])
        corr = np.corrcoef(draws[:, 0], draws[:, 1])[0, 1]
        assert abs(corr) < 0.05

    def test_deterministic(self, rng):
        params = KernelParams("exponential", 1.0, 300.0, 2.0)
        pts = random_points(rng, 10)
        assert np.array_equal(
            simulate_gp_field(pts, params, 400.0, seed=3),
            simulate_gp_field(pts, params, 400.0, seed=3),
        )

    def test_size_cap(self, exp_params):
        pts = [SpaceTimePoint(0.0, 0.0, float(i)) for i in range(2001)]
        with pytest.raises(InputError, match="tile"):
            simulate_gp_field(pts, exp_params, 400.0, seed=0)

    def test_duplicate_points_need_nugget(self, exp_params):
        pts = [SpaceTimePoint(0.0, 0.0, 0.0)] * 3
        with pytest.raises(NumericalError):
            simulate_gp_field(pts, exp_params, 400.0, seed=0)
