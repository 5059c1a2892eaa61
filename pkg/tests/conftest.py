import numpy as np
import pytest

from colfuse import KernelParams, Observation, SoundingGeometry, normalize_point


@pytest.fixture
def exp_params():
    return KernelParams("exponential", 1.0, 500.0, 2.0, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240809)


def random_points(rng, n, lat_span=40.0, lon_span=60.0, day_span=2.0):
    return [
        normalize_point(
            float(rng.uniform(-lat_span / 2, lat_span / 2)),
            float(rng.uniform(-lon_span / 2, lon_span / 2)),
            float(rng.uniform(0.0, day_span)),
        )
        for _ in range(n)
    ]


def random_observations(rng, n, noise=(0.1, 0.6), value_sd=1.0, **span):
    pts = random_points(rng, n, **span)
    return [
        Observation(
            p,
            float(rng.normal(400.0, value_sd)),
            float(rng.uniform(*noise)),
            1,
        )
        for p in pts
    ]


def simple_geometry(n_levels=3, prior=400.0):
    pressure = np.linspace(1000.0, 100.0, n_levels)
    h = np.full(n_levels, 1.0 / n_levels)
    h[-1] = 1.0 - h[:-1].sum()
    return SoundingGeometry(pressure, np.full(n_levels, prior), h, np.eye(n_levels))
