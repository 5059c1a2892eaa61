"""Synthetic datasets with known ground truth.

Two generators: hierarchical matchup scenarios whose error components are
configured exactly (for validating the assessment estimators), and exact
Gaussian-process field draws (for validating the fusion stack).  Both use
the seedable PCG64 generator and are bit-reproducible per seed; callers
wanting many replicates run many seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np

from .covariance import build_cov
from .errors import InputError, NumericalError
from .types import KernelParams, SoundingGeometry, SpaceTimePoint
from .validation import Matchup

RNG_NAME = "pcg64"

_GP_MAX_POINTS = 2000


@dataclass(frozen=True)
class ScenarioConfig:
    """Knobs of a hierarchical-error scenario.

    The generated product values decompose as

        value = truth + mu + station_bias + daily_bias + obs_noise

    where truth itself carries station-fixed plus day-transient co-location
    offsets relative to the station reference.  The reference columns add
    per-day validation noise and per-observation smoothing noise (kappa).
    """

    n_stations: int = 10
    n_days: int = 20
    n_obs_per_day: int = 10
    mu: float = 0.0
    sigma_station: float = 0.4
    sigma_daily: float = 0.9
    sigma_obs: float = 1.0
    validation_sd: float = 0.0
    kappa_sd: float = 0.02
    coloc_station_sd: float = 0.0
    coloc_daily_sd: float = 0.0
    baseline: float = 400.0
    n_levels: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("n_stations", "n_days", "n_obs_per_day", "n_levels"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be >= 1")
        for name in (
            "sigma_station",
            "sigma_daily",
            "sigma_obs",
            "validation_sd",
            "kappa_sd",
            "coloc_station_sd",
            "coloc_daily_sd",
        ):
            if getattr(self, name) < 0:
                raise InputError(f"{name} must be >= 0")


@dataclass(frozen=True, eq=False)
class ScenarioTruth:
    """Realized latent components behind a generated scenario."""

    config: ScenarioConfig
    station_biases: np.ndarray  # alpha_j
    coloc_station_offsets: np.ndarray  # persistent per-station offsets
    expected_systematic: float
    expected_random: float


def _flat_geometry(n_levels: int, baseline: float) -> SoundingGeometry:
    pressure = np.linspace(1000.0, 100.0, n_levels) if n_levels > 1 else np.array([500.0])
    h = np.full(n_levels, 1.0 / n_levels)
    h[-1] = 1.0 - h[:-1].sum()  # exact sum for the constructor invariant
    return SoundingGeometry(pressure, np.full(n_levels, baseline), h, np.eye(n_levels))


def simulate_hierarchical(cfg: ScenarioConfig) -> tuple[list[Matchup], ScenarioTruth]:
    """Generate matchups realizing the hierarchical error model exactly.

    Draw order (fixed for reproducibility): station biases, co-location
    station offsets, then per station-day blocks of daily bias, co-location
    transient, validation noise, observation noise, kappa noise.  Model
    columns are generated noise-free (the model sees the co-location truth),
    so co-location estimators recover the configured offsets.
    """
    rng = np.random.default_rng(cfg.seed)
    j, n_days, n_obs = cfg.n_stations, cfg.n_days, cfg.n_obs_per_day

    alpha = cfg.sigma_station * rng.standard_normal(j)
    coloc_station = cfg.coloc_station_sd * rng.standard_normal(j)
    gamma = cfg.sigma_daily * rng.standard_normal((j, n_days))
    coloc_daily = cfg.coloc_daily_sd * rng.standard_normal((j, n_days))
    val_noise = cfg.validation_sd * rng.standard_normal((j, n_days))
    eps = cfg.sigma_obs * rng.standard_normal((j, n_days, n_obs))
    kappa = cfg.kappa_sd * rng.standard_normal((j, n_days, n_obs))

    geometry = _flat_geometry(cfg.n_levels, cfg.baseline)
    prior = np.full(n_obs, float(geometry.weighting @ geometry.prior_profile))

    matchups: list[Matchup] = []
    for sj in range(j):
        for day in range(n_days):
            truth_station = cfg.baseline
            truth_obs = truth_station + coloc_station[sj] + coloc_daily[sj, day]
            values = truth_obs + cfg.mu + alpha[sj] + gamma[sj, day] + eps[sj, day]
            references = truth_station + val_noise[sj, day] + kappa[sj, day]
            model_obs = np.full(n_obs, truth_obs)
            model_ref = np.full(n_obs, truth_station)
            matchups.append(
                Matchup(
                    sj,
                    day,
                    values,
                    references,
                    model_obs_columns=model_obs,
                    model_ref_columns=model_ref,
                    prior_columns=prior.copy(),
                )
            )

    truth = ScenarioTruth(
        cfg,
        alpha,
        coloc_station,
        math.hypot(cfg.sigma_station, cfg.sigma_daily),
        cfg.sigma_obs,
    )
    return matchups, truth


def simulate_gp_field(
    points: Sequence[SpaceTimePoint],
    params: KernelParams,
    mean: float,
    seed: int,
) -> np.ndarray:
    """Exact Gaussian-process draw at the given points, in ppm.

    Uses a dense covariance factorization, so marginal variance is exactly
    ``sill + nugget``.  Limited to 2000 points; beyond that, generate in
    independent tiles instead of asking for one exact joint draw.
    """
    p = len(points)
    if p < 1:
        raise InputError("simulate_gp_field requires at least one point")
    if p > _GP_MAX_POINTS:
        raise InputError(
            f"exact GP draws are limited to {_GP_MAX_POINTS} points (got {p}); "
            "generate larger fields tile by tile"
        )
    sigma = build_cov(points, None, params)
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"field covariance is not positive definite ({exc}); duplicate points need a nugget"
        ) from None
    rng = np.random.default_rng(seed)
    return mean + chol @ rng.standard_normal(p)
