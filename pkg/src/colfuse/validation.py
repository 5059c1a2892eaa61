"""Station-based product assessment: matchups and the error hierarchy.

Product observations are matched to reference stations inside configurable
space/time windows.  Differences against the convolved reference columns
are then decomposed into an overall bias, station-bias and daily-bias
variability, model-derived co-location error, reference (validation)
error, and finally the systematic and random error of the product:

    systematic  s_s = sqrt(s_b^2 + s_d^2 - s_m^2 - s_v^2)
    random      s_r = sqrt(s_e^2 - s_me^2)

Negative radicands (possible from sampling noise) clamp to zero and raise
an explicit flag rather than going complex.  Summary reductions use
compensated summation so results are insensitive to matchup order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np

from .column import convolve_profile, prior_column
from .errors import InputError
from .types import Observation, Raster, SoundingGeometry

MINUTES_PER_DAY = 1440.0


@dataclass(frozen=True)
class CoincidenceCriteria:
    """Windows defining when a product observation coincides with a station.

    Defaults follow the three-by-five-degree cell and one-hour matching
    used for daily column products; ``min_daily_obs`` applies only to
    products flagged as daily averages.
    """

    lat_halfwidth_deg: float = 1.5
    lon_halfwidth_deg: float = 2.5
    time_window_minutes: float = 60.0
    min_daily_obs: int = 10

    def __post_init__(self) -> None:
        for name in ("lat_halfwidth_deg", "lon_halfwidth_deg", "time_window_minutes"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if self.min_daily_obs < 1:
            raise InputError("min_daily_obs must be >= 1")


@dataclass(frozen=True, eq=False)
class StationRecord:
    """Reference time series for one station.

    ``times`` are fractional days (strictly increasing) at the native
    sample cadence (nominally 15 minutes); ``columns`` are the reference
    column values.  Optional per-sample reference profiles and model
    profiles (or model columns) enable averaging-kernel convolution and
    co-location assessment.
    """

    station_id: int
    lat: float
    lon: float
    times: np.ndarray
    columns: np.ndarray
    profiles: np.ndarray | None = None
    model_profiles: np.ndarray | None = None
    model_columns: np.ndarray | None = None

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        cols = np.asarray(self.columns, dtype=float)
        times.setflags(write=False)
        cols.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "columns", cols)
        if times.ndim != 1 or times.shape != cols.shape:
            raise InputError("station times and columns must be matching 1-d arrays")
        if times.size and (np.diff(times) <= 0).any():
            raise InputError(f"station {self.station_id}: timestamps must be strictly increasing")
        for name in ("profiles", "model_profiles"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=float)
                if arr.ndim != 2 or arr.shape[0] != times.size:
                    raise InputError(f"station {self.station_id}: {name} must be (n_times, n_levels)")
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)
        if self.model_columns is not None:
            mc = np.asarray(self.model_columns, dtype=float)
            if mc.shape != times.shape:
                raise InputError(f"station {self.station_id}: model_columns must match times")
            mc.setflags(write=False)
            object.__setattr__(self, "model_columns", mc)


@dataclass(frozen=True, eq=False)
class Matchup:
    """All product observations coinciding with one station on one day."""

    station_id: int
    day: int
    values: np.ndarray
    references: np.ndarray
    model_obs_columns: np.ndarray | None = None
    model_ref_columns: np.ndarray | None = None
    prior_columns: np.ndarray | None = None

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        refs = np.asarray(self.references, dtype=float)
        if vals.ndim != 1 or vals.size < 1 or vals.shape != refs.shape:
            raise InputError("matchup values/references must be matching non-empty 1-d arrays")
        vals.setflags(write=False)
        refs.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "references", refs)
        for name in ("model_obs_columns", "model_ref_columns", "prior_columns"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=float)
                if arr.shape != vals.shape:
                    raise InputError(f"matchup {name} must match values in shape")
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def has_model(self) -> bool:
        return self.model_obs_columns is not None and self.model_ref_columns is not None


def _lon_difference(lon_a: float, lon_b: float) -> float:
    return abs(math.remainder(lon_a - lon_b, 360.0))


def _station_window_average(
    station: StationRecord, target_time: float, window_days: float
) -> tuple[float, np.ndarray | None, np.ndarray | None, float | None] | None:
    """Reference values averaged over the best 90-minute window near a time.

    Candidate midpoints are the station's own sample times; the nearest
    one within the matching window whose 90-minute span holds at least
    three samples wins.  Returns (column, profile, model_profile,
    model_column) averages or None when no candidate qualifies.
    """
    half_avg = 45.0 / MINUTES_PER_DAY
    times = station.times
    if times.size == 0:
        return None
    order = np.argsort(np.abs(times - target_time), kind="stable")
    for cand in order:
        mid = times[cand]
        if abs(mid - target_time) > window_days:
            break  # candidates are visited nearest-first
        inside = np.abs(times - mid) <= half_avg
        if inside.sum() < 3:
            continue
        col = float(np.mean(station.columns[inside]))
        prof = None if station.profiles is None else station.profiles[inside].mean(axis=0)
        mprof = None if station.model_profiles is None else station.model_profiles[inside].mean(axis=0)
        mcol = None if station.model_columns is None else float(np.mean(station.model_columns[inside]))
        return col, prof, mprof, mcol
    return None


def match_coincidences(
    observations: Sequence[Observation],
    stations: Sequence[StationRecord],
    criteria: CoincidenceCriteria,
    *,
    geometries: Sequence[SoundingGeometry] | None = None,
    model_columns: Sequence[float] | None = None,
    daily_average: bool = False,
) -> list[Matchup]:
    """Group product observations into per-station, per-day matchups.

    An observation joins a station's matchup when it falls inside the
    lat/lon halfwidth box and the mean observation time of its day group is
    within the time window of a valid station averaging window.  With
    ``daily_average`` set, matchups smaller than ``min_daily_obs`` are
    dropped (the product's values are only meaningful as daily averages).

    ``geometries`` enables averaging-kernel convolution of station profiles
    and prior columns; ``model_columns`` supplies model-sampled columns at
    the observation locations for co-location assessment.
    """
    if geometries is not None and len(geometries) != len(observations):
        raise InputError(f"{len(geometries)} geometries for {len(observations)} observations")
    if model_columns is not None and len(model_columns) != len(observations):
        raise InputError(f"{len(model_columns)} model columns for {len(observations)} observations")
    window_days = criteria.time_window_minutes / MINUTES_PER_DAY

    matchups: list[Matchup] = []
    for station in stations:
        in_box = [
            i
            for i, o in enumerate(observations)
            if abs(o.point.lat - station.lat) <= criteria.lat_halfwidth_deg
            and _lon_difference(o.point.lon, station.lon) <= criteria.lon_halfwidth_deg
        ]
        by_day: dict[int, list[int]] = {}
        for i in in_box:
            by_day.setdefault(int(math.floor(observations[i].point.time)), []).append(i)

        for day in sorted(by_day):
            idx = by_day[day]
            mean_time = math.fsum(observations[i].point.time for i in idx) / len(idx)
            ref = _station_window_average(station, mean_time, window_days)
            if ref is None:
                continue
            ref_col, ref_prof, model_prof, model_col = ref

            values = np.array([observations[i].value for i in idx], dtype=float)
            if ref_prof is not None:
                if geometries is None:
                    raise InputError(
                        f"station {station.station_id} provides reference profiles; "
                        "per-observation geometries are required to convolve them"
                    )
                refs = np.array([convolve_profile(geometries[i], ref_prof) for i in idx])
            else:
                refs = np.full(len(idx), ref_col)

            model_ref = None
            if model_prof is not None:
                if geometries is None:
                    raise InputError(
                        f"station {station.station_id} provides model profiles; "
                        "per-observation geometries are required to convolve them"
                    )
                model_ref = np.array([convolve_profile(geometries[i], model_prof) for i in idx])
            elif model_col is not None:
                model_ref = np.full(len(idx), model_col)

            model_obs = None
            if model_columns is not None:
                model_obs = np.array([model_columns[i] for i in idx], dtype=float)

            priors = None
            if geometries is not None:
                priors = np.array([prior_column(geometries[i]) for i in idx])

            if daily_average and len(idx) < criteria.min_daily_obs:
                continue
            matchups.append(
                Matchup(
                    station.station_id,
                    day,
                    values,
                    refs,
                    model_obs_columns=model_obs,
                    model_ref_columns=model_ref,
                    prior_columns=priors,
                )
            )
    return matchups


# ---------------------------------------------------------------------------
# estimators


def _fmean(values) -> float:
    vals = list(values)
    return math.fsum(vals) / len(vals)


@dataclass(frozen=True)
class BiasSummary:
    """Observation-based bias statistics (daily / station / overall hierarchy)."""

    station_ids: tuple[int, ...]
    station_biases: tuple[float, ...]
    overall_bias: float
    daily_std: float
    station_bias_std: float
    n_stations: int
    n_days: int
    n_obs: int
    daily_std_stations: int
    flags: tuple[str, ...] = ()


def _bias_hierarchy(matchups: Sequence[Matchup], kind: str) -> BiasSummary:
    if not matchups:
        raise InputError("no matchups to summarize")
    per_station: dict[int, list[float]] = {}
    n_obs = 0
    for mu in matchups:
        if kind == "model":
            if not mu.has_model:
                raise InputError(
                    f"matchup (station {mu.station_id}, day {mu.day}) lacks model columns"
                )
            errs = mu.model_obs_columns - mu.model_ref_columns
        else:
            errs = mu.values - mu.references
        daily = math.fsum(errs.tolist()) / mu.n
        per_station.setdefault(mu.station_id, []).append(daily)
        n_obs += mu.n

    flags: list[str] = []
    ids = sorted(per_station)
    station_biases = [_fmean(per_station[j]) for j in ids]
    overall = _fmean(station_biases)

    j_total = len(ids)
    if j_total >= 2:
        dev_sq = math.fsum((b - overall) ** 2 for b in station_biases)
        s_b = math.sqrt(dev_sq / (j_total - 1))
    else:
        s_b = float("nan")
        flags.append("station_bias_std_undefined")

    per_station_sd = []
    for j in ids:
        daily = per_station[j]
        if len(daily) < 2:
            continue
        mean_j = _fmean(daily)
        per_station_sd.append(math.sqrt(math.fsum((e - mean_j) ** 2 for e in daily) / (len(daily) - 1)))
    if per_station_sd:
        s_d = _fmean(per_station_sd)
    else:
        s_d = float("nan")
        flags.append("daily_std_undefined")
    if len(per_station_sd) < j_total:
        flags.append("single_day_stations_skipped_in_daily_std")

    return BiasSummary(
        tuple(ids),
        tuple(station_biases),
        overall,
        s_d,
        s_b,
        j_total,
        sum(len(v) for v in per_station.values()),
        n_obs,
        len(per_station_sd),
        tuple(flags),
    )


def observation_error_summary(matchups: Sequence[Matchup]) -> BiasSummary:
    """Daily errors, station biases, overall bias, and the two bias stds.

    The daily error is the matchup mean of (value - reference); station
    bias averages those over days, and the overall bias averages station
    biases.  Stations with a single matched day cannot contribute a daily
    std and are skipped in its station average (flagged), while still
    counting toward the station-bias std.
    """
    return _bias_hierarchy(matchups, "observation")


@dataclass(frozen=True)
class ColocationSummary:
    station_component: float  # s_mb
    daily_component: float  # s_md
    total: float  # s_m
    flags: tuple[str, ...] = ()


def colocation_error(matchups: Sequence[Matchup]) -> ColocationSummary:
    """Co-location error from model columns at observation vs station sites.

    Applies the same bias hierarchy to (model-at-observation minus
    model-at-station) differences; the total is the quadrature sum of the
    station and daily components.
    """
    summary = _bias_hierarchy(matchups, "model")
    s_mb = summary.station_bias_std
    s_md = summary.daily_std
    if math.isnan(s_mb) or math.isnan(s_md):
        return ColocationSummary(s_mb, s_md, float("nan"), summary.flags + ("colocation_undefined",))
    return ColocationSummary(s_mb, s_md, math.hypot(s_mb, s_md), summary.flags)


def systematic_error(s_b: float, s_d: float, s_m: float, s_v: float) -> tuple[float, bool]:
    """Systematic error: bias variability minus co-location and validation parts.

    Returns ``(sqrt(max(0, s_b^2 + s_d^2 - s_m^2 - s_v^2)), clamped)``.
    """
    for name, v in (("s_b", s_b), ("s_d", s_d), ("s_m", s_m), ("s_v", s_v)):
        if v < 0:
            raise InputError(f"{name} must be >= 0, got {v!r}")
    radicand = s_b**2 + s_d**2 - s_m**2 - s_v**2
    if radicand < 0.0:
        return 0.0, True
    return math.sqrt(radicand), False


@dataclass(frozen=True)
class RandomSummary:
    observation_component: float  # s_e
    model_component: float  # s_me
    total: float  # s_r
    clamped: bool
    flags: tuple[str, ...] = ()


def _pooled_within_day_std(groups: Sequence[np.ndarray]) -> float | None:
    """Pooled std of per-observation deviations from their day means.

    Pools squared deviations across the station's days and divides by the
    total observation count minus one (the paper's estimator).  Returns
    None when fewer than two observations are pooled.
    """
    total_n = sum(g.shape[0] for g in groups)
    if total_n < 2:
        return None
    ss = math.fsum(
        math.fsum(((g - math.fsum(g.tolist()) / g.shape[0]) ** 2).tolist()) for g in groups
    )
    return math.sqrt(ss / (total_n - 1))


def random_error(matchups: Sequence[Matchup]) -> RandomSummary:
    """Random error: within-coincidence scatter beyond what the model explains.

    Per station, observation-level errors (value minus the day's mean
    reference) are pooled into a within-day std; the station stds average
    to ``s_e``.  The analogous model statistic ``s_me`` is subtracted in
    quadrature; missing model columns contribute zero model scatter and
    raise a flag.
    """
    if not matchups:
        raise InputError("no matchups to summarize")
    obs_groups: dict[int, list[np.ndarray]] = {}
    model_groups: dict[int, list[np.ndarray]] = {}
    any_model = False
    for mu in matchups:
        ref_mean = math.fsum(mu.references.tolist()) / mu.n
        obs_groups.setdefault(mu.station_id, []).append(mu.values - ref_mean)
        if mu.has_model:
            any_model = True
            mref_mean = math.fsum(mu.model_ref_columns.tolist()) / mu.n
            model_groups.setdefault(mu.station_id, []).append(mu.model_obs_columns - mref_mean)

    flags: list[str] = []
    obs_stds = []
    for j in sorted(obs_groups):
        s = _pooled_within_day_std(obs_groups[j])
        if s is not None:
            obs_stds.append(s)
    if not obs_stds:
        raise InputError("random error needs at least one station with two pooled observations")
    if len(obs_stds) < len(obs_groups):
        flags.append("single_observation_stations_skipped_in_random_error")
    s_e = _fmean(obs_stds)

    if any_model:
        model_stds = []
        for j in sorted(model_groups):
            s = _pooled_within_day_std(model_groups[j])
            if s is not None:
                model_stds.append(s)
        s_me = _fmean(model_stds) if model_stds else 0.0
    else:
        s_me = 0.0
        flags.append("model_columns_missing_for_random_error")

    radicand = s_e**2 - s_me**2
    clamped = radicand < 0.0
    s_r = 0.0 if clamped else math.sqrt(radicand)
    return RandomSummary(s_e, s_me, s_r, clamped, tuple(flags))


def aggregated_error(s_s: float, s_r: float, n: int) -> float:
    """Expected error of an n-observation average: ``sqrt(s_s^2 + s_r^2 / n)``."""
    if n < 1:
        raise InputError("n must be >= 1")
    return math.sqrt(s_s**2 + s_r**2 / n)


def n_for_error_inflation(s_r: float, s_s: float, fraction: float = 0.02) -> float:
    """Observations to average so random error inflates total error by ``fraction``.

    Solves ``aggregated_error(s_s, s_r, n) = (1 + fraction) * s_s`` for n:
    ``n = (s_r^2 / s_s^2) / ((1 + fraction)^2 - 1)``.
    """
    if s_s <= 0:
        raise InputError("s_s must be > 0")
    if fraction <= 0:
        raise InputError("inflation fraction must be > 0")
    return (s_r**2 / s_s**2) / ((1.0 + fraction) ** 2 - 1.0)


@dataclass(frozen=True)
class ErrorSummary:
    """The full assessment for one product/class: Tables-style error columns."""

    n_stations: int
    n_days: int
    n_obs: int
    overall_bias: float
    station_biases: tuple[float, ...]
    station_ids: tuple[int, ...]
    station_bias_std: float
    daily_std: float
    colocation: float
    colocation_station: float
    colocation_daily: float
    validation: float
    systematic: float
    random: float
    random_observation: float
    random_model: float
    systematic_clamped: bool
    random_clamped: bool
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for name in ("station_bias_std", "daily_std", "colocation", "validation", "systematic", "random"):
            v = getattr(self, name)
            if not math.isnan(v) and v < 0:
                raise InputError(f"{name} must be >= 0, got {v!r}")


def assess_product(
    matchups: Sequence[Matchup],
    *,
    validation_error: float = 0.4,
    colocation_default: float = 0.0,
) -> ErrorSummary:
    """Run the full error decomposition over a matchup set.

    ``validation_error`` is the reference measurement uncertainty (0.4 ppm
    for column spectrometer networks unless overridden).  When matchups
    carry no model columns, co-location falls back to
    ``colocation_default`` with a flag.
    """
    bias = _bias_hierarchy(matchups, "observation")
    flags = list(bias.flags)

    if all(mu.has_model for mu in matchups):
        coloc = colocation_error(matchups)
        s_m, s_mb, s_md = coloc.total, coloc.station_component, coloc.daily_component
        for f in coloc.flags:
            if f not in flags:
                flags.append("colocation_" + f)
    else:
        s_m, s_mb, s_md = colocation_default, float("nan"), float("nan")
        flags.append("colocation_defaulted")

    rnd = random_error(matchups)
    flags.extend(f for f in rnd.flags if f not in flags)

    if math.isnan(bias.station_bias_std) or math.isnan(bias.daily_std) or math.isnan(s_m):
        s_s, s_clamped = float("nan"), False
        flags.append("systematic_undefined")
    else:
        s_s, s_clamped = systematic_error(bias.station_bias_std, bias.daily_std, s_m, validation_error)
        if s_clamped:
            flags.append("systematic_clamped")
    if rnd.clamped:
        flags.append("random_clamped")

    return ErrorSummary(
        bias.n_stations,
        bias.n_days,
        bias.n_obs,
        bias.overall_bias,
        bias.station_biases,
        bias.station_ids,
        bias.station_bias_std,
        bias.daily_std,
        s_m,
        s_mb,
        s_md,
        validation_error,
        s_s,
        rnd.total,
        rnd.observation_component,
        rnd.model_component,
        s_clamped,
        rnd.clamped,
        tuple(flags),
    )


def prior_error_assessment(
    matchups: Sequence[Matchup],
    *,
    validation_error: float = 0.4,
    colocation_default: float = 0.0,
) -> ErrorSummary:
    """Assess the prior columns through the identical pipeline.

    Each matchup's product values are replaced by the per-observation prior
    columns (``h^T x_a``); everything downstream is unchanged.  Because the
    prior varies smoothly, its random error should be near zero.
    """
    replaced = []
    for mu in matchups:
        if mu.prior_columns is None:
            raise InputError(
                f"matchup (station {mu.station_id}, day {mu.day}) has no prior columns; "
                "supply geometries when matching"
            )
        replaced.append(
            Matchup(
                mu.station_id,
                mu.day,
                mu.prior_columns,
                mu.references,
                model_obs_columns=mu.model_obs_columns,
                model_ref_columns=mu.model_ref_columns,
                prior_columns=mu.prior_columns,
            )
        )
    return assess_product(
        replaced, validation_error=validation_error, colocation_default=colocation_default
    )


# ---------------------------------------------------------------------------
# regional trends


@dataclass(frozen=True)
class TrendRow:
    """Bootstrap trend fit for one region: quarterly intercept/slope with errors."""

    region: int
    n_quarters: int
    intercept: float
    intercept_se: float
    slope: float
    slope_se: float

    def __post_init__(self) -> None:
        if self.intercept_se < 0 or self.slope_se < 0:
            raise InputError("standard errors must be >= 0")


@dataclass(frozen=True, eq=False)
class QuarterlySeries:
    """Bootstrap mean, spread, and count per populated quarter of one region."""

    region: int
    quarters: np.ndarray
    means: np.ndarray
    sds: np.ndarray
    counts: np.ndarray


def quarterly_bootstrap(
    observations: Sequence[Observation],
    regions: Raster,
    *,
    quarter_origin: float = 0.0,
    quarter_days: float = 91.3125,
    bootstrap: int = 1000,
    seed: int = 0,
) -> list[QuarterlySeries]:
    """Bootstrap the quarterly mean per region.

    Observations are binned by raster region (ids <= 0 are unassigned and
    skipped; points off the raster are skipped) and by quarter index
    ``floor((t - origin) / quarter_days)``.  Each region-quarter is
    resampled with replacement ``bootstrap`` times; the reported mean and
    sd are those of the resample means.  A single-observation quarter is
    reported exactly with sd 0.  Deterministic for a given seed: regions
    and quarters are processed in ascending order.
    """
    if bootstrap < 1:
        raise InputError("bootstrap count must be >= 1")
    if quarter_days <= 0:
        raise InputError("quarter_days must be > 0")
    buckets: dict[int, dict[int, list[float]]] = {}
    for o in observations:
        try:
            region = regions.lookup(o.point.lat, o.point.lon)
        except InputError:
            continue
        if region <= 0:
            continue
        q = int(math.floor((o.point.time - quarter_origin) / quarter_days))
        buckets.setdefault(region, {}).setdefault(q, []).append(o.value)

    rng = np.random.default_rng(seed)
    series: list[QuarterlySeries] = []
    for region in sorted(buckets):
        quarters = sorted(buckets[region])
        means = np.empty(len(quarters))
        sds = np.empty(len(quarters))
        counts = np.empty(len(quarters), dtype=np.int64)
        for k, q in enumerate(quarters):
            vals = np.asarray(buckets[region][q], dtype=float)
            counts[k] = vals.size
            if vals.size == 1:
                means[k], sds[k] = vals[0], 0.0
                continue
            draws = rng.integers(0, vals.size, size=(bootstrap, vals.size))
            boot = vals[draws].mean(axis=1)
            means[k] = float(boot.mean())
            sds[k] = float(boot.std(ddof=1)) if bootstrap > 1 else 0.0
        series.append(QuarterlySeries(region, np.array(quarters, dtype=np.int64), means, sds, counts))
    return series


def regional_trends(
    observations: Sequence[Observation],
    regions: Raster,
    *,
    quarter_origin: float = 0.0,
    quarter_days: float = 91.3125,
    bootstrap: int = 1000,
    seed: int = 0,
) -> list[TrendRow]:
    """Linear trend of the quarterly bootstrap means per region.

    The quarterly bootstrap means feed an unweighted least-squares line
    against the quarter index; intercept and slope come with residual-based
    standard errors.  Regions with fewer than two populated quarters are
    omitted.
    """
    rows: list[TrendRow] = []
    for s in quarterly_bootstrap(
        observations,
        regions,
        quarter_origin=quarter_origin,
        quarter_days=quarter_days,
        bootstrap=bootstrap,
        seed=seed,
    ):
        if s.quarters.size < 2:
            continue
        slope, intercept, slope_se, intercept_se = _ols_line(s.quarters.astype(float), s.means)
        rows.append(TrendRow(s.region, int(s.quarters.size), intercept, intercept_se, slope, slope_se))
    return rows


def bootstrap_mean_sd(values, bootstrap: int, seed: int) -> tuple[float, float]:
    """Bootstrap mean and standard deviation of the sample mean."""
    vals = np.asarray(values, dtype=float)
    if vals.size < 1:
        raise InputError("bootstrap requires at least one value")
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, vals.size, size=(bootstrap, vals.size))
    means = vals[draws].mean(axis=1)
    sd = float(means.std(ddof=1)) if bootstrap > 1 else 0.0
    return float(means.mean()), sd


def _ols_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    n = x.shape[0]
    xbar = x.mean()
    sxx = float(((x - xbar) ** 2).sum())
    if sxx == 0.0:
        raise InputError("trend fit needs at least two distinct quarters")
    slope = float(((x - xbar) * (y - y.mean())).sum() / sxx)
    intercept = float(y.mean() - slope * xbar)
    resid = y - (intercept + slope * x)
    if n > 2:
        sigma2 = float((resid**2).sum() / (n - 2))
    else:
        sigma2 = 0.0
    slope_se = math.sqrt(max(sigma2, 0.0) / sxx)
    intercept_se = math.sqrt(max(sigma2, 0.0) * (1.0 / n + xbar**2 / sxx))
    return slope, intercept, slope_se, intercept_se
