"""Run configuration: a flat ``key = value`` text file.

Lines are ``key = value`` pairs, one per line; ``#`` starts a comment.
Unknown keys are rejected so typos fail loudly.  ``colfuse config`` prints
the full documented key list.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InputError
from .synth import ScenarioConfig
from .types import GridSpec, KernelFamily, KernelParams, SurfaceClass
from .validation import CoincidenceCriteria

# key -> (default as text, description); None default means required-if-used
CONFIG_KEYS: dict[str, tuple[str, str]] = {
    "epoch": ("2015-01-01", "calendar date that time=0 refers to (metadata only)"),
    "seed": ("0", "base seed for every stochastic step (pcg64 generator)"),
    "mean_ppm": ("400.0", "prior mean used for gap cells and empty classes"),
    "kernel.land.family": ("exponential", "kernel family over land: exponential | matern32"),
    "kernel.land.sill": ("1.0", "kernel sill (ppm^2) over land"),
    "kernel.land.spatial_range": ("500.0", "spatial range (km) over land"),
    "kernel.land.temporal_range": ("3.0", "temporal range (days) over land"),
    "kernel.land.nugget": ("0.0", "nugget (ppm^2) over land"),
    "kernel.ocean.family": ("exponential", "kernel family over ocean"),
    "kernel.ocean.sill": ("1.0", "kernel sill (ppm^2) over ocean"),
    "kernel.ocean.spatial_range": ("800.0", "spatial range (km) over ocean"),
    "kernel.ocean.temporal_range": ("3.0", "temporal range (days) over ocean"),
    "kernel.ocean.nugget": ("0.0", "nugget (ppm^2) over ocean"),
    "vecchia.m": ("10", "conditioning set size"),
    "vecchia.ordering": ("maxmin", "point ordering: maxmin | sorted"),
    "grid.lat_min": ("-90.0", "grid latitude lower edge (deg)"),
    "grid.lat_max": ("90.0", "grid latitude upper edge (deg)"),
    "grid.lon_min": ("-180.0", "grid longitude lower edge (deg)"),
    "grid.lon_max": ("180.0", "grid longitude upper edge (deg)"),
    "grid.cell_deg": ("1.0", "grid cell size (deg)"),
    "grid.day": ("0", "day index of the product"),
    "coincidence.lat_halfwidth": ("1.5", "station matching latitude halfwidth (deg)"),
    "coincidence.lon_halfwidth": ("2.5", "station matching longitude halfwidth (deg)"),
    "coincidence.time_window_minutes": ("60", "max |station window midpoint - mean obs time|"),
    "coincidence.min_daily_obs": ("10", "minimum matchup size for daily-average products"),
    "validation.s_v": ("0.4", "reference (station) measurement error, ppm"),
    "validation.colocation_default": ("0.0", "co-location error used when model columns are absent"),
    "validation.daily_average": ("0", "1 to drop matchups smaller than coincidence.min_daily_obs"),
    "trend.quarter_origin": ("0.0", "time (days) where quarter 0 starts"),
    "trend.quarter_days": ("91.3125", "length of a quarter in days"),
    "trend.bootstrap": ("1000", "bootstrap resamples per region-quarter"),
    "scenario.stations": ("10", "hierarchical scenario: number of stations"),
    "scenario.days": ("20", "hierarchical scenario: matched days per station"),
    "scenario.obs_per_day": ("10", "hierarchical scenario: observations per matchup"),
    "scenario.mu": ("0.0", "hierarchical scenario: overall product bias (ppm)"),
    "scenario.sigma_station": ("0.4", "hierarchical scenario: station bias sd (ppm)"),
    "scenario.sigma_daily": ("0.9", "hierarchical scenario: daily overpass sd (ppm)"),
    "scenario.sigma_obs": ("1.0", "hierarchical scenario: single-retrieval sd (ppm)"),
    "scenario.validation_sd": ("0.0", "hierarchical scenario: reference noise sd (ppm)"),
    "scenario.kappa_sd": ("0.0", "hierarchical scenario: smoothing-noise sd (ppm)"),
    "scenario.coloc_station_sd": ("0.0", "hierarchical scenario: persistent co-location sd (ppm)"),
    "scenario.coloc_daily_sd": ("0.0", "hierarchical scenario: transient co-location sd (ppm)"),
    "scenario.baseline": ("400.0", "hierarchical scenario: true column value (ppm)"),
    "scenario.n_levels": ("3", "hierarchical scenario: retrieval levels"),
    "gpday.n_obs": ("500", "GP-day scenario: observations to draw"),
    "gpday.obs_noise_sd": ("0.3", "GP-day scenario: per-observation noise sd (ppm)"),
    "paths.observations": ("", "optional default observations path"),
    "paths.stations": ("", "optional default stations path"),
    "paths.matchups": ("", "optional default matchups path"),
    "paths.output": ("", "optional default output path or directory"),
}


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration with typed accessors for each subsystem."""

    values: dict[str, str] = field(default_factory=dict)
    source_text: str = ""

    def get(self, key: str) -> str:
        if key not in CONFIG_KEYS:
            raise InputError(f"unknown config key {key!r}")
        return self.values.get(key, CONFIG_KEYS[key][0])

    def get_float(self, key: str) -> float:
        raw = self.get(key)
        try:
            v = float(raw)
        except ValueError:
            raise InputError(f"config key {key}: {raw!r} is not a number") from None
        if not math.isfinite(v):
            raise InputError(f"config key {key}: {raw!r} is not finite")
        return v

    def get_int(self, key: str) -> int:
        raw = self.get(key)
        try:
            return int(raw)
        except ValueError:
            raise InputError(f"config key {key}: {raw!r} is not an integer") from None

    def get_bool(self, key: str) -> bool:
        raw = self.get(key).strip().lower()
        if raw in ("1", "true"):
            return True
        if raw in ("0", "false"):
            return False
        raise InputError(f"config key {key}: {raw!r} is not a boolean (use 1/0)")

    @property
    def seed(self) -> int:
        return self.get_int("seed")

    @property
    def mean_ppm(self) -> float:
        return self.get_float("mean_ppm")

    @property
    def vecchia_m(self) -> int:
        m = self.get_int("vecchia.m")
        if m < 1:
            raise InputError("vecchia.m must be >= 1")
        return m

    @property
    def ordering(self) -> str:
        method = self.get("vecchia.ordering")
        if method not in ("maxmin", "sorted"):
            raise InputError(f"vecchia.ordering must be 'maxmin' or 'sorted', got {method!r}")
        return method

    def kernel_params(self, surface: SurfaceClass) -> KernelParams:
        prefix = f"kernel.{surface.value}"
        return KernelParams(
            KernelFamily.parse(self.get(f"{prefix}.family")),
            self.get_float(f"{prefix}.sill"),
            self.get_float(f"{prefix}.spatial_range"),
            self.get_float(f"{prefix}.temporal_range"),
            self.get_float(f"{prefix}.nugget"),
        )

    def params_by_class(self) -> dict[SurfaceClass, KernelParams]:
        return {cls: self.kernel_params(cls) for cls in SurfaceClass}

    def grid(self) -> GridSpec:
        return GridSpec(
            self.get_float("grid.lat_min"),
            self.get_float("grid.lat_max"),
            self.get_float("grid.lon_min"),
            self.get_float("grid.lon_max"),
            self.get_float("grid.cell_deg"),
            self.get_int("grid.day"),
        )

    def criteria(self) -> CoincidenceCriteria:
        return CoincidenceCriteria(
            self.get_float("coincidence.lat_halfwidth"),
            self.get_float("coincidence.lon_halfwidth"),
            self.get_float("coincidence.time_window_minutes"),
            self.get_int("coincidence.min_daily_obs"),
        )

    def scenario(self) -> ScenarioConfig:
        return ScenarioConfig(
            n_stations=self.get_int("scenario.stations"),
            n_days=self.get_int("scenario.days"),
            n_obs_per_day=self.get_int("scenario.obs_per_day"),
            mu=self.get_float("scenario.mu"),
            sigma_station=self.get_float("scenario.sigma_station"),
            sigma_daily=self.get_float("scenario.sigma_daily"),
            sigma_obs=self.get_float("scenario.sigma_obs"),
            validation_sd=self.get_float("scenario.validation_sd"),
            kappa_sd=self.get_float("scenario.kappa_sd"),
            coloc_station_sd=self.get_float("scenario.coloc_station_sd"),
            coloc_daily_sd=self.get_float("scenario.coloc_daily_sd"),
            baseline=self.get_float("scenario.baseline"),
            n_levels=self.get_int("scenario.n_levels"),
            seed=self.seed,
        )

    def path(self, key: str) -> str | None:
        value = self.get(key).strip()
        return value or None

    def hash(self) -> str:
        canonical = "\n".join(f"{k} = {self.get(k)}" for k in sorted(CONFIG_KEYS))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    values: dict[str, str] = {}
    for no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise InputError(f"{source}:{no}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in CONFIG_KEYS:
            raise InputError(f"{source}:{no}: unknown config key {key!r}")
        if key in values:
            raise InputError(f"{source}:{no}: duplicate config key {key!r}")
        values[key] = value
    cfg = RunConfig(values, text)
    paths = [cfg.path(k) for k in CONFIG_KEYS if k.startswith("paths.")]
    named = [p for p in paths if p]
    if len(named) != len(set(named)):
        raise InputError(f"{source}: configured paths must be distinct")
    return cfg


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise InputError(f"config file {path} does not exist")
    return parse_config_text(p.read_text(encoding="utf-8"), str(path))


def default_config() -> RunConfig:
    return RunConfig({}, "")


def render_config_help() -> str:
    width = max(len(k) for k in CONFIG_KEYS)
    lines = ["Configuration file: one 'key = value' per line, '#' for comments.", ""]
    for key, (default, desc) in CONFIG_KEYS.items():
        shown = default if default != "" else "(unset)"
        lines.append(f"  {key.ljust(width)}  default {shown}: {desc}")
    return "\n".join(lines)
