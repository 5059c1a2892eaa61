"""Shared domain types and units.

Units are fixed package-wide: ppm for mixing ratios, km for spatial ranges,
fractional days (since a configured epoch) for time, hPa for pressure, and
degrees for angles.  Spatial separations are great-circle kilometres on a
sphere of radius 6371.0 km.

All types validate their invariants on construction and are immutable
afterwards, so instances are safe to share across workers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError

EARTH_RADIUS_KM = 6371.0


class SurfaceClass(enum.Enum):
    """Land/ocean partition used to run the pipeline separately per class."""

    LAND = "land"
    OCEAN = "ocean"

    @classmethod
    def parse(cls, text: str) -> "SurfaceClass":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise InputError(f"unknown surface class {text!r}; expected 'land' or 'ocean'") from None


class KernelFamily(enum.Enum):
    EXPONENTIAL = "exponential"
    MATERN32 = "matern32"

    @classmethod
    def parse(cls, text: str) -> "KernelFamily":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise InputError(
                f"unknown kernel family {text!r}; expected 'exponential' or 'matern32'"
            ) from None


@dataclass(frozen=True)
class SpaceTimePoint:
    """A location in space and time.

    Attributes
    ----------
    lat : float
        Latitude in degrees, in [-90, 90].
    lon : float
        Longitude in degrees, normalized to [-180, 180).
    time : float
        Fractional days since the configured epoch.
    """

    lat: float
    lon: float
    time: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and -90.0 <= self.lat <= 90.0):
            raise InputError(f"latitude {self.lat!r} outside [-90, 90]")
        if not (math.isfinite(self.lon) and -180.0 <= self.lon < 180.0):
            raise InputError(
                f"longitude {self.lon!r} outside [-180, 180); wrap it with normalize_point"
            )
        if not math.isfinite(self.time):
            raise InputError(f"time {self.time!r} is not finite")


def normalize_point(lat: float, lon: float, time: float) -> SpaceTimePoint:
    """Build a :class:`SpaceTimePoint`, wrapping longitude into [-180, 180).

    Idempotent: feeding an already-normalized point back in reproduces it
    exactly.  Latitude out of [-90, 90] is rejected rather than wrapped
    because a wrapped latitude would silently change hemisphere.
    """
    if not (math.isfinite(lat) and -90.0 <= lat <= 90.0):
        raise InputError(f"latitude {lat!r} outside [-90, 90]")
    if not math.isfinite(lon):
        raise InputError(f"longitude {lon!r} is not finite")
    wrapped = math.remainder(lon, 360.0)
    if wrapped >= 180.0:  # remainder() returns values in [-180, 180]
        wrapped -= 360.0
    if wrapped == -0.0:
        wrapped = 0.0
    return SpaceTimePoint(lat, wrapped, time)


@dataclass(frozen=True)
class Observation:
    """One point measurement of the column value.

    ``noise_sd`` is the 1-sigma measurement noise in ppm.  A value of zero
    denotes an idealized noise-free measurement, which several exactness
    checks rely on; real instrument files carry strictly positive noise.
    """

    point: SpaceTimePoint
    value: float
    noise_sd: float
    instrument_id: int
    quality_flag: bool = True
    surface_class: SurfaceClass = SurfaceClass.LAND

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise InputError(f"observation value {self.value!r} is not finite")
        if not (math.isfinite(self.noise_sd) and self.noise_sd >= 0.0):
            raise InputError(f"noise_sd {self.noise_sd!r} must be finite and >= 0")
        if int(self.instrument_id) != self.instrument_id or self.instrument_id < 0:
            raise InputError(f"instrument_id {self.instrument_id!r} must be a small non-negative integer")


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SoundingGeometry:
    """Vertical retrieval geometry for one sounding.

    Attributes
    ----------
    pressure : ndarray, shape (L,)
        Pressure levels in hPa, strictly monotone.
    prior_profile : ndarray, shape (L,)
        A-priori gas profile in ppm.
    weighting : ndarray, shape (L,)
        Pressure weighting function; sums to 1.
    averaging_kernel : ndarray, shape (L, L)
        Averaging kernel matrix (unitless sensitivity of the reported
        column to the true profile per level).
    """

    pressure: np.ndarray
    prior_profile: np.ndarray
    weighting: np.ndarray
    averaging_kernel: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "pressure", _readonly(self.pressure))
        object.__setattr__(self, "prior_profile", _readonly(self.prior_profile))
        object.__setattr__(self, "weighting", _readonly(self.weighting))
        object.__setattr__(self, "averaging_kernel", _readonly(self.averaging_kernel))
        n = self.pressure.shape[0] if self.pressure.ndim == 1 else -1
        if n < 1:
            raise InputError("pressure must be a 1-d sequence with at least one level")
        for name in ("prior_profile", "weighting"):
            arr = getattr(self, name)
            if arr.shape != (n,):
                raise InputError(f"{name} has shape {arr.shape}, expected ({n},)")
        if self.averaging_kernel.shape != (n, n):
            raise InputError(
                f"averaging_kernel has shape {self.averaging_kernel.shape}, expected ({n}, {n})"
            )
        for name in ("pressure", "prior_profile", "weighting", "averaging_kernel"):
            if not np.isfinite(getattr(self, name)).all():
                raise InputError(f"{name} contains non-finite values")
        diffs = np.diff(self.pressure)
        if n > 1 and not ((diffs > 0).all() or (diffs < 0).all()):
            raise InputError("pressure levels must be strictly monotone")
        s = math.fsum(self.weighting.tolist())
        if abs(s - 1.0) > 1e-9:
            raise InputError(f"pressure weighting function sums to {s!r}, expected 1 within 1e-9")

    @property
    def n_levels(self) -> int:
        return self.pressure.shape[0]

    @classmethod
    def from_diagonal_kernel(cls, pressure, prior_profile, weighting, kernel_diagonal) -> "SoundingGeometry":
        """Expand a vector-form averaging kernel (common in product files) to a diagonal matrix."""
        diag = np.asarray(kernel_diagonal, dtype=float)
        if diag.ndim != 1:
            raise InputError("kernel_diagonal must be a 1-d sequence")
        return cls(pressure, prior_profile, weighting, np.diag(diag))


@dataclass(frozen=True)
class KernelParams:
    """Covariance kernel parameters.

    Anisotropy between space and time is expressed through the two ranges;
    separations are scaled by them before the isotropic kernel applies.
    """

    family: KernelFamily
    sill: float
    spatial_range_km: float
    temporal_range_days: float
    nugget: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.family, KernelFamily):
            object.__setattr__(self, "family", KernelFamily.parse(str(self.family)))
        for name in ("sill", "spatial_range_km", "temporal_range_days"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise InputError(f"{name} must be finite and > 0, got {v!r}")
        if not (math.isfinite(self.nugget) and self.nugget >= 0.0):
            raise InputError(f"nugget must be finite and >= 0, got {self.nugget!r}")


@dataclass(frozen=True)
class GridSpec:
    """A regular latitude/longitude output grid for one day.

    Cell centers sit at ``min + cell_deg * (i + 0.5)``; the cell size must
    divide both extents evenly.  Cells are indexed row-major: latitude rows
    ascending from ``lat_min``, longitude ascending within each row.  The
    prediction time of every cell is ``day + 0.5`` (local midday of the
    daily window).
    """

    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float
    cell_deg: float = 1.0
    day: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.cell_deg) and self.cell_deg > 0.0):
            raise InputError(f"cell_deg must be > 0, got {self.cell_deg!r}")
        if not (-90.0 <= self.lat_min < self.lat_max <= 90.0):
            raise InputError("latitude extent must satisfy -90 <= lat_min < lat_max <= 90")
        if not (-180.0 <= self.lon_min < self.lon_max <= 180.0):
            raise InputError("longitude extent must satisfy -180 <= lon_min < lon_max <= 180")
        for lo, hi, label in ((self.lat_min, self.lat_max, "latitude"), (self.lon_min, self.lon_max, "longitude")):
            n = (hi - lo) / self.cell_deg
            if abs(n - round(n)) > 1e-9 or round(n) < 1:
                raise InputError(f"cell_deg {self.cell_deg!r} does not divide the {label} extent evenly")

    @property
    def n_lat(self) -> int:
        return int(round((self.lat_max - self.lat_min) / self.cell_deg))

    @property
    def n_lon(self) -> int:
        return int(round((self.lon_max - self.lon_min) / self.cell_deg))

    @property
    def n_cells(self) -> int:
        return self.n_lat * self.n_lon

    @property
    def cell_time(self) -> float:
        return self.day + 0.5

    def cell_center(self, index: int) -> SpaceTimePoint:
        if not 0 <= index < self.n_cells:
            raise InputError(f"cell index {index} outside [0, {self.n_cells})")
        i, j = divmod(index, self.n_lon)
        lat = self.lat_min + self.cell_deg * (i + 0.5)
        lon = self.lon_min + self.cell_deg * (j + 0.5)
        return normalize_point(lat, lon, self.cell_time)

    def cell_centers(self) -> list[SpaceTimePoint]:
        return [self.cell_center(k) for k in range(self.n_cells)]


@dataclass(frozen=True, eq=False)
class Raster:
    """Regular integer-valued lat/lon raster (surface masks, region maps).

    ``values`` is indexed ``[lat_row, lon_col]`` with row 0 at ``lat0`` and
    column 0 at ``lon0``.  The exact upper edge is treated as inside the
    last row/column.
    """

    lat0: float
    lon0: float
    cell_deg: float
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=np.int64, copy=True)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 2 or vals.shape[0] < 1 or vals.shape[1] < 1:
            raise InputError("raster values must be a non-empty 2-d integer array")
        if not (math.isfinite(self.cell_deg) and self.cell_deg > 0.0):
            raise InputError(f"raster cell_deg must be > 0, got {self.cell_deg!r}")

    @property
    def n_lat(self) -> int:
        return self.values.shape[0]

    @property
    def n_lon(self) -> int:
        return self.values.shape[1]

    @property
    def lat_max(self) -> float:
        return self.lat0 + self.cell_deg * self.n_lat

    @property
    def lon_max(self) -> float:
        return self.lon0 + self.cell_deg * self.n_lon

    def _index(self, coord: float, origin: float, count: int, label: str) -> int:
        idx = int(math.floor((coord - origin) / self.cell_deg))
        if idx == count and abs(coord - (origin + count * self.cell_deg)) < 1e-9:
            idx = count - 1
        if not 0 <= idx < count:
            raise InputError(f"{label} {coord!r} falls outside the raster")
        return idx

    def lookup(self, lat: float, lon: float) -> int:
        i = self._index(lat, self.lat0, self.n_lat, "latitude")
        j = self._index(lon, self.lon0, self.n_lon, "longitude")
        return int(self.values[i, j])

    def covers(self, grid: GridSpec) -> bool:
        return (
            self.lat0 <= grid.lat_min
            and self.lat_max >= grid.lat_max
            and self.lon0 <= grid.lon_min
            and self.lon_max >= grid.lon_max
        )
