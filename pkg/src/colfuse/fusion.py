"""Daily gridded fusion: concatenate instruments, filter, grid, estimate.

One day of observations (from one or several instruments) is fused onto a
regular grid separately per surface class.  Each class yields posterior
means, per-cell standard deviations, a sparse posterior precision over its
cells, and per-cell combined retrieval geometries formed with the cell's
effective weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from collections.abc import Mapping, Sequence

import numpy as np

from .covariance import build_cov, great_circle_km, kernel_value, points_array, scaled_distance_matrix
from .errors import InputError, NumericalError
from .kriging import combine_ancillary
from .types import GridSpec, KernelParams, Observation, Raster, SoundingGeometry, SpaceTimePoint, SurfaceClass
from .vecchia import JointPosterior, SparsePrecision, build_posterior, mean_weights, nearest_sets

# Observations beyond this many kernel ranges of every cell of a class are
# dropped from that class (kernel mass out there is below 1%).
TRUNCATION_RANGES = 5.0

MASK_OCEAN = 0
MASK_LAND = 1


@dataclass(frozen=True, eq=False)
class MetaDataset:
    """Observations from one or more instruments, concatenated block-wise.

    Instrument blocks keep their original order; ``instrument_sizes``
    records the block lengths.  ``geometries`` is an optional parallel
    sequence of per-sounding retrieval geometries.
    """

    observations: tuple[Observation, ...]
    instrument_sizes: tuple[int, ...]
    geometries: tuple[SoundingGeometry, ...] | None = None

    def __post_init__(self) -> None:
        if sum(self.instrument_sizes) != len(self.observations):
            raise InputError("instrument block sizes do not add up to the observation count")
        if self.geometries is not None and len(self.geometries) != len(self.observations):
            raise InputError(
                f"{len(self.geometries)} geometries for {len(self.observations)} observations"
            )

    def __len__(self) -> int:
        return len(self.observations)


def concat_instruments(datasets: Sequence[Sequence[Observation]], geometries=None) -> MetaDataset:
    """Concatenate per-instrument observation sequences into one meta-dataset.

    Order is preserved: instrument 1 block first, then instrument 2, and so
    on.  Per-observation noise is retained, so instruments with different
    error models coexist in one vector.
    """
    if len(datasets) < 1:
        raise InputError("at least one instrument dataset is required")
    obs: list[Observation] = []
    sizes = []
    for block in datasets:
        obs.extend(block)
        sizes.append(len(block))
    geoms = None
    if geometries is not None:
        geoms = []
        for block in geometries:
            geoms.extend(block)
        geoms = tuple(geoms)
    return MetaDataset(tuple(obs), tuple(sizes), geoms)


@dataclass(frozen=True, eq=False)
class GriddedCellEstimate:
    """Fused estimate for one grid cell."""

    grid_index: int
    center: SpaceTimePoint
    value: float
    sd: float
    surface_class: SurfaceClass
    n_contributing: int
    geometry: SoundingGeometry | None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.value) and math.isfinite(self.sd)):
            raise NumericalError(f"cell {self.grid_index}: non-finite estimate")
        if self.sd < 0.0:
            raise NumericalError(f"cell {self.grid_index}: negative posterior sd {self.sd!r}")
        if self.n_contributing < 0:
            raise InputError("n_contributing must be >= 0")


@dataclass(frozen=True, eq=False)
class DailyProduct:
    """One day's fused product: estimates and posterior precision per class."""

    day: int
    land: tuple[GriddedCellEstimate, ...]
    ocean: tuple[GriddedCellEstimate, ...]
    land_precision: SparsePrecision | None
    ocean_precision: SparsePrecision | None
    provenance: Mapping[str, str]
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for cells, prec, label in (
            (self.land, self.land_precision, "land"),
            (self.ocean, self.ocean_precision, "ocean"),
        ):
            if (len(cells) == 0) != (prec is None):
                raise InputError(f"{label}: precision must be present exactly when cells are")
            if prec is not None and prec.n != len(cells):
                raise InputError(f"{label}: precision dimension {prec.n} != {len(cells)} cells")

    def cells(self, surface: SurfaceClass) -> tuple[GriddedCellEstimate, ...]:
        return self.land if surface is SurfaceClass.LAND else self.ocean

    def precision(self, surface: SurfaceClass) -> SparsePrecision | None:
        return self.land_precision if surface is SurfaceClass.LAND else self.ocean_precision


def _within_truncation(obs_pts: np.ndarray, centers: np.ndarray, params: KernelParams, chunk: int = 2048):
    """Per-observation keep mask and per-cell contributing counts.

    An observation contributes to a cell when it lies within
    ``TRUNCATION_RANGES`` spatial ranges *and* temporal ranges of it; it is
    kept at all when it contributes to at least one cell.
    """
    p = obs_pts.shape[0]
    q = centers.shape[0]
    keep = np.zeros(p, dtype=bool)
    counts = np.zeros(q, dtype=np.int64)
    max_km = TRUNCATION_RANGES * params.spatial_range_km
    max_days = TRUNCATION_RANGES * params.temporal_range_days
    for start in range(0, p, chunk):
        sel = slice(start, min(start + chunk, p))
        gc = great_circle_km(
            obs_pts[sel, None, 0], obs_pts[sel, None, 1], centers[None, :, 0], centers[None, :, 1]
        )
        dt = np.abs(obs_pts[sel, None, 2] - centers[None, :, 2])
        ok = (gc <= max_km) & (dt <= max_days)
        keep[sel] = ok.any(axis=1)
        counts += ok.sum(axis=0)
    return keep, counts


def effective_weights(
    cell: SpaceTimePoint,
    obs: Sequence[Observation],
    params: KernelParams,
    m: int,
) -> np.ndarray:
    """Affine weights over the observations behind a cell's fused value.

    The cell's conditional regression on its ``m`` nearest observations is
    completed with the constant-mean weights so that the full vector sums
    to one; with ``m >= len(obs)`` it reproduces the dense constrained
    kriging coefficients.
    """
    p = len(obs)
    if p < 1:
        raise InputError("effective weights require at least one observation")
    obs_pts = points_array([o.point for o in obs])
    noise = np.array([o.noise_sd for o in obs], dtype=float)
    sel = nearest_sets(points_array([cell]), obs_pts, params, m)[0]

    block = kernel_value(params, scaled_distance_matrix(obs_pts[sel], obs_pts[sel], params))
    block[np.arange(sel.size), np.arange(sel.size)] += params.nugget + noise[sel] ** 2
    cross = kernel_value(
        params, scaled_distance_matrix(obs_pts[sel], points_array([cell]), params)
    )[:, 0]
    try:
        b = np.linalg.solve(block, cross)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"effective-weight solve failed: {exc}") from None

    weights = np.zeros(p)
    weights[sel] = b
    weights += (1.0 - b.sum()) * mean_weights(obs, params)
    return weights


def _batched_local_regressions(
    centers: np.ndarray,
    obs_pts: np.ndarray,
    noise: np.ndarray,
    params: KernelParams,
    m: int,
) -> tuple[list[np.ndarray], np.ndarray]:
    """Conditional regression coefficients of every cell on its nearest observations."""
    sets = nearest_sets(centers, obs_pts, params, m)
    k = sets[0].shape[0]
    gathered = np.stack(sets)  # all sets share size min(m, p)
    lat_s, lon_s, t_s = obs_pts[gathered, 0], obs_pts[gathered, 1], obs_pts[gathered, 2]
    gc = great_circle_km(lat_s[:, :, None], lon_s[:, :, None], lat_s[:, None, :], lon_s[:, None, :])
    d = np.hypot(gc / params.spatial_range_km, (t_s[:, :, None] - t_s[:, None, :]) / params.temporal_range_days)
    block = kernel_value(params, d)
    ix = np.arange(k)
    block[:, ix, ix] += params.nugget + noise[gathered] ** 2
    gc_x = great_circle_km(centers[:, None, 0], centers[:, None, 1], lat_s, lon_s)
    d_x = np.hypot(gc_x / params.spatial_range_km, (centers[:, None, 2] - t_s) / params.temporal_range_days)
    cross = kernel_value(params, d_x)
    try:
        b = np.linalg.solve(block, cross[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"local weight solve failed: {exc}") from None
    return sets, b


def _mean_geometry(geometries: Sequence[SoundingGeometry], u: np.ndarray) -> SoundingGeometry:
    return combine_ancillary(u, list(geometries))


def fuse_day(
    meta: MetaDataset,
    grid: GridSpec,
    mask: Raster,
    params_by_class: Mapping[SurfaceClass, KernelParams],
    m: int,
    *,
    mean_ppm: float,
    ordering_method: str = "maxmin",
    seed: int = 0,
    config_hash: str = "",
) -> DailyProduct:
    """Fuse one day of quality-filtered observations onto the grid.

    Land and ocean are processed independently: observations of one class
    never touch cells of the other.  Cells far from all data are still
    estimated, reverting to the configured mean with standard deviation
    approaching ``sqrt(sill + nugget)``.  Classes left empty after
    filtering are emitted prior-only with a warning.
    """
    if not mask.covers(grid):
        raise InputError("surface mask does not cover the grid extent")
    for cls in (SurfaceClass.LAND, SurfaceClass.OCEAN):
        if cls not in params_by_class:
            raise InputError(f"kernel parameters missing for {cls.value}")

    centers = grid.cell_centers()
    class_cells: dict[SurfaceClass, list[int]] = {SurfaceClass.LAND: [], SurfaceClass.OCEAN: []}
    for idx, c in enumerate(centers):
        code = mask.lookup(c.lat, c.lon)
        if code == MASK_LAND:
            class_cells[SurfaceClass.LAND].append(idx)
        elif code == MASK_OCEAN:
            class_cells[SurfaceClass.OCEAN].append(idx)
        else:
            raise InputError(f"mask value {code} at cell {idx} is neither land (1) nor ocean (0)")

    warnings: list[str] = []
    out_cells: dict[SurfaceClass, tuple[GriddedCellEstimate, ...]] = {}
    out_prec: dict[SurfaceClass, SparsePrecision | None] = {}

    for cls in (SurfaceClass.LAND, SurfaceClass.OCEAN):
        params = params_by_class[cls]
        indices = class_cells[cls]
        if not indices:
            out_cells[cls] = ()
            out_prec[cls] = None
            continue
        cell_pts = [centers[i] for i in indices]
        cell_arr = points_array(cell_pts)

        pool = [
            (i, o)
            for i, o in enumerate(meta.observations)
            if o.quality_flag and o.surface_class is cls
        ]
        obs_all = [o for _, o in pool]
        counts = np.zeros(len(indices), dtype=np.int64)
        kept: list[Observation] = []
        kept_src: list[int] = []
        if obs_all:
            obs_arr = points_array([o.point for o in obs_all])
            keep, counts = _within_truncation(obs_arr, cell_arr, params)
            kept = [o for o, k in zip(obs_all, keep) if k]
            kept_src = [pool[i][0] for i in np.flatnonzero(keep)]

        if not kept:
            warnings.append(f"{cls.value}: no usable observations; emitting prior-only estimates")
            post = build_posterior([], cell_pts, params, m, mean=mean_ppm, ordering_method=ordering_method)
            sd = post.posterior_sd()
            estimates = tuple(
                GriddedCellEstimate(indices[j], cell_pts[j], float(post.means[j]), float(sd[j]), cls, 0, None)
                for j in range(len(indices))
            )
            out_cells[cls] = estimates
            out_prec[cls] = post.precision
            continue

        post = build_posterior(kept, cell_pts, params, m, ordering_method=ordering_method)
        sd = post.posterior_sd()

        geoms = None
        if meta.geometries is not None:
            geoms = [meta.geometries[i] for i in kept_src]
        combined: list[SoundingGeometry | None] = [None] * len(indices)
        if geoms is not None:
            kept_pts = points_array([o.point for o in kept])
            kept_noise = np.array([o.noise_sd for o in kept], dtype=float)
            sets, b = _batched_local_regressions(cell_arr, kept_pts, kept_noise, params, m)
            g_mean = _mean_geometry(geoms, mean_weights(kept, params))
            for j in range(len(indices)):
                if counts[j] < 1:
                    continue  # gap-filled cell: no meaningful combined geometry
                fields = [geoms[s] for s in sets[j]] + [g_mean]
                w = np.append(b[j], 1.0 - b[j].sum())
                combined[j] = combine_ancillary(w, fields)

        estimates = tuple(
            GriddedCellEstimate(
                indices[j],
                cell_pts[j],
                float(post.means[j]),
                float(sd[j]),
                cls,
                int(counts[j]),
                combined[j],
            )
            for j in range(len(indices))
        )
        out_cells[cls] = estimates
        out_prec[cls] = post.precision

    params_land = params_by_class[SurfaceClass.LAND]
    params_ocean = params_by_class[SurfaceClass.OCEAN]
    provenance = {
        "format": "colfuse-product-v1",
        "day": str(grid.day),
        "cell_deg": repr(grid.cell_deg),
        "extent": f"{grid.lat_min} {grid.lat_max} {grid.lon_min} {grid.lon_max}",
        "m": str(m),
        "ordering": ordering_method,
        "seed": str(seed),
        "rng": "pcg64",
        "mean_ppm": repr(float(mean_ppm)),
        "truncation_ranges": repr(TRUNCATION_RANGES),
        "config_hash": config_hash,
        "kernel.land": _params_str(params_land),
        "kernel.ocean": _params_str(params_ocean),
    }
    return DailyProduct(
        grid.day,
        out_cells[SurfaceClass.LAND],
        out_cells[SurfaceClass.OCEAN],
        out_prec[SurfaceClass.LAND],
        out_prec[SurfaceClass.OCEAN],
        provenance,
        tuple(warnings),
    )


def _params_str(p: KernelParams) -> str:
    return (
        f"family={p.family.value} sill={p.sill!r} spatial_range_km={p.spatial_range_km!r} "
        f"temporal_range_days={p.temporal_range_days!r} nugget={p.nugget!r}"
    )


def sample_realizations(mean, precision: SparsePrecision, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` realizations of a Gaussian with the given mean and precision.

    Factors the precision and back-substitutes standard normals, which is
    distributionally identical to the covariance-Cholesky construction but
    never densifies the covariance.  Deterministic given the seed
    (PCG64 generator); returns an array of shape (count, n).
    """
    mu = np.asarray(mean, dtype=float)
    if mu.shape != (precision.n,):
        raise InputError(f"mean has shape {mu.shape}, expected ({precision.n},)")
    if count < 0:
        raise InputError("count must be >= 0")
    rng = np.random.default_rng(seed)
    eta = rng.standard_normal((precision.n, count))
    if count == 0:
        return np.empty((0, precision.n))
    factor = precision.factor()
    return (mu[:, None] + factor.sample_standard(eta)).T.copy()
