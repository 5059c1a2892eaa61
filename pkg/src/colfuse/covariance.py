"""Space-time covariance: scaled separations, kernel families, dense blocks.

The separation between two points is the unitless

    d = sqrt((great_circle_km / spatial_range_km)^2
             + (|dt_days| / temporal_range_days)^2)

so a single isotropic kernel of ``d`` expresses spatial/temporal
anisotropy through the two ranges.  All pairwise work funnels through one
haversine implementation, which keeps every consumer (dense blocks,
Vecchia conditionals, test oracles) numerically consistent.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from .errors import InputError, NumericalError
from .types import EARTH_RADIUS_KM, KernelFamily, KernelParams, SpaceTimePoint

_SQRT3 = math.sqrt(3.0)


def points_array(points: Sequence[SpaceTimePoint] | np.ndarray) -> np.ndarray:
    """Pack points into a float array of shape (p, 3) with columns lat, lon, time."""
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise InputError(f"point array must have shape (p, 3), got {arr.shape}")
        return arr
    return np.array([(p.lat, p.lon, p.time) for p in points], dtype=float).reshape(-1, 3)


def great_circle_km(lat1, lon1, lat2, lon2):
    """Great-circle distance in km between degree coordinates; inputs broadcast."""
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    half_dphi = (phi2 - phi1) / 2.0
    half_dlmb = np.radians(lon2 - lon1) / 2.0
    a = np.sin(half_dphi) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(half_dlmb) ** 2
    a = np.clip(a, 0.0, 1.0)
    return EARTH_RADIUS_KM * 2.0 * np.arcsin(np.sqrt(a))


def scaled_distance_matrix(a: np.ndarray, b: np.ndarray, params: KernelParams) -> np.ndarray:
    """Pairwise scaled separations between two packed point arrays, shape (na, nb)."""
    gc = great_circle_km(a[:, None, 0], a[:, None, 1], b[None, :, 0], b[None, :, 1])
    dt = a[:, None, 2] - b[None, :, 2]
    return np.hypot(gc / params.spatial_range_km, dt / params.temporal_range_days)


def scaled_distance(p1: SpaceTimePoint, p2: SpaceTimePoint, params: KernelParams) -> float:
    """Unitless space-time separation of two points under the kernel ranges.

    Symmetric in its arguments and zero exactly when both the spatial and
    temporal separations vanish.
    """
    gc = float(great_circle_km(p1.lat, p1.lon, p2.lat, p2.lon))
    return math.hypot(gc / params.spatial_range_km, (p1.time - p2.time) / params.temporal_range_days)


def kernel_value(params: KernelParams, d):
    """Evaluate the kernel at scaled distance ``d`` (scalar or array), in ppm^2.

    Families:

    - exponential:  sill * exp(-d)
    - matern32:     sill * (1 + sqrt(3) d) * exp(-sqrt(3) d)

    Both are monotone non-increasing with value ``sill`` at d = 0.  The
    nugget is *not* included here; it attaches to same-index diagonal
    entries in :func:`build_cov`.
    """
    arr = np.asarray(d, dtype=float)
    if (arr < 0).any():
        raise InputError("scaled distance must be >= 0")
    if params.family is KernelFamily.EXPONENTIAL:
        out = params.sill * np.exp(-arr)
    else:
        out = params.sill * (1.0 + _SQRT3 * arr) * np.exp(-_SQRT3 * arr)
    if np.isscalar(d):
        return float(out)
    return out


def build_cov(points_a, points_b, params: KernelParams, noise_sd=None) -> np.ndarray:
    """Assemble a dense covariance block between two point sets.

    Pass ``points_b=None`` (or the same object as ``points_a``) for a
    self-covariance block: the nugget is added on the diagonal, plus
    ``noise_sd[i]**2`` per observation when measurement noise is supplied.
    Distinct observations at the same location share only the kernel part,
    so coincident duplicates with zero nugget yield a rank-deficient block.

    Cross blocks (``points_b`` a different set) are pure kernel values and
    reject ``noise_sd``.
    """
    a = points_array(points_a)
    self_block = points_b is None or points_b is points_a
    b = a if self_block else points_array(points_b)
    cov = kernel_value(params, scaled_distance_matrix(a, b, params))
    if self_block:
        idx = np.arange(a.shape[0])
        cov[idx, idx] += params.nugget
        if noise_sd is not None:
            ns = np.asarray(noise_sd, dtype=float)
            if ns.shape != (a.shape[0],):
                raise InputError(f"noise_sd has shape {ns.shape}, expected ({a.shape[0]},)")
            if not np.isfinite(ns).all() or (ns < 0).any():
                raise InputError("noise_sd entries must be finite and >= 0")
            cov[idx, idx] += ns**2
    elif noise_sd is not None:
        raise InputError("noise_sd applies only to self-covariance blocks")
    if not np.isfinite(cov).all():
        raise NumericalError("covariance block contains non-finite entries")
    return cov
