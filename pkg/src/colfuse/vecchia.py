"""Scalable Gaussian-process machinery via sequential conditioning.

The joint density of ordered points is factored into per-point Gaussian
conditionals, each conditioned on at most ``m`` earlier neighbors.  Row
``i`` of the resulting sparse triangular factor ``U`` has nonzeros only at
``i`` and its conditioning set, and the represented precision matrix is
``U^T U``.  At ``m = p - 1`` this reproduces the dense inverse exactly.

Prediction locations are handled by a joint sequence with observations
first (each block ordered by the spread-out max-min rule), so the grid
block of the joint precision *is* the posterior precision of the grid
given the observations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree
from scipy.sparse.linalg import splu

from .covariance import great_circle_km, kernel_value, points_array
from .errors import InputError, NumericalError
from .kriging import _cho_factor_regularized, find_zero_noise_duplicates
from .types import EARTH_RADIUS_KM, KernelParams, Observation, SpaceTimePoint

import scipy.linalg as spl

# Above this many points, neighbor searches switch from vectorized brute
# force to a KD-tree with exact re-ranking.
_BRUTE_LIMIT = 3000

# Great-circle over chordal distance never exceeds pi/2; used to certify
# KD-tree candidate lists against the true metric.
_GC_OVER_CHORD = math.pi / 2.0


@dataclass(frozen=True, eq=False)
class Ordering:
    """A bijective visit order over points, tagged with the rule that made it."""

    permutation: np.ndarray
    method: str

    def __post_init__(self) -> None:
        perm = np.asarray(self.permutation, dtype=np.intp)
        perm.setflags(write=False)
        object.__setattr__(self, "permutation", perm)
        n = perm.shape[0]
        if perm.ndim != 1 or n < 1:
            raise InputError("ordering permutation must be a non-empty 1-d index array")
        seen = np.zeros(n, dtype=bool)
        if (perm < 0).any() or (perm >= n).any():
            raise InputError("ordering permutation indices out of range")
        seen[perm] = True
        if not seen.all():
            raise InputError("ordering permutation is not bijective")

    def __len__(self) -> int:
        return self.permutation.shape[0]


@dataclass(frozen=True, eq=False)
class ConditioningSets:
    """Per ordered index ``i``, the (at most ``m``) earlier indices it conditions on."""

    m: int
    sets: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        frozen = []
        for i, s in enumerate(self.sets):
            arr = np.asarray(s, dtype=np.intp)
            arr.setflags(write=False)
            if arr.shape[0] != min(i, self.m):
                raise InputError(f"conditioning set {i} has size {arr.shape[0]}, expected {min(i, self.m)}")
            if arr.shape[0] and (arr.min() < 0 or arr.max() >= i):
                raise InputError(f"conditioning set {i} references non-predecessor indices")
            frozen.append(arr)
        object.__setattr__(self, "sets", tuple(frozen))

    def __len__(self) -> int:
        return len(self.sets)


@dataclass(frozen=True, eq=False)
class SparsePrecision:
    """Symmetric positive-definite precision matrix in triplet (DOK-style) layout.

    Only the lower triangle is stored: ``row >= col``, one entry per
    coordinate pair, sorted by (row, col).  Positive definiteness is
    checked on demand by :meth:`factor` succeeding.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.intp)
        cols = np.asarray(self.cols, dtype=np.intp)
        vals = np.asarray(self.values, dtype=float)
        if not (rows.shape == cols.shape == vals.shape) or rows.ndim != 1:
            raise InputError("triplet arrays must be 1-d and of equal length")
        if self.n < 1:
            raise InputError("precision dimension must be >= 1")
        if rows.size:
            if rows.min() < 0 or rows.max() >= self.n or cols.min() < 0 or cols.max() >= self.n:
                raise InputError("triplet index out of range")
            if (rows < cols).any():
                raise InputError("upper-triangle triplet present; store the lower triangle only")
            if not np.isfinite(vals).all():
                raise InputError("triplet values must be finite")
            order = np.lexsort((cols, rows))
            rows, cols, vals = rows[order], cols[order], vals[order]
            dup = (np.diff(rows) == 0) & (np.diff(cols) == 0)
            if dup.any():
                k = int(np.flatnonzero(dup)[0])
                raise InputError(f"duplicate triplet at ({rows[k]}, {cols[k]})")
        for name, arr in (("rows", rows), ("cols", cols), ("values", vals)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def nnz(self) -> int:
        return self.rows.shape[0]

    @classmethod
    def from_matrix(cls, mat) -> "SparsePrecision":
        """Build from any dense or scipy-sparse symmetric matrix (lower triangle kept)."""
        coo = sp.coo_matrix(mat)
        coo.sum_duplicates()
        keep = coo.row >= coo.col
        return cls(coo.shape[0], coo.row[keep], coo.col[keep], coo.data[keep])

    def to_csc(self) -> sp.csc_matrix:
        """Full symmetric matrix, mirroring the stored lower triangle."""
        off = self.rows != self.cols
        rows = np.concatenate([self.rows, self.cols[off]])
        cols = np.concatenate([self.cols, self.rows[off]])
        vals = np.concatenate([self.values, self.values[off]])
        return sp.coo_matrix((vals, (rows, cols)), shape=(self.n, self.n)).tocsc()

    def to_dense(self) -> np.ndarray:
        return self.to_csc().toarray()

    def permuted(self, new_index: np.ndarray) -> "SparsePrecision":
        """Re-index entries: entry (i, j) moves to (new_index[i], new_index[j])."""
        idx = np.asarray(new_index, dtype=np.intp)
        r = idx[self.rows]
        c = idx[self.cols]
        swap = r < c
        r[swap], c[swap] = c[swap], r[swap].copy()
        return SparsePrecision(self.n, r, c, self.values)

    def factor(self) -> "PrecisionFactor":
        """No-pivot LDL^T factorization; raises NumericalError if not positive definite."""
        return PrecisionFactor(self)


class PrecisionFactor:
    """Sparse LDL^T factorization of a SparsePrecision in natural order.

    Wraps a SuperLU decomposition run without pivoting, which for a
    symmetric positive-definite matrix yields ``Q = L D L^T`` with unit
    lower-triangular ``L``.
    """

    def __init__(self, precision: SparsePrecision) -> None:
        csc = precision.to_csc()
        try:
            lu = splu(
                csc,
                permc_spec="NATURAL",
                diag_pivot_thresh=0.0,
                options=dict(SymmetricMode=True),
            )
        except RuntimeError as exc:
            raise NumericalError(f"sparse factorization failed: {exc}") from None
        n = precision.n
        if not (np.array_equal(lu.perm_r, np.arange(n)) and np.array_equal(lu.perm_c, np.arange(n))):
            raise NumericalError("factorization required pivoting; matrix is not positive definite")
        d = lu.U.diagonal()
        if not np.isfinite(d).all() or (d <= 0.0).any():
            k = int(np.flatnonzero(~(np.isfinite(d) & (d > 0.0)))[0])
            raise NumericalError(f"matrix is not positive definite (pivot {k} is {d[k]!r})")
        self._lu = lu
        self._unit_lower = lu.L.tocsr()
        self._sqrt_d = np.sqrt(d)
        self.n = n

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve ``Q x = b`` for 1-d or column-stacked right-hand sides."""
        return self._lu.solve(np.asarray(b, dtype=float))

    def sample_standard(self, eta: np.ndarray) -> np.ndarray:
        """Map iid standard normals (n, k) to draws with covariance ``Q^{-1}``.

        Uses ``x = Q^{-1} L D^{1/2} eta = L^{-T} D^{-1/2} eta`` so only the
        fast full solve is needed.
        """
        eta = np.asarray(eta, dtype=float)
        scaled = eta * self._sqrt_d[:, None] if eta.ndim == 2 else eta * self._sqrt_d
        return self._lu.solve(self._unit_lower @ scaled)

    def covariance_diagonal(self, chunk: int = 128) -> np.ndarray:
        """Diagonal of ``Q^{-1}`` via chunked solves against identity columns."""
        out = np.empty(self.n)
        for start in range(0, self.n, chunk):
            k = min(chunk, self.n - start)
            rhs = np.zeros((self.n, k))
            rhs[start + np.arange(k), np.arange(k)] = 1.0
            sol = self._lu.solve(rhs)
            out[start : start + k] = sol[start + np.arange(k), np.arange(k)]
        return out


# ---------------------------------------------------------------------------
# geometry helpers on packed coordinate arrays


def _unit_xyz(lat: np.ndarray, lon: np.ndarray) -> np.ndarray:
    phi = np.radians(lat)
    lam = np.radians(lon)
    return np.stack([np.cos(phi) * np.cos(lam), np.cos(phi) * np.sin(lam), np.sin(phi)], axis=-1)


def _scaled_coords(lat, lon, t, params: KernelParams) -> np.ndarray:
    """4-d embedding whose Euclidean metric lower-bounds the true scaled distance."""
    xyz = _unit_xyz(lat, lon) * (EARTH_RADIUS_KM / params.spatial_range_km)
    return np.column_stack([xyz, np.asarray(t, dtype=float) / params.temporal_range_days])


def _dist_one_to_many(lat, lon, t, i: int, params: KernelParams, sel=slice(None)) -> np.ndarray:
    gc = great_circle_km(lat[i], lon[i], lat[sel], lon[sel])
    return np.hypot(gc / params.spatial_range_km, (t[sel] - t[i]) / params.temporal_range_days)


def _dist_gathered(lat_a, lon_a, t_a, lat_b, lon_b, t_b, params: KernelParams) -> np.ndarray:
    gc = great_circle_km(lat_a, lon_a, lat_b, lon_b)
    return np.hypot(gc / params.spatial_range_km, (t_a - t_b) / params.temporal_range_days)


# ---------------------------------------------------------------------------
# ordering


def order_maxmin(points, params: KernelParams) -> Ordering:
    """Spread-out ordering: start near the cloud centroid, then repeatedly
    pick the point with the largest minimum scaled distance to those
    already ordered.  Ties are broken by original index.

    The centroid is the spherical projection of the Euclidean mean of the
    unit location vectors (latitude/longitude 0 if that mean vanishes),
    paired with the mean time.
    """
    pts = points_array(points)
    p = pts.shape[0]
    if p < 1:
        raise InputError("ordering requires at least one point")
    lat, lon, t = pts[:, 0], pts[:, 1], pts[:, 2]
    mean_xyz = _unit_xyz(lat, lon).mean(axis=0)
    norm = np.linalg.norm(mean_xyz)
    if norm < 1e-12:
        lat_c, lon_c = 0.0, 0.0
    else:
        u = mean_xyz / norm
        lat_c = math.degrees(math.asin(min(1.0, max(-1.0, u[2]))))
        lon_c = math.degrees(math.atan2(u[1], u[0]))
    gc = great_circle_km(lat, lon, lat_c, lon_c)
    d0 = np.hypot(gc / params.spatial_range_km, (t - t.mean()) / params.temporal_range_days)
    first = int(np.argmin(d0))

    order = np.empty(p, dtype=np.intp)
    order[0] = first
    mindist = _dist_one_to_many(lat, lon, t, first, params)
    mindist[first] = -np.inf
    for step in range(1, p):
        nxt = int(np.argmax(mindist))
        order[step] = nxt
        np.minimum(mindist, _dist_one_to_many(lat, lon, t, nxt, params), out=mindist)
        mindist[nxt] = -np.inf
    return Ordering(order, "maxmin")


def order_sorted(points) -> Ordering:
    """Coordinate-sorted ordering (latitude, then longitude, then time)."""
    pts = points_array(points)
    if pts.shape[0] < 1:
        raise InputError("ordering requires at least one point")
    perm = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))
    return Ordering(perm.astype(np.intp), "sorted")


def make_ordering(points, params: KernelParams, method: str) -> Ordering:
    if method == "maxmin":
        return order_maxmin(points, params)
    if method == "sorted":
        return order_sorted(points)
    raise InputError(f"unknown ordering method {method!r}; expected 'maxmin' or 'sorted'")


# ---------------------------------------------------------------------------
# conditioning sets


def _nearest_predecessors_brute(lat, lon, t, params, m) -> list[np.ndarray]:
    p = lat.shape[0]
    sets: list[np.ndarray] = [np.empty(0, dtype=np.intp)]
    for i in range(1, p):
        d = _dist_one_to_many(lat, lon, t, i, params, sel=slice(0, i))
        k = min(i, m)
        picked = np.lexsort((np.arange(i), d))[:k]
        sets.append(np.sort(picked).astype(np.intp))
    return sets


def _nearest_predecessors_tree(lat, lon, t, params, m) -> list[np.ndarray]:
    """Exact nearest predecessors for large point counts.

    Queries a KD-tree in a chordal embedding (a lower bound on the true
    metric), then re-ranks candidates with the true metric.  The candidate
    list is widened until the m-th best predecessor is provably closer
    than every unexamined point.
    """
    p = lat.shape[0]
    coords = _scaled_coords(lat, lon, t, params)
    tree = cKDTree(coords)
    sets: list[np.ndarray] = []
    for i in range(p):
        k_needed = min(i, m)
        if k_needed == 0:
            sets.append(np.empty(0, dtype=np.intp))
            continue
        if i <= 4 * m:
            d = _dist_one_to_many(lat, lon, t, i, params, sel=slice(0, i))
            picked = np.lexsort((np.arange(i), d))[:k_needed]
            sets.append(np.sort(picked).astype(np.intp))
            continue
        K = min(p, max(4 * m + 16, int(1.5 * m * p / i)))
        while True:
            dd, jj = tree.query(coords[i], k=K)
            preds = jj[(jj < i) & (jj != i)]
            if preds.shape[0] >= k_needed:
                d_true = _dist_gathered(lat[i], lon[i], t[i], lat[preds], lon[preds], t[preds], params)
                take = np.lexsort((preds, d_true))[:k_needed]
                worst = d_true[take[-1]]
                # Every unexamined point has kd-distance >= dd[-1], hence
                # true distance >= dd[-1]; strict inequality also rules
                # out ties that could win on index order.
                if K >= p or worst < dd[-1]:
                    sets.append(np.sort(preds[take]).astype(np.intp))
                    break
            elif K >= p:
                d_true = _dist_gathered(lat[i], lon[i], t[i], lat[preds], lon[preds], t[preds], params)
                take = np.lexsort((preds, d_true))[:k_needed]
                sets.append(np.sort(preds[take]).astype(np.intp))
                break
            K = min(p, 2 * K)
    return sets


def _conditioning_arrays(lat, lon, t, params, m) -> list[np.ndarray]:
    if lat.shape[0] <= _BRUTE_LIMIT:
        return _nearest_predecessors_brute(lat, lon, t, params, m)
    return _nearest_predecessors_tree(lat, lon, t, params, m)


def conditioning_sets(ordering: Ordering, points, params: KernelParams, m: int) -> ConditioningSets:
    """For each ordered index, the ``min(i, m)`` nearest earlier-ordered points.

    Nearness is the scaled space-time distance; ties prefer the smaller
    ordered index.  Set members are expressed as ordered indices.
    """
    if m < 1:
        raise InputError("conditioning set size m must be >= 1")
    pts = points_array(points)
    if pts.shape[0] != len(ordering):
        raise InputError(f"ordering covers {len(ordering)} points but {pts.shape[0]} were given")
    perm = ordering.permutation
    lat, lon, t = pts[perm, 0], pts[perm, 1], pts[perm, 2]
    return ConditioningSets(m, tuple(_conditioning_arrays(lat, lon, t, params, m)))


def nearest_sets(query_points, candidate_points, params: KernelParams, m: int) -> list[np.ndarray]:
    """For each query point, the indices of its ``min(m, n)`` nearest candidates.

    Same metric and tie rule as :func:`conditioning_sets`, without the
    predecessor constraint.  Used to localize per-cell weight solves.
    """
    qry = points_array(query_points)
    cand = points_array(candidate_points)
    nq, nc = qry.shape[0], cand.shape[0]
    k = min(m, nc)
    if k == nc:
        return [np.arange(nc, dtype=np.intp)] * nq
    out: list[np.ndarray] = []
    if nc <= _BRUTE_LIMIT:
        for i in range(nq):
            d = _dist_gathered(qry[i, 0], qry[i, 1], qry[i, 2], cand[:, 0], cand[:, 1], cand[:, 2], params)
            picked = np.lexsort((np.arange(nc), d))[:k]
            out.append(np.sort(picked).astype(np.intp))
        return out
    coords_c = _scaled_coords(cand[:, 0], cand[:, 1], cand[:, 2], params)
    coords_q = _scaled_coords(qry[:, 0], qry[:, 1], qry[:, 2], params)
    tree = cKDTree(coords_c)
    for i in range(nq):
        K = min(nc, 4 * k + 16)
        while True:
            dd, jj = tree.query(coords_q[i], k=K)
            d_true = _dist_gathered(qry[i, 0], qry[i, 1], qry[i, 2], cand[jj, 0], cand[jj, 1], cand[jj, 2], params)
            take = np.lexsort((jj, d_true))[:k]
            if K >= nc or d_true[take[-1]] < dd[-1]:
                out.append(np.sort(jj[take]).astype(np.intp))
                break
            K = min(nc, 2 * K)
    return out


# ---------------------------------------------------------------------------
# factor construction


def _reject_zero_noise_duplicates(pts: np.ndarray, noise: np.ndarray) -> None:
    dup = find_zero_noise_duplicates(pts, noise)
    if dup is not None:
        raise InputError(
            f"observations {dup[0]} and {dup[1]} share an identical location/time with zero "
            "noise; jitter one of them or supply measurement noise"
        )


def _build_factor(
    lat: np.ndarray,
    lon: np.ndarray,
    t: np.ndarray,
    diag_extra: np.ndarray,
    params: KernelParams,
    sets: Sequence[np.ndarray],
    floor_from: int | None = None,
) -> tuple[sp.csr_matrix, np.ndarray]:
    """Sparse triangular factor U and conditional variances d.

    Row ``i`` of U carries ``1/sqrt(d_i)`` at column ``i`` and
    ``-b_i/sqrt(d_i)`` over its conditioning set, where ``b_i`` solves the
    conditional regression of point ``i`` on the set and ``d_i`` is the
    conditional variance.  ``diag_extra[i]`` (nugget plus squared noise)
    augments the marginal variance of point ``i``.

    Rows at or beyond ``floor_from`` (prediction locations) may reach zero
    conditional variance legitimately, by coinciding with a noise-free
    observation; those are floored at ``1e-12 * sill`` instead of raising.
    """
    p = lat.shape[0]
    d_cond = np.empty(p)
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []

    sizes = np.array([s.shape[0] for s in sets], dtype=np.intp)
    marginal = params.sill + diag_extra
    floor = 1e-12 * params.sill

    for k in np.unique(sizes):
        idx = np.flatnonzero(sizes == k)
        if k == 0:
            d_cond[idx] = marginal[idx]
            continue
        gathered = np.stack([sets[i] for i in idx])  # (nk, k)
        lat_s, lon_s, t_s = lat[gathered], lon[gathered], t[gathered]
        within = _dist_gathered(
            lat_s[:, :, None], lon_s[:, :, None], t_s[:, :, None],
            lat_s[:, None, :], lon_s[:, None, :], t_s[:, None, :],
            params,
        )
        block = kernel_value(params, within)
        diag_ix = np.arange(k)
        block[:, diag_ix, diag_ix] += diag_extra[gathered]
        cross = kernel_value(
            params,
            _dist_gathered(lat[idx, None], lon[idx, None], t[idx, None], lat_s, lon_s, t_s, params),
        )
        try:
            b = np.linalg.solve(block, cross[..., None])[..., 0]
        except np.linalg.LinAlgError:
            # Coincident points inside a conditioning set make the block
            # exactly singular; a negligible ridge restores a usable
            # (pseudo-inverse-like) regression.
            block[:, diag_ix, diag_ix] += 1e-12 * params.sill
            try:
                b = np.linalg.solve(block, cross[..., None])[..., 0]
            except np.linalg.LinAlgError as exc:
                raise NumericalError(
                    f"conditioning block solve failed for set size {k}: {exc}"
                ) from None
        dc = marginal[idx] - np.einsum("ik,ik->i", cross, b)
        floorable = idx >= floor_from if floor_from is not None else np.zeros(idx.shape, dtype=bool)
        tiny = dc < floor
        dc = np.where(floorable & tiny & (dc > -1e-9 * params.sill), floor, dc)
        bad = dc <= 0.0
        if bad.any():
            off = int(idx[np.flatnonzero(bad)[0]])
            raise NumericalError(
                f"non-positive conditional variance at ordered index {off}; "
                "points may be numerically duplicated"
            )
        d_cond[idx] = dc
        scale = 1.0 / np.sqrt(dc)
        rows.append(np.repeat(idx, k))
        cols.append(gathered.ravel())
        vals.append((-b * scale[:, None]).ravel())

    all_idx = np.arange(p, dtype=np.intp)
    rows.append(all_idx)
    cols.append(all_idx)
    vals.append(1.0 / np.sqrt(d_cond))
    u = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(p, p)
    ).tocsr()
    return u, d_cond


def sparse_precision(points, params: KernelParams, noise_sd=None, m: int = 10) -> SparsePrecision:
    """Sequential-conditioning precision matrix of pre-ordered points.

    ``noise_sd`` supplies per-point measurement noise (``None`` for latent
    grid values).  The result is expressed in the given point order; at
    ``m = p - 1`` it equals the dense covariance inverse.
    """
    pts = points_array(points)
    p = pts.shape[0]
    if p < 1:
        raise InputError("sparse_precision requires at least one point")
    if m < 1:
        raise InputError("conditioning set size m must be >= 1")
    if noise_sd is None:
        noise = np.zeros(p)
    else:
        noise = np.asarray(noise_sd, dtype=float)
        if noise.shape != (p,):
            raise InputError(f"noise_sd has shape {noise.shape}, expected ({p},)")
        if not np.isfinite(noise).all() or (noise < 0).any():
            raise InputError("noise_sd entries must be finite and >= 0")
        _reject_zero_noise_duplicates(pts, noise)
    lat, lon, t = pts[:, 0], pts[:, 1], pts[:, 2]
    sets = _conditioning_arrays(lat, lon, t, params, m)
    u, _ = _build_factor(lat, lon, t, params.nugget + noise**2, params, sets)
    return SparsePrecision.from_matrix(u.T @ u)


def _estimate_constant_mean(pts: np.ndarray, z: np.ndarray, noise: np.ndarray, params: KernelParams) -> float:
    """Constant-mean estimate: generalized least squares under the dense
    model up to 500 points, plain observation mean beyond."""
    p = z.shape[0]
    if p > 500:
        return float(z.mean())
    from .covariance import build_cov

    sigma = build_cov(pts, None, params, noise_sd=noise)
    factor, _ = _cho_factor_regularized(sigma, params.sill)
    y = spl.cho_solve(factor, np.ones(p), check_finite=False)
    denom = math.fsum(y.tolist())
    if denom <= 0.0:
        raise NumericalError("GLS mean estimate is degenerate")
    return math.fsum((y * z).tolist()) / denom


def mean_weights(obs: Sequence[Observation], params: KernelParams) -> np.ndarray:
    """Weights of the constant-mean estimate over the observations.

    GLS weights ``Sigma^-1 1 / (1^T Sigma^-1 1)`` up to 500 observations,
    uniform ``1/p`` beyond (matching the plug-in observation mean).
    """
    p = len(obs)
    if p > 500:
        return np.full(p, 1.0 / p)
    from .covariance import build_cov

    pts = points_array([o.point for o in obs])
    noise = np.array([o.noise_sd for o in obs], dtype=float)
    sigma = build_cov(pts, None, params, noise_sd=noise)
    factor, _ = _cho_factor_regularized(sigma, params.sill)
    y = spl.cho_solve(factor, np.ones(p), check_finite=False)
    return y / math.fsum(y.tolist())


@dataclass(frozen=True, eq=False)
class JointPosterior:
    """Posterior over grid points: mean vector and sparse precision, both in
    the caller's original grid order."""

    mean_value: float
    means: np.ndarray
    precision: SparsePrecision
    ordering_method: str
    m: int

    def posterior_sd(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.precision.factor().covariance_diagonal(), 0.0))


def build_posterior(
    obs: Sequence[Observation],
    grid_points: Sequence[SpaceTimePoint],
    params: KernelParams,
    m: int,
    *,
    mean: float | None = None,
    ordering_method: str = "maxmin",
) -> JointPosterior:
    """Condition the grid on observations through a joint sequence.

    Observations come first (ordered among themselves), then grid points
    (ordered among themselves); every grid point conditions on its nearest
    predecessors across both blocks, so the grid block of the joint
    precision is the posterior precision and a sparse solve yields the
    posterior mean.

    ``mean=None`` estimates the constant mean from the observations; an
    explicit value is required when there are none.
    """
    q = len(grid_points)
    if q < 1:
        raise InputError("at least one grid point is required")
    if m < 1:
        raise InputError("conditioning set size m must be >= 1")
    grid_arr = points_array(grid_points)
    g_order = make_ordering(grid_arr, params, ordering_method)
    gperm = g_order.permutation

    p = len(obs)
    if p == 0:
        if mean is None:
            raise InputError("an explicit prior mean is required when no observations are given")
        lat, lon, t = grid_arr[gperm, 0], grid_arr[gperm, 1], grid_arr[gperm, 2]
        sets = _conditioning_arrays(lat, lon, t, params, m)
        u, _ = _build_factor(lat, lon, t, np.full(q, params.nugget), params, sets, floor_from=0)
        q_perm = SparsePrecision.from_matrix(u.T @ u)
        return JointPosterior(
            float(mean), np.full(q, float(mean)), q_perm.permuted(gperm), ordering_method, m
        )

    obs_arr = points_array([o.point for o in obs])
    z = np.array([o.value for o in obs], dtype=float)
    noise = np.array([o.noise_sd for o in obs], dtype=float)
    _reject_zero_noise_duplicates(obs_arr, noise)
    mean_used = float(mean) if mean is not None else _estimate_constant_mean(obs_arr, z, noise, params)

    o_order = make_ordering(obs_arr, params, ordering_method)
    operm = o_order.permutation

    lat = np.concatenate([obs_arr[operm, 0], grid_arr[gperm, 0]])
    lon = np.concatenate([obs_arr[operm, 1], grid_arr[gperm, 1]])
    t = np.concatenate([obs_arr[operm, 2], grid_arr[gperm, 2]])
    diag_extra = np.concatenate([params.nugget + noise[operm] ** 2, np.full(q, params.nugget)])

    sets = _conditioning_arrays(lat, lon, t, params, m)
    u, _ = _build_factor(lat, lon, t, diag_extra, params, sets, floor_from=p)
    u_go = u[p:, :p].tocsr()
    u_gg = u[p:, p:].tocsr()

    q_perm = SparsePrecision.from_matrix(u_gg.T @ u_gg)
    factor = q_perm.factor()
    residual = z[operm] - mean_used
    delta = factor.solve(-(u_gg.T @ (u_go @ residual)))

    means = np.empty(q)
    means[gperm] = mean_used + delta
    return JointPosterior(mean_used, means, q_perm.permuted(gperm), ordering_method, m)


def posterior_precision(
    obs: Sequence[Observation],
    grid_points: Sequence[SpaceTimePoint],
    params: KernelParams,
    m: int,
    *,
    mean: float | None = None,
    ordering_method: str = "maxmin",
) -> tuple[np.ndarray, SparsePrecision]:
    """Posterior mean and sparse posterior precision over ``grid_points``."""
    post = build_posterior(obs, grid_points, params, m, mean=mean, ordering_method=ordering_method)
    return post.means, post.precision
