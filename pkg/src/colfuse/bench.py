"""Timing harness contrasting the dense cubic solve with the sparse path.

The dense route factors the full covariance, which is cubic in the number
of observations and infeasible beyond a few thousand points; the
sequential-conditioning route builds the sparse precision in roughly
linear time at fixed ``m``.  Timings use a monotonic clock and report the
median of several runs plus fitted log-log slopes.
"""

from __future__ import annotations

import math
import os
import platform
import time
from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np
import scipy.linalg as spl

from .covariance import build_cov, points_array
from .errors import InputError
from .types import KernelParams
from .vecchia import _build_factor, _conditioning_arrays, make_ordering

DENSE_CAP = 3000


@dataclass(frozen=True)
class BenchRow:
    path: str
    size: int
    seconds: float


@dataclass(frozen=True)
class BenchTable:
    rows: tuple[BenchRow, ...]
    dense_slope: float | None
    vecchia_slope: float | None
    m: int
    ordering: str
    repeats: int
    machine: str

    def render(self) -> str:
        lines = [
            f"# machine: {self.machine}",
            f"# m = {self.m}, ordering = {self.ordering}, median of {self.repeats} runs",
            "path size seconds",
        ]
        for r in self.rows:
            lines.append(f"{r.path} {r.size} {r.seconds:.6f}")
        if self.dense_slope is not None:
            lines.append(f"dense_loglog_slope {self.dense_slope:.3f}")
        if self.vecchia_slope is not None:
            lines.append(f"vecchia_loglog_slope {self.vecchia_slope:.3f}")
        return "\n".join(lines)


def _machine_string() -> str:
    return (
        f"{platform.machine()} {platform.system()} python{platform.python_version()} "
        f"cpus={os.cpu_count()} threads={os.environ.get('OMP_NUM_THREADS', 'default')}"
    )


def random_points(p: int, seed: int, lat_span=40.0, lon_span=60.0, day_span=1.0) -> np.ndarray:
    """Uniform random points in a box, packed as (p, 3) lat/lon/time."""
    rng = np.random.default_rng(seed)
    lat = rng.uniform(-lat_span / 2, lat_span / 2, p)
    lon = rng.uniform(-lon_span / 2, lon_span / 2, p)
    t = rng.uniform(0.0, day_span, p)
    return np.column_stack([lat, lon, t])


def _median_time(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    times.sort()
    return times[len(times) // 2]


def time_dense_solve(pts: np.ndarray, params: KernelParams, noise: np.ndarray, repeats: int) -> float:
    """Median time of the cubic step: invert the dense covariance.

    The brute-force route needs the explicit inverse of the (p x p)
    covariance; it is computed by Cholesky factorization plus a solve
    against the identity.
    """
    p = pts.shape[0]
    if p > DENSE_CAP:
        raise InputError(f"dense path refuses p = {p} (> {DENSE_CAP}); use the sparse path")
    sigma = build_cov(pts, None, params, noise_sd=noise)
    eye = np.eye(p)

    def run():
        factor = spl.cho_factor(sigma, lower=True, check_finite=False)
        spl.cho_solve(factor, eye, check_finite=False)

    return _median_time(run, repeats)


def time_vecchia_build(pts: np.ndarray, params: KernelParams, noise: np.ndarray, m: int, ordering: str, repeats: int) -> float:
    """Median time to order, pick conditioning sets, and build the sparse factor."""

    def run():
        order = make_ordering(pts, params, ordering)
        perm = order.permutation
        lat, lon, t = pts[perm, 0], pts[perm, 1], pts[perm, 2]
        sets = _conditioning_arrays(lat, lon, t, params, m)
        u, _ = _build_factor(lat, lon, t, params.nugget + noise[perm] ** 2, params, sets)
        (u.T @ u).tocsr()

    return _median_time(run, repeats)


def _loglog_slope(sizes: Sequence[int], times: Sequence[float]) -> float:
    x = np.log(np.asarray(sizes, dtype=float))
    y = np.log(np.maximum(np.asarray(times, dtype=float), 1e-9))
    return float(np.polyfit(x, y, 1)[0])


def bench_vecchia_scaling(
    dense_sizes: Sequence[int],
    vecchia_sizes: Sequence[int],
    m: int,
    params: KernelParams,
    seed: int,
    *,
    ordering: str = "sorted",
    repeats: int = 5,
    noise_sd: float = 0.5,
) -> BenchTable:
    """Time both paths over ascending sizes and fit log-log slopes.

    The sparse path defaults to the coordinate-sorted ordering so the
    measured scaling reflects the conditioning/factor pipeline rather than
    the quadratic max-min ordering; the choice is recorded in the output.
    """
    for sizes in (dense_sizes, vecchia_sizes):
        if list(sizes) != sorted(sizes):
            raise InputError("benchmark sizes must be ascending")
    # Warm up BLAS/LAPACK so the first timed size does not absorb
    # one-time initialization cost.
    warm = random_points(256, seed)
    time_dense_solve(warm, params, np.full(256, noise_sd), 1)
    time_vecchia_build(warm, params, np.full(256, noise_sd), m, ordering, 1)
    rows: list[BenchRow] = []
    dense_times = []
    for p in dense_sizes:
        pts = random_points(p, seed)
        noise = np.full(p, noise_sd)
        sec = time_dense_solve(pts, params, noise, repeats)
        rows.append(BenchRow("dense", p, sec))
        dense_times.append(sec)
    vecchia_times = []
    for p in vecchia_sizes:
        pts = random_points(p, seed)
        noise = np.full(p, noise_sd)
        sec = time_vecchia_build(pts, params, noise, m, ordering, repeats)
        rows.append(BenchRow("vecchia", p, sec))
        vecchia_times.append(sec)
    dense_slope = _loglog_slope(dense_sizes, dense_times) if len(dense_times) >= 2 else None
    vecchia_slope = _loglog_slope(vecchia_sizes, vecchia_times) if len(vecchia_times) >= 2 else None
    return BenchTable(
        tuple(rows), dense_slope, vecchia_slope, m, ordering, repeats, _machine_string()
    )
