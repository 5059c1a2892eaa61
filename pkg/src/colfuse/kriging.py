"""Dense, exact constrained kriging: the correctness oracle for the sparse path.

Solves the best-linear-unbiased predictor with an unknown constant mean
(weights constrained to sum to one) through the augmented saddle system

    [ Sigma  1 ] [ a ]   [ c0 ]
    [  1^T   0 ] [ l ] = [ 1  ]

where ``Sigma`` is the observation covariance including nugget and
per-observation noise, and ``c0`` the cross-covariance to the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np
import scipy.linalg as spl

from .covariance import build_cov, kernel_value, points_array, scaled_distance_matrix
from .errors import InputError, NumericalError, SingularSystemError
from .types import KernelParams, Observation, SoundingGeometry, SpaceTimePoint


@dataclass(frozen=True)
class KrigingSolution:
    """Weights, Lagrange multiplier, prediction and its variance for one target.

    ``regularized`` flags solves where a tiny diagonal ridge was needed to
    factor a near-singular covariance (near-duplicate points).
    """

    weights: np.ndarray
    lagrange: float
    prediction: float
    prediction_variance: float
    regularized: bool = False

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        s = math.fsum(w.tolist())
        if abs(s - 1.0) > 1e-10:
            raise NumericalError(f"kriging weights sum to {s!r}, violating the unbiasedness constraint")
        if self.prediction_variance < -1e-9:
            raise NumericalError(f"prediction variance {self.prediction_variance!r} is negative")


def find_zero_noise_duplicates(points_arr: np.ndarray, noise_sd: np.ndarray) -> tuple[int, int] | None:
    """Return the first pair of indices sharing a location/time with zero noise, if any."""
    zero = np.flatnonzero(noise_sd == 0.0)
    seen: dict[tuple[float, float, float], int] = {}
    for i in zero:
        key = (points_arr[i, 0], points_arr[i, 1], points_arr[i, 2])
        if key in seen:
            return seen[key], int(i)
        seen[key] = int(i)
    return None


def _cho_factor_regularized(sigma: np.ndarray, sill: float):
    """Cholesky with a one-shot ridge retry when pivots degenerate.

    Adds ``1e-12 * sill`` to the diagonal when any pivot falls below
    ``1e-13 * sill`` or the factorization fails outright.
    """
    try:
        factor = spl.cho_factor(sigma, lower=True, check_finite=False)
        pivots = np.einsum("ii->i", factor[0]) ** 2
        if pivots.min() >= 1e-13 * sill:
            return factor, False
    except np.linalg.LinAlgError:
        pass
    try:
        factor = spl.cho_factor(sigma + 1e-12 * sill * np.eye(sigma.shape[0]), lower=True, check_finite=False)
        return factor, True
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"covariance matrix is singular beyond repair: {exc}") from None


def solve_kriging(
    obs: Sequence[Observation],
    target: SpaceTimePoint,
    params: KernelParams,
) -> KrigingSolution:
    """Solve the constrained kriging system for one prediction location.

    The prediction is ``a^T z`` and its variance
    ``Var(Y0) - 2 a^T c0 + a^T Sigma a`` with ``Var(Y0) = sill + nugget``
    (the latent value at a new location includes micro-scale variation).
    """
    p = len(obs)
    if p < 1:
        raise InputError("kriging requires at least one observation")
    pts = points_array([o.point for o in obs])
    z = np.array([o.value for o in obs], dtype=float)
    noise = np.array([o.noise_sd for o in obs], dtype=float)

    if params.nugget == 0.0:
        dup = find_zero_noise_duplicates(pts, noise)
        if dup is not None:
            raise SingularSystemError(
                f"observations {dup[0]} and {dup[1]} share a location with zero noise and zero "
                "nugget; the kriging system is singular"
            )

    sigma = build_cov(pts, None, params, noise_sd=noise)
    c0 = kernel_value(params, scaled_distance_matrix(pts, points_array([target]), params))[:, 0]

    factor, regularized = _cho_factor_regularized(sigma, params.sill)
    x = spl.cho_solve(factor, c0, check_finite=False)
    y = spl.cho_solve(factor, np.ones(p), check_finite=False)
    s = math.fsum(y.tolist())
    if s <= 0.0 or not math.isfinite(s):
        raise SingularSystemError("degenerate unbiasedness constraint: 1^T Sigma^-1 1 <= 0")
    lagrange = (math.fsum(x.tolist()) - 1.0) / s
    a = x - lagrange * y
    # One residual pass on the constraint keeps the weight sum at 1 to
    # machine precision even on ill-conditioned systems.
    defect = 1.0 - math.fsum(a.tolist())
    if defect != 0.0:
        lagrange -= defect / s
        a = a + (defect / s) * y

    prediction = float(a @ z)
    var0 = params.sill + params.nugget
    variance = float(var0 - 2.0 * (a @ c0) + a @ (sigma @ a))
    return KrigingSolution(a, float(lagrange), prediction, variance, regularized)


def combine_ancillary(weights, fields: Sequence[SoundingGeometry]) -> SoundingGeometry:
    """Combine per-sounding geometries with kriging weights into one geometry.

    Forms the weighted sum of pressure, prior profile, weighting function
    and averaging kernel.  Weights must sum to one; the combined weighting
    function is rescaled by its own sum (a <= 1e-9 relative adjustment) so
    the result satisfies the constructor's sum-to-one invariant exactly.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.shape[0] != len(fields):
        raise InputError(f"got {w.shape[0] if w.ndim == 1 else w.ndim} weights for {len(fields)} geometries")
    if len(fields) < 1:
        raise InputError("need at least one geometry to combine")
    total = math.fsum(w.tolist())
    if abs(total - 1.0) > 1e-6:
        raise InputError(f"weights sum to {total!r}, expected 1")
    w = w / total

    n = fields[0].n_levels
    pgrid = fields[0].pressure
    for k, g in enumerate(fields):
        if g.n_levels != n:
            raise InputError(f"geometry {k} has {g.n_levels} levels, expected {n}")
        if not np.allclose(g.pressure, pgrid, rtol=1e-9, atol=1e-9):
            raise InputError(f"geometry {k} is on a different pressure grid")

    pressure = np.einsum("k,kl->l", w, np.stack([g.pressure for g in fields]))
    prior = np.einsum("k,kl->l", w, np.stack([g.prior_profile for g in fields]))
    h = np.einsum("k,kl->l", w, np.stack([g.weighting for g in fields]))
    ak = np.einsum("k,klm->lm", w, np.stack([g.averaging_kernel for g in fields]))

    hsum = math.fsum(h.tolist())
    if abs(hsum - 1.0) > 1e-9:
        raise NumericalError(f"combined weighting function sums to {hsum!r}; weights too distorted")
    if hsum != 1.0:
        h = h / hsum
    return SoundingGeometry(pressure, prior, h, ak)
