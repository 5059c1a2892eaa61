"""Averaging-kernel convolution from a vertical profile to a column value."""

from __future__ import annotations

import numpy as np

from .errors import InputError, NumericalError
from .types import SoundingGeometry


def convolve_profile(geometry: SoundingGeometry, profile) -> float:
    """Column value the sounding would report for a given true profile, in ppm.

    Computes ``h^T x_a + h^T A (profile - x_a)``: the prior column plus the
    kernel-weighted departure of the profile from the prior.  The profile
    must be supplied on the sounding's own pressure grid; no regridding is
    performed.
    """
    prof = np.asarray(profile, dtype=float)
    if prof.shape != (geometry.n_levels,):
        raise InputError(
            f"profile has shape {prof.shape}, expected ({geometry.n_levels},) to match the sounding"
        )
    h = geometry.weighting
    prior = geometry.prior_profile
    out = float(h @ prior + h @ (geometry.averaging_kernel @ (prof - prior)))
    if not np.isfinite(out):
        raise NumericalError("convolved column value is not finite")
    return out


def prior_column(geometry: SoundingGeometry) -> float:
    """Column value of the prior profile alone, ``h^T x_a``."""
    return float(geometry.weighting @ geometry.prior_profile)
