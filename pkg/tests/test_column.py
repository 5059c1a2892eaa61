import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from colfuse import InputError, SoundingGeometry, convolve_profile, prior_column


@pytest.fixture
def geometry():
    return SoundingGeometry(
        np.array([1000.0, 500.0, 100.0]),
        np.array([400.0, 400.0, 400.0]),
        np.array([0.2, 0.5, 0.3]),
        np.diag([0.5, 1.0, 0.8]),
    )


def test_profile_equal_to_prior_gives_prior_column(geometry):
    assert convolve_profile(geometry, geometry.prior_profile) == prior_column(geometry)


def test_identity_kernel_gives_weighted_profile():
    g = SoundingGeometry(
        np.array([1000.0, 500.0, 100.0]),
        np.array([395.0, 400.0, 405.0]),
        np.array([0.2, 0.5, 0.3]),
        np.eye(3),
    )
    profile = np.array([401.0, 402.0, 403.0])
    assert abs(convolve_profile(g, profile) - float(g.weighting @ profile)) < 1e-10


def test_three_level_hand_value(geometry):
    # 400 + (0.2*0.5*2 + 0.5*1.0*1 + 0.3*0.8*(-2)) = 400.22
    got = convolve_profile(geometry, np.array([402.0, 401.0, 398.0]))
    assert abs(got - 400.22) < 1e-10


def test_length_mismatch_rejected(geometry):
    with pytest.raises(InputError):
        convolve_profile(geometry, np.array([400.0, 400.0]))


@settings(max_examples=50)
@given(
    st.floats(0.0, 1.0),
    st.lists(st.floats(380.0, 420.0), min_size=3, max_size=3),
    st.lists(st.floats(380.0, 420.0), min_size=3, max_size=3),
)
def test_linearity(alpha, p1, p2):
    g = SoundingGeometry(
        np.array([1000.0, 500.0, 100.0]),
        np.array([400.0, 401.0, 399.0]),
        np.array([0.25, 0.5, 0.25]),
        np.array([[0.6, 0.1, 0.0], [0.1, 0.9, 0.1], [0.0, 0.2, 0.7]]),
    )
    p1 = np.array(p1)
    p2 = np.array(p2)
    mixed = convolve_profile(g, alpha * p1 + (1 - alpha) * p2)
    split = alpha * convolve_profile(g, p1) + (1 - alpha) * convolve_profile(g, p2)
    assert abs(mixed - split) < 1e-10


def test_constant_profile_identity_with_identity_kernel():
    g = SoundingGeometry(
        np.array([1000.0, 500.0, 100.0]),
        np.array([398.0, 400.0, 402.0]),
        np.array([0.25, 0.5, 0.25]),
        np.eye(3),
    )
    assert abs(convolve_profile(g, np.full(3, 407.0)) - 407.0) < 1e-10
