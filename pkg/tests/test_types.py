import numpy as np
import pytest
from hypothesis import given, strategies as st

from colfuse import (
    GridSpec,
    InputError,
    KernelParams,
    Observation,
    Raster,
    SoundingGeometry,
    SpaceTimePoint,
    SurfaceClass,
    normalize_point,
)


class TestNormalizePoint:
    def test_wraps_longitude(self):
        p = normalize_point(45, 190, 0)
        assert (p.lat, p.lon, p.time) == (45, -170.0, 0)

    def test_identity_at_lower_edge(self):
        p = normalize_point(0, -180, 3.5)
        assert (p.lat, p.lon, p.time) == (0, -180.0, 3.5)

    def test_rejects_bad_latitude(self):
        with pytest.raises(InputError):
            normalize_point(91, 0, 0)

    def test_wraps_180_to_negative(self):
        assert normalize_point(0, 180, 0).lon == -180.0
        assert normalize_point(0, 540, 0).lon == -180.0

    @given(
        st.floats(-90, 90),
        st.floats(-1e6, 1e6, allow_nan=False),
        st.floats(-1e4, 1e4, allow_nan=False),
    )
    def test_idempotent(self, lat, lon, time):
        once = normalize_point(lat, lon, time)
        twice = normalize_point(once.lat, once.lon, once.time)
        assert (once.lat, once.lon, once.time) == (twice.lat, twice.lon, twice.time)
        assert -180.0 <= once.lon < 180.0


class TestSpaceTimePoint:
    def test_rejects_out_of_range(self):
        with pytest.raises(InputError):
            SpaceTimePoint(-91, 0, 0)
        with pytest.raises(InputError):
            SpaceTimePoint(0, 180, 0)
        with pytest.raises(InputError):
            SpaceTimePoint(0, 0, float("nan"))


class TestObservation:
    def test_rejects_negative_noise(self):
        with pytest.raises(InputError):
            Observation(SpaceTimePoint(0, 0, 0), 400.0, -0.1, 1)

    def test_allows_zero_noise(self):
        obs = Observation(SpaceTimePoint(0, 0, 0), 400.0, 0.0, 1)
        assert obs.noise_sd == 0.0

    def test_rejects_nonfinite_value(self):
        with pytest.raises(InputError):
            Observation(SpaceTimePoint(0, 0, 0), float("inf"), 0.5, 1)


class TestSoundingGeometry:
    def test_weighting_must_sum_to_one(self):
        with pytest.raises(InputError):
            SoundingGeometry(
                np.array([1000.0, 500.0]), np.array([400.0, 400.0]),
                np.array([0.6, 0.6]), np.eye(2),
            )

    def test_pressure_must_be_monotone(self):
        with pytest.raises(InputError):
            SoundingGeometry(
                np.array([1000.0, 1000.0]), np.array([400.0, 400.0]),
                np.array([0.5, 0.5]), np.eye(2),
            )

    def test_kernel_shape_checked(self):
        with pytest.raises(InputError):
            SoundingGeometry(
                np.array([1000.0, 500.0]), np.array([400.0, 400.0]),
                np.array([0.5, 0.5]), np.eye(3),
            )

    def test_from_diagonal_kernel(self):
        g = SoundingGeometry.from_diagonal_kernel(
            np.array([1000.0, 500.0]), np.array([400.0, 401.0]),
            np.array([0.5, 0.5]), np.array([0.7, 0.9]),
        )
        assert np.array_equal(g.averaging_kernel, np.diag([0.7, 0.9]))

    def test_immutable(self):
        g = SoundingGeometry.from_diagonal_kernel(
            np.array([1000.0, 500.0]), np.array([400.0, 401.0]),
            np.array([0.5, 0.5]), np.array([0.7, 0.9]),
        )
        with pytest.raises(ValueError):
            g.weighting[0] = 1.0


class TestKernelParams:
    def test_rejects_nonpositive_sill(self):
        with pytest.raises(InputError):
            KernelParams("exponential", 0.0, 100.0, 1.0)

    def test_rejects_negative_nugget(self):
        with pytest.raises(InputError):
            KernelParams("exponential", 1.0, 100.0, 1.0, -0.1)

    def test_parses_family_string(self):
        assert KernelParams("matern32", 1.0, 100.0, 1.0).family.value == "matern32"
        with pytest.raises(InputError):
            KernelParams("gaussian", 1.0, 100.0, 1.0)


class TestGridSpec:
    def test_cell_must_divide_extent(self):
        with pytest.raises(InputError):
            GridSpec(0.0, 5.0, 0.0, 5.0, 1.5)

    def test_row_major_centers(self):
        grid = GridSpec(0.0, 2.0, 10.0, 13.0, 1.0, day=3)
        assert grid.n_lat == 2 and grid.n_lon == 3 and grid.n_cells == 6
        c0 = grid.cell_center(0)
        c1 = grid.cell_center(1)
        c3 = grid.cell_center(3)
        assert (c0.lat, c0.lon) == (0.5, 10.5)
        assert (c1.lat, c1.lon) == (0.5, 11.5)
        assert (c3.lat, c3.lon) == (1.5, 10.5)
        assert c0.time == 3.5

    def test_index_bounds(self):
        grid = GridSpec(0.0, 1.0, 0.0, 1.0, 1.0)
        with pytest.raises(InputError):
            grid.cell_center(1)


class TestRaster:
    def test_lookup_and_edges(self):
        r = Raster(0.0, 0.0, 1.0, np.arange(6).reshape(2, 3))
        assert r.lookup(0.5, 0.5) == 0
        assert r.lookup(1.5, 2.5) == 5
        assert r.lookup(2.0, 3.0) == 5  # exact upper edge is inside
        with pytest.raises(InputError):
            r.lookup(-0.1, 0.5)

    def test_covers(self):
        r = Raster(0.0, 0.0, 1.0, np.zeros((5, 5)))
        assert r.covers(GridSpec(0.0, 5.0, 0.0, 5.0, 1.0))
        assert not r.covers(GridSpec(0.0, 6.0, 0.0, 5.0, 1.0))


def test_surface_class_parse():
    assert SurfaceClass.parse("Land") is SurfaceClass.LAND
    with pytest.raises(InputError):
        SurfaceClass.parse("swamp")
