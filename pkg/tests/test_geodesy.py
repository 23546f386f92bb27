import numpy as np
import pytest

import voxfuse as vf
from voxfuse.errors import ValidationError
from voxfuse.geodesy import pose_positions


ORIGIN = vf.GeoOrigin(latitude=29.0, longitude=106.0, altitude=0.0)


def test_origin_maps_to_zero_exactly():
    out = vf.geodetic_to_enu(ORIGIN, ORIGIN)
    assert np.array_equal(out, [0.0, 0.0, 0.0])


def test_small_latitude_step_north():
    # meridian arc for 1e-5 degrees near 29 N; bracket from the independent
    # radius-of-curvature oracle: M(29 deg) ~ 6.3504e6 m -> 1.1084 m
    rec = vf.GeoOrigin(latitude=29.0 + 1e-5, longitude=106.0, altitude=0.0)
    east, north, up = vf.geodetic_to_enu(rec, ORIGIN)
    assert 1.105 < north < 1.112
    assert abs(east) < 1e-6
    assert abs(up) < 1e-3


def test_sample_rows_displacement():
    r1 = vf.PoseRecord(1, 29.06586, 106.1266, 50.08, 259.1)
    r2 = vf.PoseRecord(2, 29.06585, 106.1265, 49.99, 249.5)
    origin = vf.GeoOrigin(r1.latitude, r1.longitude, r1.altitude)
    delta = vf.geodetic_to_enu(r2, origin)
    assert np.linalg.norm(delta) < 15.0
    # altitude delta -0.09 m, plus ~7e-6 m of tangent-plane curvature drop
    assert delta[2] == pytest.approx(-0.09, abs=1e-4)


def test_small_displacement_linearity():
    one = vf.geodetic_to_enu(
        vf.GeoOrigin(29.0 + 1e-6, 106.0 + 1e-6, 0.0), ORIGIN)
    two = vf.geodetic_to_enu(
        vf.GeoOrigin(29.0 + 2e-6, 106.0 + 2e-6, 0.0), ORIGIN)
    assert abs(np.linalg.norm(two) / (2 * np.linalg.norm(one)) - 1.0) < 1e-3


def test_altitude_maps_to_up():
    rec = vf.GeoOrigin(29.0, 106.0, 12.5)
    east, north, up = vf.geodetic_to_enu(rec, ORIGIN)
    assert up == pytest.approx(12.5, abs=1e-9)
    assert abs(east) < 1e-9 and abs(north) < 1e-9


def test_pose_positions_vectorized():
    records = [
        vf.PoseRecord(1, 29.06586, 106.1266, 50.08, 259.1),
        vf.PoseRecord(2, 29.06585, 106.1265, 49.99, 249.5),
    ]
    origin = vf.GeoOrigin(29.06586, 106.1266, 0.0)
    pos = pose_positions(records, origin)
    assert pos.shape == (2, 3)
    assert pos[0, 2] == pytest.approx(50.08, abs=1e-9)


def test_origin_validation():
    with pytest.raises(ValidationError):
        vf.GeoOrigin(latitude=95.0, longitude=0.0)
