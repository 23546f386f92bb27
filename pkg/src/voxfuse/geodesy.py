"""WGS-84 geodetic to local east-north-up conversion.

The local tangent plane is anchored at a geodetic origin; conversion goes
through Earth-centered Earth-fixed coordinates, so it stays exact at any
offset (no flat-earth small-angle shortcuts).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)


@dataclass(frozen=True)
class GeoOrigin:
    latitude: float
    longitude: float
    altitude: float = 0.0

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValidationError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValidationError(f"longitude {self.longitude} outside [-180, 180]")


def geodetic_to_ecef(latitude, longitude, altitude):
    lat = math.radians(latitude)
    lon = math.radians(longitude)
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * math.sin(lat) ** 2)
    x = (n + altitude) * math.cos(lat) * math.cos(lon)
    y = (n + altitude) * math.cos(lat) * math.sin(lon)
    z = (n * (1.0 - WGS84_E2) + altitude) * math.sin(lat)
    return np.array([x, y, z])


def geodetic_to_enu(record, origin):
    """East-north-up coordinates of ``record`` relative to ``origin``.

    Both arguments need latitude/longitude/altitude attributes (PoseRecord
    and GeoOrigin both qualify). The origin maps to (0, 0, 0) exactly.
    """
    delta = (
        geodetic_to_ecef(record.latitude, record.longitude, record.altitude)
        - geodetic_to_ecef(origin.latitude, origin.longitude, origin.altitude))
    lat = math.radians(origin.latitude)
    lon = math.radians(origin.longitude)
    sl, cl = math.sin(lat), math.cos(lat)
    so, co = math.sin(lon), math.cos(lon)
    rot = np.array([
        [-so, co, 0.0],
        [-sl * co, -sl * so, cl],
        [cl * co, cl * so, sl],
    ])
    return rot @ delta


def pose_positions(records, origin):
    """ENU positions for a sequence of pose records, shape (n, 3)."""
    return np.array([geodetic_to_enu(r, origin) for r in records]).reshape(-1, 3)
