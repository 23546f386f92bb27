"""Point cloud container and per-point attribute conventions.

Coordinates are meters in a local Cartesian frame, stored float64 with shape
(n, 3). Colors are 8-bit RGB, labels are ``SurfaceClass`` values; both are
optional and, when present, run parallel to ``points``.
"""

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import InvalidArgument


class SurfaceClass(IntEnum):
    """Ground-truth surface category. Values follow alphabetical name order
    so that argmax tie-breaks resolve to the lexicographically smallest name."""

    FACADE = 0
    GROUND = 1
    ROOF = 2

    @property
    def label(self):
        return self.name.lower()


SURFACE_CLASS_NAMES = tuple(c.label for c in SurfaceClass)


def surface_class_from_label(label):
    try:
        return SurfaceClass[label.upper()]
    except KeyError:
        raise InvalidArgument(f"unknown surface class {label!r}") from None


def as_points(values, name="points"):
    """Coerce to a finite (n, 3) float64 array."""
    pts = np.asarray(values, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise InvalidArgument(f"{name} must have shape (n, 3), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise InvalidArgument(f"{name} contain non-finite coordinates")
    return pts


def as_colors(values):
    """Coerce to a (n, 3) uint8 array, rejecting out-of-range channels."""
    arr = np.asarray(values)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise InvalidArgument(f"colors must have shape (n, 3), got {arr.shape}")
    if arr.dtype != np.uint8:
        vals = np.asarray(arr, dtype=np.float64)
        if np.any(vals < 0) or np.any(vals > 255):
            raise InvalidArgument("color channels must lie in [0, 255]")
        arr = np.rint(vals).astype(np.uint8)
    return arr


@dataclass
class PointCloud:
    """Ordered set of 3D points with optional colors and labels.

    ``source_tag`` names the originating sensor ("uav", "mms", "fused", ...);
    ``frame_id`` names the coordinate frame the points live in.
    """

    points: np.ndarray
    colors: np.ndarray | None = None
    labels: np.ndarray | None = None
    source_tag: str = ""
    frame_id: str = "local"

    def __post_init__(self):
        self.points = as_points(self.points)
        n = len(self.points)
        if self.colors is not None:
            self.colors = as_colors(self.colors)
            if len(self.colors) != n:
                raise InvalidArgument(
                    f"colors length {len(self.colors)} != points length {n}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.ndim != 1 or len(self.labels) != n:
                raise InvalidArgument(
                    f"labels length {len(self.labels)} != points length {n}")
            bad = ~np.isin(self.labels, [int(c) for c in SurfaceClass])
            if np.any(bad):
                raise InvalidArgument(
                    f"labels contain unknown class value {self.labels[bad][0]}")

    def __len__(self):
        return len(self.points)

    def require_nonempty(self, op="operation"):
        if len(self.points) == 0:
            raise InvalidArgument(f"{op} requires a non-empty cloud")
        return self

    def take(self, indices):
        """Sub-cloud at the given point indices, attributes carried along."""
        return PointCloud(
            points=self.points[indices],
            colors=None if self.colors is None else self.colors[indices],
            labels=None if self.labels is None else self.labels[indices],
            source_tag=self.source_tag,
            frame_id=self.frame_id,
        )

    def with_points(self, points):
        """Same attributes, new coordinates (used by transform application)."""
        return PointCloud(
            points=points,
            colors=self.colors,
            labels=self.labels,
            source_tag=self.source_tag,
            frame_id=self.frame_id,
        )


# Neutral fill for points that have no spectral observation, e.g. voxels a
# colorless sensor contributed to a colored fusion output.
NEUTRAL_COLOR = np.array([128, 128, 128], dtype=np.uint8)


@dataclass
class BoundingBox:
    lo: np.ndarray = field(default_factory=lambda: np.zeros(3))
    hi: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @classmethod
    def of(cls, points):
        pts = as_points(points)
        return cls(lo=pts.min(axis=0), hi=pts.max(axis=0))

    @property
    def diagonal(self):
        return float(np.linalg.norm(self.hi - self.lo))
