"""Synthetic urban scene generator with per-sensor visibility sampling.

Scenes are a flat ground rectangle plus axis-aligned boxes ("towers"). Every
surface is sampled on a regular grid; each sample carries a position, an
outward normal, a surface class (roof / facade / ground) and an albedo
color. Two sensor models consume a scene:

* an aerial camera rig: a grid of elevated viewpoints, each carrying five
  look-direction cones (nadir plus four obliques); captured samples keep
  their albedo color;
* a street-level mapper: viewpoints stepped along a trajectory polyline at
  low height with a maximum range; captured samples carry no color.

A sample is visible from a viewpoint when it faces it (normal test) and the
open segment between them crosses no box. The asymmetry between the two
sensors (roofs air-only, low canyon walls street-only) is the point of the
default scene.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .cloud import PointCloud, SurfaceClass, surface_class_from_label
from .errors import InvalidArgument, InvalidScene, ParseError, VoxfuseError
from .transforms import Transform, apply_transform, axis_rotation, make_transform

SCENE_SCHEMA = "scene/1"

DEFAULT_ALBEDO = {
    SurfaceClass.ROOF: (178, 34, 34),
    SurfaceClass.FACADE: (222, 203, 164),
    SurfaceClass.GROUND: (96, 96, 96),
}

# Pull the occlusion segment this far off the sample so a sample never
# shadows itself with the face it sits on.
_SEGMENT_EPS = 1e-6


@dataclass
class SceneSpec:
    ground_x: tuple
    ground_y: tuple
    boxes: np.ndarray = field(default_factory=lambda: np.zeros((0, 2, 3)))
    spacing: float = 0.25
    albedo: dict = field(default_factory=lambda: dict(DEFAULT_ALBEDO))
    seed: int = 0

    def __post_init__(self):
        self.ground_x = (float(self.ground_x[0]), float(self.ground_x[1]))
        self.ground_y = (float(self.ground_y[0]), float(self.ground_y[1]))
        if not (self.ground_x[0] < self.ground_x[1]
                and self.ground_y[0] < self.ground_y[1]):
            raise InvalidScene("ground extent is empty")
        if not self.spacing > 0:
            raise InvalidScene(f"spacing must be positive, got {self.spacing}")
        self.boxes = np.asarray(self.boxes, dtype=np.float64).reshape(-1, 2, 3)
        for i, (lo, hi) in enumerate(self.boxes):
            if not np.all(lo < hi):
                raise InvalidScene(f"box {i} has non-positive extent")
            if lo[2] < 0:
                raise InvalidScene(f"box {i} dips below the ground plane")


@dataclass
class Scene:
    positions: np.ndarray
    normals: np.ndarray
    labels: np.ndarray
    colors: np.ndarray
    boxes: np.ndarray
    ground_x: tuple = (0.0, 0.0)
    ground_y: tuple = (0.0, 0.0)
    seed: int = 0

    def __len__(self):
        return len(self.positions)

    @property
    def max_box_height(self):
        return float(self.boxes[:, 1, 2].max()) if len(self.boxes) else 0.0


def _axis_grid(lo, hi, spacing):
    n = int(math.floor((hi - lo) / spacing + 1e-9)) + 1
    return lo + spacing * np.arange(n)


def _face_grid(us, vs):
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    return uu.ravel(), vv.ravel()


def _boxes_overlap(a, b):
    return bool(np.all(a[0] < b[1]) and np.all(b[0] < a[1]))


def build_scene(spec):
    """Sample every surface of the spec on a regular grid.

    Ground samples strictly inside a box footprint are dropped (the box
    stands there); box bottom faces are not emitted.
    """
    for i in range(len(spec.boxes)):
        for j in range(i + 1, len(spec.boxes)):
            if _boxes_overlap(spec.boxes[i], spec.boxes[j]):
                raise InvalidScene(f"boxes {i} and {j} overlap")

    chunks = []  # (positions, normal, label)

    xs = _axis_grid(*spec.ground_x, spec.spacing)
    ys = _axis_grid(*spec.ground_y, spec.spacing)
    gx, gy = _face_grid(xs, ys)
    keep = np.ones(len(gx), dtype=bool)
    for lo, hi in spec.boxes:
        inside = (gx > lo[0]) & (gx < hi[0]) & (gy > lo[1]) & (gy < hi[1])
        keep &= ~inside
    ground = np.column_stack([gx[keep], gy[keep], np.zeros(keep.sum())])
    chunks.append((ground, (0.0, 0.0, 1.0), SurfaceClass.GROUND))

    for lo, hi in spec.boxes:
        bx = _axis_grid(lo[0], hi[0], spec.spacing)
        by = _axis_grid(lo[1], hi[1], spec.spacing)
        bz = _axis_grid(lo[2], hi[2], spec.spacing)
        rx, ry = _face_grid(bx, by)
        roof = np.column_stack([rx, ry, np.full(len(rx), hi[2])])
        chunks.append((roof, (0.0, 0.0, 1.0), SurfaceClass.ROOF))
        fy, fz = _face_grid(by, bz)
        chunks.append((np.column_stack([np.full(len(fy), lo[0]), fy, fz]),
                       (-1.0, 0.0, 0.0), SurfaceClass.FACADE))
        chunks.append((np.column_stack([np.full(len(fy), hi[0]), fy, fz]),
                       (1.0, 0.0, 0.0), SurfaceClass.FACADE))
        fx, fz = _face_grid(bx, bz)
        chunks.append((np.column_stack([fx, np.full(len(fx), lo[1]), fz]),
                       (0.0, -1.0, 0.0), SurfaceClass.FACADE))
        chunks.append((np.column_stack([fx, np.full(len(fx), hi[1]), fz]),
                       (0.0, 1.0, 0.0), SurfaceClass.FACADE))

    positions = np.concatenate([c[0] for c in chunks])
    normals = np.concatenate([
        np.tile(np.asarray(c[1]), (len(c[0]), 1)) for c in chunks])
    labels = np.concatenate([
        np.full(len(c[0]), int(c[2]), dtype=np.int64) for c in chunks])
    albedo = {int(k): v for k, v in spec.albedo.items()}
    colors = np.array(
        [albedo[int(c)] for c in labels], dtype=np.uint8
    ) if len(labels) else np.zeros((0, 3), np.uint8)
    return Scene(positions, normals, labels, colors,
                 boxes=spec.boxes.copy(),
                 ground_x=spec.ground_x, ground_y=spec.ground_y,
                 seed=spec.seed)


# ---------------------------------------------------------------------------
# Visibility


def segments_blocked(viewpoint, ends, boxes):
    """True where the open segment viewpoint -> end crosses a box interior."""
    viewpoint = np.asarray(viewpoint, dtype=np.float64)
    ends = np.asarray(ends, dtype=np.float64)
    d = ends - viewpoint
    blocked = np.zeros(len(ends), dtype=bool)
    for lo, hi in boxes:
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (lo - viewpoint) / d
            t2 = (hi - viewpoint) / d
        tn = np.fmin(t1, t2)
        tf = np.fmax(t1, t2)
        zero = d == 0
        if np.any(zero):
            inside = (viewpoint >= lo) & (viewpoint <= hi)
            tn = np.where(zero, np.where(inside, -np.inf, np.inf), tn)
            tf = np.where(zero, np.where(inside, np.inf, -np.inf), tf)
        enter = np.maximum(tn.max(axis=1), 0.0)
        leave = np.minimum(tf.min(axis=1), 1.0)
        blocked |= enter < leave - 1e-12
    return blocked


def _pulled_ends(viewpoint, samples):
    rel = viewpoint - samples
    norm = np.linalg.norm(rel, axis=1, keepdims=True)
    norm[norm == 0] = 1.0
    return samples + rel / norm * _SEGMENT_EPS


def point_inside_any_box(point, boxes):
    for lo, hi in boxes:
        if np.all(point > lo) and np.all(point < hi):
            return True
    return False


def visible(viewpoint, sample, normal, scene):
    """Single-sample visibility: facing test plus box occlusion test."""
    viewpoint = np.asarray(viewpoint, dtype=np.float64)
    if point_inside_any_box(viewpoint, scene.boxes):
        raise InvalidArgument("viewpoint lies inside a box")
    sample = np.asarray(sample, dtype=np.float64).reshape(1, 3)
    normal = np.asarray(normal, dtype=np.float64)
    if float(normal @ (viewpoint - sample[0])) <= 0.0:
        return False
    ends = _pulled_ends(viewpoint, sample)
    return not bool(segments_blocked(viewpoint, ends, scene.boxes)[0])


# ---------------------------------------------------------------------------
# Sensors

_SQ2 = math.sqrt(0.5)
# Five-camera rig: nadir plus four obliques tilted 45 degrees.
UAV_CAMERA_AXES = np.array([
    (0.0, 0.0, -1.0),
    (_SQ2, 0.0, -_SQ2),
    (-_SQ2, 0.0, -_SQ2),
    (0.0, _SQ2, -_SQ2),
    (0.0, -_SQ2, -_SQ2),
])


@dataclass
class UavParams:
    positions_xy: np.ndarray
    altitude: float = 50.0
    half_angle_deg: float = 45.0
    noise_sigma: float = 0.0
    misregistration: Transform | None = None

    def __post_init__(self):
        self.positions_xy = np.asarray(
            self.positions_xy, dtype=np.float64).reshape(-1, 2)
        if len(self.positions_xy) == 0:
            raise InvalidArgument("need at least one viewpoint")
        if not self.altitude > 0:
            raise InvalidArgument("altitude must be positive")

    def viewpoints(self):
        xy = self.positions_xy
        return np.column_stack([xy, np.full(len(xy), self.altitude)])

    @classmethod
    def grid(cls, spec, nx=3, ny=3, inset=0.2, **kwargs):
        """Viewpoint grid over the ground extent, inset from the borders."""
        x0, x1 = spec.ground_x
        y0, y1 = spec.ground_y
        mx = (x1 - x0) * inset / 2
        my = (y1 - y0) * inset / 2
        xs = np.linspace(x0 + mx, x1 - mx, nx)
        ys = np.linspace(y0 + my, y1 - my, ny)
        xx, yy = np.meshgrid(xs, ys, indexing="ij")
        return cls(np.column_stack([xx.ravel(), yy.ravel()]), **kwargs)


@dataclass
class MmsParams:
    waypoints_xy: np.ndarray
    height: float = 2.0
    max_range: float = 80.0
    step: float = 2.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        self.waypoints_xy = np.asarray(
            self.waypoints_xy, dtype=np.float64).reshape(-1, 2)
        if len(self.waypoints_xy) < 2:
            raise InvalidArgument("trajectory needs at least two waypoints")
        if not self.max_range > 0 or not self.step > 0:
            raise InvalidArgument("max_range and step must be positive")

    def viewpoints(self):
        """Positions stepped along the polyline, including the final vertex."""
        pts = []
        for a, b in zip(self.waypoints_xy[:-1], self.waypoints_xy[1:]):
            length = float(np.linalg.norm(b - a))
            if length == 0:
                continue
            for t in np.arange(0.0, length, self.step):
                pts.append(a + (b - a) * (t / length))
        pts.append(self.waypoints_xy[-1])
        xy = np.array(pts)
        return np.column_stack([xy, np.full(len(xy), self.height)])

    @classmethod
    def ring(cls, spec, inset=0.1, **kwargs):
        """Closed rectangular loop just inside the ground extent."""
        x0, x1 = spec.ground_x
        y0, y1 = spec.ground_y
        mx = (x1 - x0) * inset
        my = (y1 - y0) * inset
        a, b = x0 + mx, x1 - mx
        c, d = y0 + my, y1 - my
        return cls(np.array([[a, c], [b, c], [b, d], [a, d], [a, c]]), **kwargs)


def _check_viewpoints_outside(viewpoints, boxes):
    for vp in viewpoints:
        if point_inside_any_box(vp, boxes):
            raise InvalidArgument(
                f"viewpoint {vp.tolist()} lies inside a scene box")


def _visible_from_any(scene, viewpoints, accept):
    """Union of per-viewpoint visibility. ``accept(vp, rel, dist)`` filters
    candidate samples before the occlusion test (cone or range gates)."""
    _check_viewpoints_outside(viewpoints, scene.boxes)
    seen = np.zeros(len(scene), dtype=bool)
    for vp in viewpoints:
        todo = np.flatnonzero(~seen)
        if len(todo) == 0:
            break
        rel = vp - scene.positions[todo]
        dist = np.linalg.norm(rel, axis=1)
        dist[dist == 0] = 1.0
        facing = np.einsum("ij,ij->i", scene.normals[todo], rel) > 0
        cand = facing & accept(vp, rel, dist)
        idx = todo[cand]
        if len(idx) == 0:
            continue
        ends = scene.positions[idx] + (rel[cand] / dist[cand, None]) * _SEGMENT_EPS
        hit = ~segments_blocked(vp, ends, scene.boxes)
        seen[idx[hit]] = True
    return seen


def sample_uav(scene, params):
    """Point cloud captured by the aerial rig: colored, labeled.

    When ``params.misregistration`` is set the emitted cloud is transformed
    by it; the inverse is then the ground-truth alignment a registration
    step should recover.
    """
    if params.altitude <= scene.max_box_height:
        raise InvalidArgument(
            f"altitude {params.altitude} must exceed the tallest box "
            f"({scene.max_box_height} m)")
    cos_half = math.cos(math.radians(params.half_angle_deg))

    def in_cone(vp, rel, dist):
        to_sample = -rel / dist[:, None]
        return (to_sample @ UAV_CAMERA_AXES.T).max(axis=1) >= cos_half

    seen = _visible_from_any(scene, params.viewpoints(), in_cone)
    cloud = PointCloud(
        points=scene.positions[seen],
        colors=scene.colors[seen],
        labels=scene.labels[seen],
        source_tag="uav",
    )
    cloud = _with_noise(cloud, params.noise_sigma, scene.seed, stream=1)
    if params.misregistration is not None:
        cloud = apply_transform(params.misregistration, cloud)
    return cloud


def sample_mms(scene, params):
    """Point cloud captured by the street-level mapper: colorless, labeled."""
    w = params.waypoints_xy
    if (np.any(w[:, 0] < scene.ground_x[0]) or np.any(w[:, 0] > scene.ground_x[1])
            or np.any(w[:, 1] < scene.ground_y[0])
            or np.any(w[:, 1] > scene.ground_y[1])):
        raise InvalidArgument("trajectory leaves the ground extent")
    max_range = params.max_range

    def in_range(vp, rel, dist):
        return dist <= max_range

    seen = _visible_from_any(scene, params.viewpoints(), in_range)
    cloud = PointCloud(
        points=scene.positions[seen],
        colors=None,
        labels=scene.labels[seen],
        source_tag="mms",
    )
    return _with_noise(cloud, params.noise_sigma, scene.seed, stream=2)


def _with_noise(cloud, sigma, seed, stream):
    if sigma <= 0:
        return cloud
    rng = np.random.default_rng([seed, stream])
    return cloud.with_points(
        cloud.points + rng.normal(0.0, sigma, cloud.points.shape))


def truth_cloud(scene):
    """The full labeled surface sampling, for coverage denominators."""
    return PointCloud(
        points=scene.positions.copy(),
        colors=scene.colors.copy(),
        labels=scene.labels.copy(),
        source_tag="truth",
    )


def default_misregistration():
    """Mild similarity offset used to exercise registration: scale 0.95,
    2 degrees about Z, translation (3, -2, 0.5)."""
    return make_transform(
        axis_rotation("z", math.radians(2.0)), (3.0, -2.0, 0.5), 0.95)


# ---------------------------------------------------------------------------
# Default scene: four 30 m towers around a street cross, canyon streets 4 m
# wide. Street-facing walls are hidden below ~10 m from every aerial
# viewpoint (each sits over a tower, never over a street), outer walls face
# away from all of them, while the street-level loop sees every wall head-on
# but no roof.


def default_scene_spec(seed=0):
    towers = []
    for sx in (-1, 1):
        for sy in (-1, 1):
            x0, x1 = sorted((2 * sx, 10 * sx))
            y0, y1 = sorted((2 * sy, 10 * sy))
            towers.append([[x0, y0, 0.0], [x1, y1, 30.0]])
    return SceneSpec(
        ground_x=(-16.0, 16.0),
        ground_y=(-16.0, 16.0),
        boxes=np.array(towers),
        spacing=0.25,
        seed=seed,
    )


def default_uav_params(**kwargs):
    xy = [(-6.0, -6.0), (-6.0, 6.0), (6.0, -6.0), (6.0, 6.0)]
    return UavParams(np.array(xy), altitude=50.0, **kwargs)


def default_mms_params(**kwargs):
    waypoints = np.array([
        (-13.0, 0.0), (13.0, 0.0), (13.0, 13.0), (0.0, 13.0),
        (0.0, -13.0), (-13.0, -13.0), (-13.0, 13.0), (0.0, 13.0),
        (13.0, 13.0), (13.0, -13.0), (0.0, -13.0),
    ])
    return MmsParams(waypoints, height=2.0, max_range=80.0, step=2.0, **kwargs)


# ---------------------------------------------------------------------------
# Scene documents


def write_scene_document(spec, path, uav=None, mms=None):
    from .fileio import _atomic_write

    doc = {
        "schema": SCENE_SCHEMA,
        "ground_x": list(spec.ground_x),
        "ground_y": list(spec.ground_y),
        "boxes": [[list(corner) for corner in box] for box in spec.boxes.tolist()],
        "spacing": spec.spacing,
        "albedo": {
            SurfaceClass(k).label: list(v) for k, v in spec.albedo.items()},
        "seed": spec.seed,
    }
    if uav is not None:
        doc["uav"] = {
            "positions": uav.positions_xy.tolist(),
            "altitude": uav.altitude,
            "half_angle_deg": uav.half_angle_deg,
            "noise_sigma": uav.noise_sigma,
        }
    if mms is not None:
        doc["mms"] = {
            "waypoints": mms.waypoints_xy.tolist(),
            "height": mms.height,
            "max_range": mms.max_range,
            "step": mms.step,
            "noise_sigma": mms.noise_sigma,
        }
    _atomic_write(path, json.dumps(doc, indent=2) + "\n")


def read_scene_document(path):
    """Returns (SceneSpec, UavParams or None, MmsParams or None).

    Sensor sections are optional; absent sections fall back to a viewpoint
    grid / perimeter ring over the ground extent via the params factories.
    """
    with open(path, "r", encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ParseError(str(exc), path=path, line=exc.lineno) from None
    schema = doc.get("schema") if isinstance(doc, dict) else None
    if schema != SCENE_SCHEMA:
        raise ParseError(
            f"expected schema {SCENE_SCHEMA!r}, got {schema!r}", path=path)
    try:
        albedo = {
            surface_class_from_label(k): tuple(v)
            for k, v in doc.get("albedo", {}).items()}
        spec = SceneSpec(
            ground_x=(float(doc["ground_x"][0]), float(doc["ground_x"][1])),
            ground_y=(float(doc["ground_y"][0]), float(doc["ground_y"][1])),
            boxes=np.asarray(doc.get("boxes", []), dtype=np.float64).reshape(-1, 2, 3),
            spacing=float(doc.get("spacing", 0.25)),
            albedo=albedo or dict(DEFAULT_ALBEDO),
            seed=int(doc.get("seed", 0)),
        )
        uav = None
        if "uav" in doc:
            u = doc["uav"]
            uav = UavParams(
                np.asarray(u["positions"], dtype=np.float64),
                altitude=float(u.get("altitude", 50.0)),
                half_angle_deg=float(u.get("half_angle_deg", 45.0)),
                noise_sigma=float(u.get("noise_sigma", 0.0)),
            )
        mms = None
        if "mms" in doc:
            m = doc["mms"]
            mms = MmsParams(
                np.asarray(m["waypoints"], dtype=np.float64),
                height=float(m.get("height", 2.0)),
                max_range=float(m.get("max_range", 80.0)),
                step=float(m.get("step", 2.0)),
                noise_sigma=float(m.get("noise_sigma", 0.0)),
            )
    except VoxfuseError:
        raise  # already structured (invalid-scene, invalid-argument, ...)
    except KeyError as exc:
        raise ParseError(f"missing field {exc}", path=path) from None
    except (TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"malformed scene document: {exc}", path=path) from None
    return spec, uav, mms
