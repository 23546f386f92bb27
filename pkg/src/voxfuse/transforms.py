"""Exact 3D geometry kernel: axis rotations, Euler composition, homogeneous
rigid/similarity transforms, application and inversion.

Conventions, fixed everywhere in the package:

* matrices are row-major numpy arrays, points are column vectors ``M @ p``;
* angles are radians internally (degrees only at CLI and file boundaries);
* Euler composition order is ``R = Rz(beta) @ Ry(alpha) @ Rx(theta)``;
* a transform matrix is ``[[s*R, t], [0, 0, 0, 1]]`` with uniform scale
  ``s > 0`` (``s == 1`` for rigid mode), i.e. translation applied after the
  scaled rotation.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .cloud import PointCloud
from .errors import (
    InvalidArgument,
    InvalidTransform,
    NotASimilarity,
    NotInvertible,
    ReflectionOrDegenerate,
    VoxfuseError,
)

AXES = ("x", "y", "z")

ORTHONORMAL_TOL = 1e-9
# File readers admit blocks rounded to few decimals; see decompose_transform.
RELAXED_TOL = 5e-3


class EulerAngles(NamedTuple):
    """Rotation angles about X, Y, Z in radians."""

    theta: float
    alpha: float
    beta: float


def axis_rotation(axis, angle):
    """Rotation matrix about a coordinate axis ("x", "y" or "z")."""
    if axis not in AXES:
        raise InvalidArgument(f"axis must be one of {AXES}, got {axis!r}")
    angle = float(angle)
    if not math.isfinite(angle):
        raise InvalidArgument("rotation angle must be finite")
    c, s = math.cos(angle), math.sin(angle)
    if axis == "x":
        return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    if axis == "y":
        return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_to_rotation(angles):
    """Compose per-axis rotations as Rz(beta) Ry(alpha) Rx(theta)."""
    theta, alpha, beta = (float(a) for a in angles)
    return (
        axis_rotation("z", beta)
        @ axis_rotation("y", alpha)
        @ axis_rotation("x", theta)
    )


def rotation_to_euler(r):
    """Angles whose euler_to_rotation reproduces ``r``.

    At gimbal lock (|cos alpha| ~ 0) theta is pinned to 0 and the residual
    in-plane rotation folds into beta, which keeps the recovery deterministic
    and the round trip exact.
    """
    r = np.asarray(r, dtype=np.float64)
    sin_alpha = -r[2, 0]
    sin_alpha = min(1.0, max(-1.0, float(sin_alpha)))
    alpha = math.asin(sin_alpha)
    if math.hypot(r[2, 1], r[2, 2]) < 1e-9:  # cos(alpha) ~ 0
        theta = 0.0
        beta = math.atan2(-r[0, 1], r[1, 1])
    else:
        theta = math.atan2(r[2, 1], r[2, 2])
        beta = math.atan2(r[1, 0], r[0, 0])
    return EulerAngles(theta, alpha, beta)


def is_rotation(r, tol=ORTHONORMAL_TOL):
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (3, 3) or not np.all(np.isfinite(r)):
        return False
    if np.abs(r.T @ r - np.eye(3)).max() > tol:
        return False
    return abs(np.linalg.det(r) - 1.0) <= tol


def nearest_rotation(block):
    """Orthogonal polar factor of a 3x3 block, reflection-corrected.

    SVD-based projection to the closest proper rotation in the Frobenius
    sense; the sign correction keeps det = +1.
    """
    u, _, vt = np.linalg.svd(np.asarray(block, dtype=np.float64))
    d = np.sign(np.linalg.det(u) * np.linalg.det(vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


@dataclass(frozen=True)
class Transform:
    """4x4 homogeneous transform with an explicit rigid/similarity mode."""

    m: np.ndarray
    mode: str = "rigid"

    def __post_init__(self):
        m = np.asarray(self.m, dtype=np.float64)
        if m.shape != (4, 4):
            raise InvalidTransform(f"matrix shape must be (4, 4), got {m.shape}")
        object.__setattr__(self, "m", m)
        if self.mode not in ("rigid", "similarity"):
            raise InvalidArgument(f"mode must be rigid or similarity, got {self.mode!r}")

    @property
    def linear(self):
        return self.m[:3, :3]

    @property
    def translation(self):
        return self.m[:3, 3]

    @classmethod
    def identity(cls):
        return cls(np.eye(4), mode="rigid")


class Decomposition(NamedTuple):
    scale: float
    rotation: np.ndarray
    translation: np.ndarray
    angles: EulerAngles


def make_transform(r, t, s=1.0):
    """Assemble ``[[s*R, t], [0,0,0,1]]`` from validated parts."""
    r = np.asarray(r, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64).reshape(3)
    s = float(s)
    if not math.isfinite(s) or s <= 0:
        raise InvalidArgument(f"scale must be positive and finite, got {s}")
    if not np.all(np.isfinite(t)):
        raise InvalidArgument("translation must be finite")
    if not is_rotation(r):
        raise InvalidArgument("rotation block is not orthonormal with det +1")
    m = np.eye(4)
    m[:3, :3] = s * r
    m[:3, 3] = t
    return Transform(m, mode="rigid" if s == 1.0 else "similarity")


def _check_homogeneous(m):
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (4, 4):
        raise InvalidTransform(f"matrix shape must be (4, 4), got {m.shape}")
    if not np.array_equal(m[3], [0.0, 0.0, 0.0, 1.0]):
        raise InvalidTransform(f"bottom row must be (0, 0, 0, 1), got {m[3]}")
    return m


def decompose_transform(transform, tol=RELAXED_TOL):
    """Split a transform into scale, rotation, translation, Euler angles.

    Scale is the cube root of the determinant of the linear block; the
    rotation is the block divided by scale and projected to the nearest
    proper rotation. ``tol`` bounds how far (entrywise) the normalized block
    may sit from that rotation, which admits published matrices rounded to a
    few decimals.
    """
    m = _check_homogeneous(transform.m if isinstance(transform, Transform) else transform)
    block = m[:3, :3]
    det = float(np.linalg.det(block))
    if det <= 0 or not math.isfinite(det):
        raise ReflectionOrDegenerate(
            f"linear block determinant must be positive, got {det}")
    s = det ** (1.0 / 3.0)
    q = block / s
    r = nearest_rotation(q)
    deviation = float(np.abs(q - r).max())
    if deviation > tol:
        raise NotASimilarity(
            f"linear block deviates from scale*rotation by {deviation:.3g} "
            f"(tolerance {tol:.3g})")
    return Decomposition(s, r, m[:3, 3].copy(), rotation_to_euler(r))


def apply_transform(transform, target):
    """Apply to a single point (shape (3,)), a point array (n, 3), or a
    PointCloud. Cloud attributes pass through unchanged."""
    m = transform.m
    if isinstance(target, PointCloud):
        return target.with_points(target.points @ m[:3, :3].T + m[:3, 3])
    pts = np.asarray(target, dtype=np.float64)
    if pts.shape == (3,):
        return m[:3, :3] @ pts + m[:3, 3]
    if pts.ndim == 2 and pts.shape[1] == 3:
        return pts @ m[:3, :3].T + m[:3, 3]
    raise InvalidArgument(f"cannot transform object of shape {pts.shape}")


def invert_transform(transform):
    """Closed-form inverse; keeps the bottom row exact."""
    try:
        decompose_transform(transform, tol=RELAXED_TOL)
    except VoxfuseError as exc:
        raise NotInvertible(f"not a similarity transform: {exc}") from exc
    block = transform.m[:3, :3]
    # Invert the actual block (not the projected rotation) so that
    # invert(M) @ M stays near identity even for matrices that only satisfy
    # the relaxed tolerance.
    try:
        inv_block = np.linalg.inv(block)
    except np.linalg.LinAlgError as exc:
        raise NotInvertible(str(exc)) from None
    m = np.eye(4)
    m[:3, :3] = inv_block
    m[:3, 3] = -inv_block @ transform.m[:3, 3]
    return Transform(m, mode=transform.mode)


def compose(after, before):
    """Transform equal to applying ``before`` first, then ``after``."""
    mode = "rigid" if after.mode == before.mode == "rigid" else "similarity"
    return Transform(after.m @ before.m, mode=mode)
