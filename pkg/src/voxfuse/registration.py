"""Transform estimation from point correspondences, plus ICP refinement.

The closed-form estimator is the classical least-squares solution over the
rigid or similarity family: center both sides, build the cross-covariance,
take its determinant-corrected orthogonal polar factor as the rotation,
derive the scale from the corrected singular-value trace (1 when rigid), and
recover the translation from the centroids. Reflections are never returned.
"""

from dataclasses import dataclass, field

import numpy as np

from .cloud import PointCloud, as_points
from .errors import (
    DegenerateConfiguration,
    InsufficientCorrespondences,
    InvalidArgument,
    NoOverlap,
)
from .gridindex import HashGrid
from .transforms import Transform, apply_transform, compose, make_transform

MODES = ("rigid", "similarity")

# Relative spread below which the source points count as collinear.
_COLLINEAR_RTOL = 1e-9


@dataclass
class CorrespondenceSet:
    """Paired source/target points; ``ids`` are unique per pair."""

    source: np.ndarray
    target: np.ndarray
    ids: np.ndarray = None

    def __post_init__(self):
        self.source = as_points(self.source, "source points")
        self.target = as_points(self.target, "target points")
        if len(self.source) != len(self.target):
            raise InvalidArgument(
                f"source/target pair counts differ: "
                f"{len(self.source)} vs {len(self.target)}")
        if self.ids is None:
            self.ids = np.arange(len(self.source), dtype=np.int64)
        else:
            self.ids = np.asarray(self.ids, dtype=np.int64)
            if len(self.ids) != len(self.source):
                raise InvalidArgument("ids length does not match pair count")
            if len(np.unique(self.ids)) != len(self.ids):
                raise InvalidArgument("pair ids must be unique")

    def __len__(self):
        return len(self.source)


@dataclass
class RegistrationResult:
    transform: Transform
    rmse: float
    residuals: np.ndarray
    mode: str


@dataclass
class IcpParams:
    max_iterations: int = 50
    convergence_delta: float = 1e-6
    max_pair_distance: float = 1.0
    mode: str = "rigid"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidArgument("max_iterations must be >= 1")
        if not self.convergence_delta > 0:
            raise InvalidArgument("convergence_delta must be > 0")
        if not self.max_pair_distance > 0:
            raise InvalidArgument("max_pair_distance must be > 0")
        _check_mode(self.mode)


def _check_mode(mode):
    if mode not in MODES:
        raise InvalidArgument(f"mode must be one of {MODES}, got {mode!r}")
    return mode


def residuals(pairs, transform):
    """Per-pair Euclidean distances ``|M q_i - p_i|``, in input order."""
    if len(pairs) == 0:
        raise InvalidArgument("residuals require at least one pair")
    moved = apply_transform(transform, pairs.source)
    return np.linalg.norm(moved - pairs.target, axis=1)


def rmse(pairs, transform):
    """Root mean square of the per-pair residuals."""
    r = residuals(pairs, transform)
    return float(np.sqrt(np.mean(r * r)))


def estimate_transform(pairs, mode="similarity"):
    """Least-squares transform of the given mode mapping source onto target.

    Requires at least 3 pairs whose source points span two dimensions;
    collinear or coincident sources leave the rotation unobservable and raise
    DegenerateConfiguration.
    """
    _check_mode(mode)
    n = len(pairs)
    if n < 3:
        raise InsufficientCorrespondences(
            f"need at least 3 pairs, got {n}")
    src = pairs.source
    tgt = pairs.target
    mu_s = src.mean(axis=0)
    mu_t = tgt.mean(axis=0)
    x = src - mu_s
    y = tgt - mu_t

    spread = np.linalg.svd(x, compute_uv=False)
    if spread[1] <= max(spread[0], 1.0) * _COLLINEAR_RTOL:
        raise DegenerateConfiguration(
            "source points are collinear or coincident")

    cov = y.T @ x / n
    u, d, vt = np.linalg.svd(cov)
    sign = np.sign(np.linalg.det(u) * np.linalg.det(vt))
    if sign == 0:
        sign = 1.0
    corr = np.array([1.0, 1.0, sign])
    r = u @ np.diag(corr) @ vt
    if mode == "similarity":
        var_s = float(np.mean(np.sum(x * x, axis=1)))
        s = float(np.sum(d * corr)) / var_s
        if not s > 0:
            raise DegenerateConfiguration(
                f"estimated scale {s} is not positive")
    else:
        s = 1.0
    t = mu_t - s * (r @ mu_s)
    transform = make_transform(r, t, s)
    res = residuals(pairs, transform)
    return RegistrationResult(
        transform=transform,
        rmse=float(np.sqrt(np.mean(res * res))),
        residuals=res,
        mode=mode,
    )


def refine_icp(source, target, init, params=None):
    """Iterative closest point refinement of an initial alignment.

    Each iteration transforms the source by the current estimate, matches
    every source point to its nearest target point within
    ``max_pair_distance`` (hash-grid index), re-estimates on the surviving
    pairs, and composes the increment onto the running transform. Stops when
    the matched-pair RMSE improves by less than ``convergence_delta`` or
    after ``max_iterations``; an iteration that would worsen the RMSE is
    discarded, so the returned history never increases after the first entry.

    Returns ``(transform, rmse_history)``.
    """
    params = params or IcpParams()
    src = source.points if isinstance(source, PointCloud) else as_points(source)
    tgt = target.points if isinstance(target, PointCloud) else as_points(target)
    if len(src) == 0 or len(tgt) == 0:
        raise InvalidArgument("ICP requires non-empty clouds")
    grid = HashGrid(tgt, cell=params.max_pair_distance)

    current = init
    history = []
    for iteration in range(1, params.max_iterations + 1):
        moved = apply_transform(current, src)
        idx, dist = grid.nearest_within(moved)
        matched = idx >= 0
        if not np.any(matched):
            raise NoOverlap(
                f"no source point found a target within "
                f"{params.max_pair_distance} m at iteration {iteration}",
                iteration=iteration)
        pairs = CorrespondenceSet(moved[matched], tgt[idx[matched]])
        step = estimate_transform(pairs, mode=params.mode)
        candidate = compose(step.transform, current)
        candidate_rmse = step.rmse
        if history:
            if candidate_rmse > history[-1]:
                break  # re-matching made things worse; keep the previous fit
            improvement = history[-1] - candidate_rmse
            current = candidate
            history.append(candidate_rmse)
            if improvement < params.convergence_delta:
                break
        else:
            current = candidate
            history.append(candidate_rmse)
    return current, history
