"""Voxel-level fusion of aligned clouds and occupancy/coverage analytics.

Voxel keys are per-axis floor(coordinate / leaf), anchored at the frame
origin, so a point exactly on a boundary belongs to the higher-index voxel.
Fusion keeps the union of the per-source occupied voxel sets and merges
per-voxel attributes under a configurable policy; coverage reports quantify
how much of a labeled ground-truth surface each cloud (and their union)
actually observes.
"""

from dataclasses import dataclass

import numpy as np

from .cloud import NEUTRAL_COLOR, PointCloud, SurfaceClass, SURFACE_CLASS_NAMES
from .errors import FrameMismatch, InvalidArgument

COLOR_RULES = ("prefer-colored-source", "average", "first-wins")
DEDUP_MODES = ("one-point-per-voxel-per-source", "keep-all")

# Per-axis voxel index budget for packing keys into one int64.
_KEY_BITS = 21


@dataclass
class FusionPolicy:
    leaf: float = 0.1
    color_rule: str = "prefer-colored-source"
    dedup: str = "one-point-per-voxel-per-source"

    def __post_init__(self):
        if not self.leaf > 0:
            raise InvalidArgument(f"leaf must be > 0, got {self.leaf}")
        if self.color_rule not in COLOR_RULES:
            raise InvalidArgument(
                f"color_rule must be one of {COLOR_RULES}, got {self.color_rule!r}")
        if self.dedup not in DEDUP_MODES:
            raise InvalidArgument(
                f"dedup must be one of {DEDUP_MODES}, got {self.dedup!r}")


@dataclass
class CoverageStats:
    """Occupancy bookkeeping for a set of clouds sharing one frame.

    ``coverage`` maps surface-class name -> tag -> fraction of ground-truth
    voxels of that class occupied; the pseudo-tag "fused" stands for the
    union of all input clouds. ``gain`` is the fraction of union voxels a
    single source fails to observe.
    """

    leaf: float
    tags: tuple
    voxel_counts: dict
    union_count: int
    intersection_count: int
    unique_counts: dict
    coverage: dict
    gain: dict


def voxel_keys(points, leaf):
    """Integer voxel coordinates, shape (n, 3)."""
    if not leaf > 0:
        raise InvalidArgument(f"leaf must be > 0, got {leaf}")
    return np.floor(np.asarray(points, dtype=np.float64) / leaf).astype(np.int64)


def _pack(keys):
    """Pack (n, 3) voxel coordinates into sortable int64 codes (lossless)."""
    if keys.size == 0:
        return np.empty(0, dtype=np.int64)
    span = keys.max(axis=0) - keys.min(axis=0)
    if np.any(span >= (1 << _KEY_BITS)):
        raise InvalidArgument(
            "voxel grid too fine for the cloud extent; increase the leaf size")
    base = keys.min(axis=0)
    k = keys - base
    return (k[:, 0] << (2 * _KEY_BITS)) | (k[:, 1] << _KEY_BITS) | k[:, 2]


def _group_representatives(cloud, leaf):
    """One representative per occupied voxel: centroid position, channelwise
    mean color, majority label (ties to the lexicographically smallest class).

    Returns (keys (g, 3), points, colors|None, labels|None), ordered by key.
    """
    keys = voxel_keys(cloud.points, leaf)
    packed = _pack(keys)
    uniq, first, inverse, counts = np.unique(
        packed, return_index=True, return_inverse=True, return_counts=True)
    g = len(uniq)
    centroids = np.empty((g, 3))
    for axis in range(3):
        centroids[:, axis] = np.bincount(
            inverse, weights=cloud.points[:, axis], minlength=g) / counts
    colors = None
    if cloud.colors is not None:
        colors = np.empty((g, 3), dtype=np.uint8)
        for ch in range(3):
            mean = np.bincount(
                inverse, weights=cloud.colors[:, ch].astype(np.float64),
                minlength=g) / counts
            colors[:, ch] = np.rint(mean).astype(np.uint8)
    labels = None
    if cloud.labels is not None:
        nclass = len(SurfaceClass)
        tallies = np.bincount(
            inverse * nclass + cloud.labels, minlength=g * nclass
        ).reshape(g, nclass)
        labels = np.argmax(tallies, axis=1).astype(np.int64)
    return keys[first], centroids, colors, labels


def voxel_downsample(cloud, leaf):
    """Collapse the cloud to one representative point per occupied voxel."""
    cloud.require_nonempty("voxel_downsample")
    _, pts, colors, labels = _group_representatives(cloud, leaf)
    return PointCloud(
        points=pts, colors=colors, labels=labels,
        source_tag=cloud.source_tag, frame_id=cloud.frame_id)


def _check_same_frame(clouds):
    if len(clouds) == 0:
        raise InvalidArgument("need at least one input cloud")
    frames = {c.frame_id for c in clouds}
    if len(frames) != 1:
        raise FrameMismatch(
            f"clouds live in different frames: {sorted(frames)}")


def fuse(clouds, policy=None):
    """Merge aligned clouds on a shared voxel grid.

    With per-source dedup every cloud contributes one representative per
    voxel it occupies, so the output's occupied-voxel set is exactly the
    union of the inputs'. Voxel color follows ``policy.color_rule``:

    * prefer-colored-source: mean color of the colored sources present in the
      voxel (the single colored source's value when only one has color);
    * average: same mean (the rules differ only in intent, both skip
      colorless sources);
    * first-wins: color of the first input cloud, in argument order, that
      occupies the voxel with color.

    Voxels no colored source observed get a neutral gray. Output carries
    colors iff at least one input does, labels iff every input does.
    """
    policy = policy or FusionPolicy()
    _check_same_frame(clouds)
    for c in clouds:
        c.require_nonempty("fuse")
    any_colors = any(c.colors is not None for c in clouds)
    all_labels = all(c.labels is not None for c in clouds)
    frame = clouds[0].frame_id

    if policy.dedup == "keep-all":
        points = np.concatenate([c.points for c in clouds])
        colors = None
        if any_colors:
            colors = np.concatenate([
                c.colors if c.colors is not None
                else np.tile(NEUTRAL_COLOR, (len(c), 1))
                for c in clouds])
        labels = None
        if all_labels:
            labels = np.concatenate([c.labels for c in clouds])
        return PointCloud(points, colors, labels,
                          source_tag="fused", frame_id=frame)

    reps = [_group_representatives(c, policy.leaf) for c in clouds]
    points = np.concatenate([r[1] for r in reps])
    labels = None
    if all_labels:
        labels = np.concatenate([r[3] for r in reps])

    colors = None
    if any_colors:
        packed = [
            _pack_common(r[0], reps) for r in reps
        ]
        # Deterministic per-voxel color, resolved on packed voxel codes.
        voxel_color = {}
        if policy.color_rule == "first-wins":
            for codes, rep in zip(packed, reps):
                if rep[2] is None:
                    continue
                for code, rgb in zip(codes.tolist(), rep[2]):
                    voxel_color.setdefault(code, rgb)
        else:
            sums, counts = {}, {}
            for codes, rep in zip(packed, reps):
                if rep[2] is None:
                    continue
                for code, rgb in zip(codes.tolist(), rep[2]):
                    sums[code] = sums.get(code, 0.0) + rgb.astype(np.float64)
                    counts[code] = counts.get(code, 0) + 1
            voxel_color = {
                code: np.rint(sums[code] / counts[code]).astype(np.uint8)
                for code in sums}
        colors = np.vstack([
            np.array([
                voxel_color.get(code, NEUTRAL_COLOR)
                for code in codes.tolist()], dtype=np.uint8)
            for codes in packed])
    return PointCloud(points, colors, labels, source_tag="fused", frame_id=frame)


def _pack_common(keys, reps):
    """Pack keys against the global extent of every representative set, so
    codes are comparable across sources."""
    all_keys = np.concatenate([r[0] for r in reps])
    base = all_keys.min(axis=0)
    span = all_keys.max(axis=0) - base
    if np.any(span >= (1 << _KEY_BITS)):
        raise InvalidArgument(
            "voxel grid too fine for the cloud extent; increase the leaf size")
    k = keys - base
    return (k[:, 0] << (2 * _KEY_BITS)) | (k[:, 1] << _KEY_BITS) | k[:, 2]


def occupied_voxels(cloud, leaf, base=None):
    """Sorted unique packed voxel codes for one cloud (helper for set math).

    ``base`` anchors the packing; pass a shared anchor when codes from
    several clouds must be comparable.
    """
    keys = voxel_keys(cloud.points, leaf)
    if base is not None:
        keys = keys - base
        if np.any(keys < 0) or np.any(keys >= (1 << _KEY_BITS)):
            raise InvalidArgument(
                "voxel grid too fine for the cloud extent; increase the leaf size")
        packed = (keys[:, 0] << (2 * _KEY_BITS)) | (keys[:, 1] << _KEY_BITS) | keys[:, 2]
    else:
        packed = _pack(keys)
    return np.unique(packed)


def coverage_report(clouds, leaf, truth=None):
    """Occupancy statistics for clouds sharing one frame.

    Without ``truth``: per-source, union, intersection, and unique-to-source
    voxel counts, plus each source's completeness gain (union voxels it
    misses, as a fraction of the union). With a labeled ``truth`` cloud,
    additionally the per-surface-class fraction of truth voxels each source
    covers, and the same for the union under the pseudo-tag "fused".
    """
    _check_same_frame(clouds)
    for c in clouds:
        c.require_nonempty("coverage_report")
    if not leaf > 0:
        raise InvalidArgument(f"leaf must be > 0, got {leaf}")
    tags = tuple(c.source_tag for c in clouds)
    if len(set(tags)) != len(tags):
        raise InvalidArgument(f"source_tags must be distinct, got {tags}")

    anchor_clouds = list(clouds) + ([truth] if truth is not None else [])
    base = np.min(
        [voxel_keys(c.points, leaf).min(axis=0) for c in anchor_clouds], axis=0)

    occ = {c.source_tag: occupied_voxels(c, leaf, base=base) for c in clouds}
    union = occ[tags[0]]
    inter = occ[tags[0]]
    for tag in tags[1:]:
        union = np.union1d(union, occ[tag])
        inter = np.intersect1d(inter, occ[tag])
    unique_counts = {}
    for tag in tags:
        others = [occ[t] for t in tags if t != tag]
        rest = np.unique(np.concatenate(others)) if others else np.empty(0, np.int64)
        unique_counts[tag] = int(len(np.setdiff1d(occ[tag], rest)))

    coverage = {}
    if truth is not None:
        if truth.labels is None:
            raise InvalidArgument("truth cloud must carry labels")
        truth_keys = voxel_keys(truth.points, leaf) - base
        packed_truth = (
            (truth_keys[:, 0] << (2 * _KEY_BITS))
            | (truth_keys[:, 1] << _KEY_BITS)
            | truth_keys[:, 2])
        for cls in SurfaceClass:
            cls_vox = np.unique(packed_truth[truth.labels == int(cls)])
            if len(cls_vox) == 0:
                continue
            per_tag = {}
            for tag in tags:
                per_tag[tag] = len(np.intersect1d(occ[tag], cls_vox)) / len(cls_vox)
            per_tag["fused"] = len(np.intersect1d(union, cls_vox)) / len(cls_vox)
            coverage[cls.label] = per_tag

    union_count = int(len(union))
    gain = {
        tag: (union_count - len(occ[tag])) / union_count if union_count else 0.0
        for tag in tags}
    return CoverageStats(
        leaf=float(leaf),
        tags=tags,
        voxel_counts={tag: int(len(occ[tag])) for tag in tags},
        union_count=union_count,
        intersection_count=int(len(inter)),
        unique_counts=unique_counts,
        coverage=coverage,
        gain=gain,
    )


def format_coverage_report(stats):
    """Flat machine-readable key = value rendering, deterministic order."""
    lines = ["schema = coverage-report/1", f"leaf = {stats.leaf!r}"]
    for tag in stats.tags:
        lines.append(f"voxels.{tag} = {stats.voxel_counts[tag]}")
    lines.append(f"voxels.union = {stats.union_count}")
    lines.append(f"voxels.intersection = {stats.intersection_count}")
    for tag in stats.tags:
        lines.append(f"unique.{tag} = {stats.unique_counts[tag]}")
    for cls in SURFACE_CLASS_NAMES:
        if cls not in stats.coverage:
            continue
        per_tag = stats.coverage[cls]
        for tag in list(stats.tags) + ["fused"]:
            lines.append(f"coverage.{cls}.{tag} = {per_tag[tag]!r}")
    for tag in stats.tags:
        lines.append(f"gain.{tag} = {stats.gain[tag]!r}")
    return "\n".join(lines) + "\n"


def summarize_coverage(stats):
    """Short human-readable summary of a coverage report."""
    parts = [
        f"{len(stats.tags)} cloud(s) at leaf {stats.leaf} m: "
        f"union {stats.union_count} voxels, "
        f"intersection {stats.intersection_count}"]
    for tag in stats.tags:
        parts.append(
            f"  {tag}: {stats.voxel_counts[tag]} voxels "
            f"({stats.unique_counts[tag]} unique, "
            f"gain if fused {stats.gain[tag]:.3f})")
    for cls in SURFACE_CLASS_NAMES:
        if cls in stats.coverage:
            per_tag = stats.coverage[cls]
            detail = ", ".join(
                f"{tag} {per_tag[tag]:.3f}"
                for tag in list(stats.tags) + ["fused"])
            parts.append(f"  {cls} coverage: {detail}")
    return "\n".join(parts)
