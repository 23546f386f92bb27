"""File formats: PLY and XYZ clouds, correspondence pairs, transform
documents, and the flight pose table.

All writers are atomic (temp file in the target directory, then rename) and
all numeric text uses '.' as the decimal separator regardless of locale.
ASCII numbers are written with 9 significant digits; binary PLY stores
float64 coordinates and round-trips them bit-exactly.
"""

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud
from .errors import (
    InvalidTransform,
    ParseError,
    UnsupportedFormat,
    ValidationError,
)
from .transforms import RELAXED_TOL, Transform, decompose_transform
from .registration import CorrespondenceSet

_FLOAT_FMT = "%.9g"

_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


def _atomic_write(path, data):
    """Write bytes or text to ``path`` via temp file + rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-voxfuse-")
    try:
        with os.fdopen(fd, mode) as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# Point clouds


def write_cloud(cloud, path, ascii=False):
    """Write a cloud; format chosen by extension (.ply, else xyz text)."""
    path = os.fspath(path)
    if path.lower().endswith(".ply"):
        _write_ply(cloud, path, ascii=ascii)
    else:
        _write_xyz(cloud, path)


def read_cloud(path):
    """Read a PLY (ascii or binary little-endian) or xyz-text cloud."""
    path = os.fspath(path)
    with open(path, "rb") as handle:
        magic = handle.readline()
    if magic.strip() == b"ply":
        return _read_ply(path)
    return _read_xyz(path)


def _ply_header(cloud, fmt):
    lines = [
        "ply",
        f"format {fmt} 1.0",
        f"comment source_tag {cloud.source_tag}" if cloud.source_tag else None,
        f"comment frame_id {cloud.frame_id}",
        f"element vertex {len(cloud)}",
        "property double x",
        "property double y",
        "property double z",
    ]
    if cloud.colors is not None:
        lines += ["property uchar red", "property uchar green", "property uchar blue"]
    if cloud.labels is not None:
        lines += ["property int label"]
    lines += ["end_header"]
    return "\n".join(l for l in lines if l is not None) + "\n"


def _vertex_dtype(cloud):
    fields = [("x", "<f8"), ("y", "<f8"), ("z", "<f8")]
    if cloud.colors is not None:
        fields += [("red", "u1"), ("green", "u1"), ("blue", "u1")]
    if cloud.labels is not None:
        fields += [("label", "<i4")]
    return np.dtype(fields)


def _write_ply(cloud, path, ascii=False):
    fmt = "ascii" if ascii else "binary_little_endian"
    header = _ply_header(cloud, fmt)
    rec = np.empty(len(cloud), dtype=_vertex_dtype(cloud))
    rec["x"], rec["y"], rec["z"] = cloud.points.T
    if cloud.colors is not None:
        rec["red"], rec["green"], rec["blue"] = cloud.colors.T
    if cloud.labels is not None:
        rec["label"] = cloud.labels
    if ascii:
        rows = []
        for row in rec:
            cols = [_FLOAT_FMT % row[n] for n in ("x", "y", "z")]
            if cloud.colors is not None:
                cols += [str(int(row[n])) for n in ("red", "green", "blue")]
            if cloud.labels is not None:
                cols += [str(int(row["label"]))]
            rows.append(" ".join(cols))
        _atomic_write(path, header + "\n".join(rows) + ("\n" if rows else ""))
    else:
        _atomic_write(path, header.encode("ascii") + rec.tobytes())


def _read_ply(path):
    with open(path, "rb") as handle:
        raw = handle.read()
    # Header is ascii text terminated by an end_header line.
    end = raw.find(b"end_header")
    if end < 0:
        raise ParseError("missing end_header", path=path)
    newline = raw.find(b"\n", end)
    if newline < 0:
        raise ParseError("end_header line not terminated", path=path)
    header_text = raw[:newline].decode("ascii", errors="replace")
    body = raw[newline + 1:]

    fmt = None
    count = None
    props = []            # (name, numpy code) for the vertex element
    in_vertex = False
    vertex_seen = False
    tags = {"source_tag": "", "frame_id": "local"}
    lines = header_text.splitlines()
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if lineno == 1:
            if line != "ply":
                raise ParseError("file does not start with 'ply'", path, lineno)
            continue
        if not line or line == "end_header":
            continue
        fieldsv = line.split()
        key = fieldsv[0]
        if key == "comment":
            if len(fieldsv) >= 3 and fieldsv[1] in tags:
                tags[fieldsv[1]] = " ".join(fieldsv[2:])
            continue
        if key == "format":
            if len(fieldsv) != 3:
                raise ParseError("malformed format line", path, lineno)
            fmt = fieldsv[1]
            if fmt not in ("ascii", "binary_little_endian"):
                raise UnsupportedFormat(
                    f"{path}: unsupported PLY format {fmt!r} "
                    "(ascii and binary_little_endian are supported)")
            continue
        if key == "element":
            if len(fieldsv) != 3:
                raise ParseError("malformed element line", path, lineno)
            if fieldsv[1] == "vertex":
                in_vertex = True
                vertex_seen = True
                try:
                    count = int(fieldsv[2])
                except ValueError:
                    raise ParseError("bad vertex count", path, lineno) from None
            else:
                if not vertex_seen:
                    raise UnsupportedFormat(
                        f"{path}: element {fieldsv[1]!r} precedes the vertex "
                        "element; cannot locate vertex data")
                in_vertex = False  # trailing elements are ignored
            continue
        if key == "property":
            if not in_vertex:
                continue
            if fieldsv[1] == "list":
                raise UnsupportedFormat(
                    f"{path}: list property {fieldsv[-1]!r} on vertex element")
            if len(fieldsv) != 3:
                raise ParseError("malformed property line", path, lineno)
            ptype, pname = fieldsv[1], fieldsv[2]
            if ptype not in _PLY_TYPES:
                raise UnsupportedFormat(
                    f"{path}: unsupported property type {ptype!r} for {pname!r}")
            props.append((pname, _PLY_TYPES[ptype]))
            continue
        raise ParseError(f"unrecognized header line {line!r}", path, lineno)

    if fmt is None:
        raise ParseError("missing format line", path=path)
    if count is None:
        raise ParseError("missing vertex element", path=path)
    names = [p[0] for p in props]
    for coord in ("x", "y", "z"):
        if coord not in names:
            raise ParseError(f"vertex element lacks property {coord!r}", path=path)
        code = dict(props)[coord]
        if code not in ("f4", "f8"):
            raise UnsupportedFormat(
                f"{path}: coordinate property {coord!r} must be float32 or "
                f"float64")
    has_colors = all(c in names for c in ("red", "green", "blue"))
    if has_colors:
        for c in ("red", "green", "blue"):
            if dict(props)[c] != "u1":
                raise UnsupportedFormat(
                    f"{path}: color property {c!r} must be uchar")
    has_labels = "label" in names

    if fmt == "binary_little_endian":
        dtype = np.dtype([(n, "<" + code) for n, code in props])
        need = count * dtype.itemsize
        if len(body) < need:
            have = len(body) // dtype.itemsize
            raise ParseError(
                f"header promises {count} vertices, body holds {have}",
                path=path)
        rec = np.frombuffer(body[:need], dtype=dtype)
    else:
        text_rows = body.decode("ascii", errors="replace").splitlines()
        rows = [r for r in (row.strip() for row in text_rows) if r]
        if len(rows) < count:
            raise ParseError(
                f"header promises {count} vertices, body holds {len(rows)}",
                path=path)
        rec = np.empty(count, dtype=np.dtype([(n, c) for n, c in props]))
        header_lines = len(lines)
        for i in range(count):
            cols = rows[i].split()
            if len(cols) != len(props):
                raise ParseError(
                    f"expected {len(props)} columns, got {len(cols)}",
                    path, header_lines + 1 + i)
            try:
                for (name, code), col in zip(props, cols):
                    rec[name][i] = float(col) if code in ("f4", "f8") else int(col)
            except ValueError:
                raise ParseError(
                    f"bad numeric value in {rows[i]!r}",
                    path, header_lines + 1 + i) from None

    points = np.stack([
        rec["x"].astype(np.float64),
        rec["y"].astype(np.float64),
        rec["z"].astype(np.float64)], axis=1)
    colors = None
    if has_colors:
        colors = np.stack([rec["red"], rec["green"], rec["blue"]], axis=1)
    labels = rec["label"].astype(np.int64) if has_labels else None
    return PointCloud(points, colors, labels,
                      source_tag=tags["source_tag"], frame_id=tags["frame_id"])


def _write_xyz(cloud, path):
    rows = []
    for i in range(len(cloud)):
        cols = [_FLOAT_FMT % v for v in cloud.points[i]]
        if cloud.colors is not None:
            cols += [str(int(v)) for v in cloud.colors[i]]
        rows.append(" ".join(cols))
    _atomic_write(path, "\n".join(rows) + ("\n" if rows else ""))


def _read_xyz(path):
    points, colors = [], []
    with open(path, "r", encoding="ascii", errors="replace") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cols = line.replace(",", " ").split()
            if len(cols) not in (3, 6):
                raise ParseError(
                    f"expected 3 or 6 columns, got {len(cols)}", path, lineno)
            try:
                points.append([float(c) for c in cols[:3]])
                if len(cols) == 6:
                    colors.append([int(float(c)) for c in cols[3:]])
            except ValueError:
                raise ParseError(f"bad numeric value in {line!r}", path, lineno) from None
    if colors and len(colors) != len(points):
        raise ParseError("some lines carry colors and some do not", path=path)
    return PointCloud(
        np.array(points).reshape(-1, 3),
        np.array(colors, dtype=np.uint8) if colors else None)


# ---------------------------------------------------------------------------
# Correspondence pairs: one pair per line, sx sy sz tx ty tz


def write_pairs(pairs, path):
    rows = ["# sx sy sz tx ty tz"]
    for s, t in zip(pairs.source, pairs.target):
        rows.append(" ".join(_FLOAT_FMT % v for v in (*s, *t)))
    _atomic_write(path, "\n".join(rows) + "\n")


def read_pairs(path):
    """Comma- or whitespace-separated pair table; ids follow line order."""
    source, target = [], []
    with open(path, "r", encoding="ascii", errors="replace") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cols = line.replace(",", " ").split()
            if len(cols) != 6:
                raise ParseError(
                    f"expected 6 columns, got {len(cols)}", path, lineno)
            try:
                vals = [float(c) for c in cols]
            except ValueError:
                raise ParseError(f"bad numeric value in {line!r}", path, lineno) from None
            source.append(vals[:3])
            target.append(vals[3:])
    return CorrespondenceSet(
        np.array(source).reshape(-1, 3),
        np.array(target).reshape(-1, 3))


# ---------------------------------------------------------------------------
# Transform documents (versioned JSON)

TRANSFORM_SCHEMA = "transform/1"


def write_transform(transform, path, rmse=None, notes=None):
    doc = {
        "schema": TRANSFORM_SCHEMA,
        "mode": transform.mode,
        "matrix": [[float(v) for v in row] for row in transform.m],
    }
    if rmse is not None:
        doc["rmse"] = float(rmse)
    if notes is not None:
        doc["notes"] = str(notes)
    _atomic_write(path, json.dumps(doc, indent=2) + "\n")


def read_transform(path, tol=RELAXED_TOL):
    """Read and validate a transform document.

    The linear block must be scale-times-rotation within ``tol`` (relaxed by
    default so matrices published rounded to three decimals load cleanly).
    """
    with open(path, "r", encoding="utf-8", errors="replace") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ParseError(str(exc), path=path, line=exc.lineno) from None
    schema = doc.get("schema") if isinstance(doc, dict) else None
    if schema != TRANSFORM_SCHEMA:
        raise ParseError(
            f"expected schema {TRANSFORM_SCHEMA!r}, got {schema!r}", path=path)
    mode = doc.get("mode", "similarity")
    try:
        matrix = np.asarray(doc.get("matrix"), dtype=np.float64)
    except (TypeError, ValueError):
        raise InvalidTransform(f"{path}: matrix entries are not numeric") from None
    if matrix.shape != (4, 4):
        raise InvalidTransform(f"{path}: matrix must be 4x4, got {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise InvalidTransform(f"{path}: matrix entries must be finite")
    if not np.array_equal(matrix[3], [0.0, 0.0, 0.0, 1.0]):
        raise InvalidTransform(
            f"{path}: bottom row must be (0, 0, 0, 1), got {matrix[3].tolist()}")
    transform = Transform(matrix, mode=mode)
    dec = decompose_transform(transform, tol=tol)  # raises if not similarity-like
    if mode == "rigid" and abs(dec.scale - 1.0) > tol:
        raise InvalidTransform(
            f"{path}: mode is rigid but scale is {dec.scale:.6g}")
    return transform


# ---------------------------------------------------------------------------
# Flight pose table


@dataclass(frozen=True)
class PoseRecord:
    id: int
    latitude: float
    longitude: float
    altitude: float
    yaw: float


_POSE_COLUMNS = ("id", "latitude", "longitude", "altitude", "yaw")


def _normalize_header(cell):
    # "Latitude (°)" -> "latitude"; tolerate mojibake around the degree sign.
    word = cell.split("(")[0].strip().lower()
    return word


def read_pose_table(path):
    """CSV pose table with columns Id, Latitude, Longitude, Altitude, Yaw."""
    records = []
    with open(path, "r", encoding="utf-8", errors="replace") as handle:
        rows = [line.strip() for line in handle]
    rows = [r for r in rows if r]
    if not rows:
        raise ParseError("empty pose table", path=path)
    header = tuple(_normalize_header(c) for c in rows[0].split(","))
    if header != _POSE_COLUMNS:
        raise ParseError(
            f"expected columns {_POSE_COLUMNS}, got {header}", path, 1)
    for lineno, row in enumerate(rows[1:], start=2):
        cols = [c.strip() for c in row.split(",")]
        if len(cols) != 5:
            raise ParseError(f"expected 5 columns, got {len(cols)}", path, lineno)
        try:
            rec = PoseRecord(
                id=int(cols[0]),
                latitude=float(cols[1]),
                longitude=float(cols[2]),
                altitude=float(cols[3]),
                yaw=float(cols[4]),
            )
        except ValueError:
            raise ParseError(f"bad numeric value in {row!r}", path, lineno) from None
        if not -90.0 <= rec.latitude <= 90.0:
            raise ValidationError(
                f"{path}:{lineno}: latitude {rec.latitude} outside [-90, 90]")
        if not -180.0 <= rec.longitude <= 180.0:
            raise ValidationError(
                f"{path}:{lineno}: longitude {rec.longitude} outside [-180, 180]")
        if not 0.0 <= rec.yaw < 360.0:
            raise ValidationError(
                f"{path}:{lineno}: yaw {rec.yaw} outside [0, 360)")
        records.append(rec)
    return records
