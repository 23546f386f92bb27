"""Local HTTP backend for the interactive registration viewer.

One process serves one source/target session. The server owns the clouds
(immutable snapshots) and the correspondence pair list; every number the
viewer shows comes from these endpoints. Pair mutations and estimation are
serialized through a single lock, so responses always reflect a consistent
snapshot.

Point payloads are JSON by default; a client sending
``Accept: application/octet-stream`` receives a compact binary frame:
little-endian uint32 point count, count*3 float32 coordinates, one uint8
color flag, then count*3 uint8 RGB when the flag is 1.
"""

import os
import struct
import threading
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import fileio, registration
from .cloud import BoundingBox, PointCloud
from .errors import VoxfuseError
from .fusion import occupied_voxels, voxel_downsample
from .transforms import apply_transform

DEFAULT_LOD_BUDGET = 200_000


def lod_cloud(cloud, budget):
    """Deterministic level-of-detail: the cloud itself when small enough,
    else a voxel downsample whose leaf is found by bisection (the search
    only counts occupied voxels; the representatives are built once)."""
    if budget is None or len(cloud) <= budget:
        return cloud
    diag = BoundingBox.of(cloud.points).diagonal
    lo, hi = diag * 1e-6, diag
    for _ in range(48):
        mid = (lo + hi) / 2.0
        if len(occupied_voxels(cloud, mid)) <= budget:
            hi = mid
        else:
            lo = mid
    out = voxel_downsample(cloud, hi)
    while len(out) > budget:  # guard against non-monotone voxel counts
        hi *= 1.1
        out = voxel_downsample(cloud, hi)
    return out


@dataclass
class Session:
    source: PointCloud
    target: PointCloud
    lod_budget: int = DEFAULT_LOD_BUDGET
    pairs: dict = field(default_factory=dict)   # id -> (source xyz, target xyz)
    next_id: int = 0
    last_result: registration.RegistrationResult | None = None
    last_pairs: registration.CorrespondenceSet | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)
    # clouds are immutable, so LOD results are pure functions of (which, n)
    lod_cache: dict = field(default_factory=dict)

    def lod(self, which, budget):
        key = (which, budget)
        with self.lock:
            if key in self.lod_cache:
                return self.lod_cache[key]
        cloud = self.source if which == "source" else self.target
        out = lod_cloud(cloud, budget)
        with self.lock:
            self.lod_cache[key] = out
        return out

    def correspondence_set(self):
        ids = sorted(self.pairs)
        if not ids:
            return None
        src = np.array([self.pairs[i][0] for i in ids])
        tgt = np.array([self.pairs[i][1] for i in ids])
        return registration.CorrespondenceSet(src, tgt, ids=np.array(ids))


class PairBody(BaseModel):
    source_point: list[float] = Field(min_length=3, max_length=3)
    target_point: list[float] = Field(min_length=3, max_length=3)


class EstimateBody(BaseModel):
    mode: str = "similarity"


class ExportBody(BaseModel):
    path: str


def _wants_binary(request):
    return "application/octet-stream" in request.headers.get("accept", "")


def _cloud_payload(cloud, request):
    if _wants_binary(request):
        blob = struct.pack("<I", len(cloud))
        blob += cloud.points.astype("<f4").tobytes()
        if cloud.colors is not None:
            blob += struct.pack("B", 1) + cloud.colors.tobytes()
        else:
            blob += struct.pack("B", 0)
        return Response(content=blob, media_type="application/octet-stream")
    return JSONResponse({
        "count": len(cloud),
        "points": cloud.points.tolist(),
        "colors": None if cloud.colors is None else cloud.colors.tolist(),
    })


def create_app(source, target, lod_budget=DEFAULT_LOD_BUDGET, ui_dir=None):
    session = Session(source=source, target=target, lod_budget=lod_budget)
    app = FastAPI(title="voxfuse registration session")
    app.state.session = session

    @app.exception_handler(RequestValidationError)
    def on_validation_error(request, exc):
        return JSONResponse(status_code=400, content={
            "error": "malformed-body",
            "detail": [
                {"field": ".".join(str(p) for p in e["loc"]), "message": e["msg"]}
                for e in exc.errors()
            ],
        })

    @app.exception_handler(VoxfuseError)
    def on_domain_error(request, exc):
        return JSONResponse(status_code=409,
                            content={"error": exc.kind, "message": str(exc)})

    def _lod(request, which):
        raw = request.query_params.get("lod")
        budget = session.lod_budget
        if raw is not None:
            try:
                budget = min(int(raw), session.lod_budget)
            except ValueError:
                return None
            if budget < 1:
                return None
        return session.lod(which, budget)

    @app.get("/api/clouds/{which}")
    def get_cloud(which: str, request: Request):
        if which not in ("source", "target"):
            return JSONResponse(status_code=404,
                                content={"error": "unknown-cloud", "which": which})
        cloud = _lod(request, which)
        if cloud is None:
            return JSONResponse(status_code=400, content={
                "error": "malformed-body",
                "detail": [{"field": "lod", "message": "must be a positive integer"}]})
        return _cloud_payload(cloud, request)

    @app.get("/api/pairs")
    def list_pairs():
        with session.lock:
            items = [
                {"id": i, "source_point": list(s), "target_point": list(t)}
                for i, (s, t) in sorted(session.pairs.items())
            ]
        return {"pairs": items}

    @app.post("/api/pairs")
    def add_pair(body: PairBody):
        if not all(np.isfinite(body.source_point)) or not all(np.isfinite(body.target_point)):
            return JSONResponse(status_code=400, content={
                "error": "malformed-body",
                "detail": [{"field": "source_point/target_point",
                            "message": "coordinates must be finite"}]})
        with session.lock:
            pair_id = session.next_id
            session.next_id += 1
            session.pairs[pair_id] = (
                tuple(body.source_point), tuple(body.target_point))
        return {"id": pair_id}

    @app.delete("/api/pairs/{pair_id}")
    def delete_pair(pair_id: int):
        with session.lock:
            if pair_id not in session.pairs:
                return JSONResponse(status_code=404,
                                    content={"error": "unknown-pair", "id": pair_id})
            del session.pairs[pair_id]
        return {"removed": pair_id}

    @app.post("/api/estimate")
    def estimate(body: EstimateBody):
        if body.mode not in registration.MODES:
            return JSONResponse(status_code=400, content={
                "error": "malformed-body",
                "detail": [{"field": "mode",
                            "message": f"must be one of {registration.MODES}"}]})
        with session.lock:
            pairs = session.correspondence_set()
            if pairs is None or len(pairs) < 3:
                have = 0 if pairs is None else len(pairs)
                return JSONResponse(status_code=409, content={
                    "error": "insufficient-correspondences",
                    "message": f"need at least 3 pairs, have {have}"})
            result = registration.estimate_transform(pairs, mode=body.mode)
            session.last_result = result
            session.last_pairs = pairs
        return {
            "matrix": result.transform.m.tolist(),
            "mode": result.mode,
            "rmse": result.rmse,
            "residuals": result.residuals.tolist(),
            "pair_ids": pairs.ids.tolist(),
        }

    @app.get("/api/preview")
    def preview(request: Request):
        with session.lock:
            result = session.last_result
        if result is None:
            return JSONResponse(status_code=409, content={
                "error": "no-estimate",
                "message": "estimate a transform before previewing"})
        cloud = _lod(request, "source")
        if cloud is None:
            return JSONResponse(status_code=400, content={
                "error": "malformed-body",
                "detail": [{"field": "lod", "message": "must be a positive integer"}]})
        return _cloud_payload(apply_transform(result.transform, cloud), request)

    @app.post("/api/export")
    def export(body: ExportBody):
        with session.lock:
            result = session.last_result
        if result is None:
            return JSONResponse(status_code=409, content={
                "error": "no-estimate",
                "message": "estimate a transform before exporting"})
        fileio.write_transform(result.transform, body.path, rmse=result.rmse)
        return {"path": body.path}

    if ui_dir is None:
        ui_dir = os.environ.get("VOXFUSE_UI", "frontend/dist")
    if ui_dir and os.path.isdir(ui_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:
        @app.get("/")
        def index():
            return {
                "service": "voxfuse registration session",
                "source_points": len(session.source),
                "target_points": len(session.target),
                "ui": "no static bundle found; talk to /api/* directly",
            }

    return app
