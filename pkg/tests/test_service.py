import struct

import numpy as np
import pytest
from fastapi.testclient import TestClient

import voxfuse as vf
from voxfuse.cli import run
from voxfuse.service import create_app, lod_cloud


@pytest.fixture
def session_clouds(rng):
    target = vf.PointCloud(
        rng.uniform(-10, 10, (500, 3)), source_tag="mms", frame_id="local")
    misreg = vf.default_misregistration()
    source = vf.apply_transform(misreg, target)
    source = vf.PointCloud(
        source.points,
        colors=rng.integers(0, 256, (500, 3), dtype=np.uint8),
        source_tag="uav", frame_id="local")
    return source, target, misreg


@pytest.fixture
def client(session_clouds):
    source, target, _ = session_clouds
    app = create_app(source, target, lod_budget=200, ui_dir="")
    return TestClient(app)


def canon9(values):
    """Canonicalize through the pair-file precision (9 significant digits) so
    the same coordinates survive both the HTTP body and the pairs file."""
    return np.array([[float("%.9g" % v) for v in row] for row in values])


def add_known_pairs(client, source, target, count=7):
    pick = np.linspace(0, len(source) - 1, count).astype(int)
    src = canon9(source.points[pick])
    tgt = canon9(target.points[pick])
    ids = []
    for s, t in zip(src, tgt):
        resp = client.post("/api/pairs", json={
            "source_point": s.tolist(), "target_point": t.tolist()})
        assert resp.status_code == 200
        ids.append(resp.json()["id"])
    return src, tgt, ids


class TestClouds:
    def test_payload_deterministic(self, client):
        a = client.get("/api/clouds/source?lod=100")
        b = client.get("/api/clouds/source?lod=100")
        assert a.status_code == 200
        assert a.content == b.content
        body = a.json()
        assert body["count"] == len(body["points"]) <= 100
        assert body["colors"] is not None

    def test_target_has_no_colors(self, client):
        body = client.get("/api/clouds/target?lod=50").json()
        assert body["colors"] is None
        assert body["count"] <= 50

    def test_budget_caps_lod(self, client):
        body = client.get("/api/clouds/source?lod=100000").json()
        assert body["count"] <= 200  # session budget

    def test_unknown_cloud_404(self, client):
        assert client.get("/api/clouds/middle").status_code == 404

    def test_bad_lod_400(self, client):
        assert client.get("/api/clouds/source?lod=x").status_code == 400
        assert client.get("/api/clouds/source?lod=0").status_code == 400

    def test_binary_framing(self, client):
        resp = client.get("/api/clouds/source?lod=60",
                          headers={"accept": "application/octet-stream"})
        assert resp.status_code == 200
        blob = resp.content
        (count,) = struct.unpack_from("<I", blob, 0)
        pts = np.frombuffer(blob, dtype="<f4", count=count * 3, offset=4)
        flag_off = 4 + count * 3 * 4
        has_colors = blob[flag_off]
        assert has_colors == 1
        colors = np.frombuffer(
            blob, dtype=np.uint8, count=count * 3, offset=flag_off + 1)
        json_body = client.get("/api/clouds/source?lod=60").json()
        assert count == json_body["count"]
        assert np.allclose(
            pts.reshape(-1, 3), np.array(json_body["points"], dtype=np.float32))
        assert np.array_equal(
            colors.reshape(-1, 3), np.array(json_body["colors"], dtype=np.uint8))


class TestPairs:
    def test_crud_roundtrip(self, client):
        resp = client.post("/api/pairs", json={
            "source_point": [1, 2, 3], "target_point": [4, 5, 6]})
        pair_id = resp.json()["id"]
        listing = client.get("/api/pairs").json()["pairs"]
        assert listing == [{
            "id": pair_id, "source_point": [1, 2, 3], "target_point": [4, 5, 6]}]
        assert client.delete(f"/api/pairs/{pair_id}").json() == {"removed": pair_id}
        assert client.get("/api/pairs").json()["pairs"] == []

    def test_delete_unknown_404(self, client):
        assert client.delete("/api/pairs/99").status_code == 404

    def test_malformed_body_400(self, client):
        resp = client.post("/api/pairs", json={"source_point": [1, 2]})
        assert resp.status_code == 400
        detail = resp.json()["detail"]
        assert any("source_point" in d["field"] for d in detail)

    def test_nonfinite_rejected(self, client):
        # bypass the client-side encoder; lenient parsers accept bare NaN
        resp = client.post(
            "/api/pairs",
            content='{"source_point": [1, 2, NaN], "target_point": [0, 0, 0]}',
            headers={"content-type": "application/json"})
        assert resp.status_code == 400


class TestEstimate:
    def test_too_few_pairs_409(self, client):
        client.post("/api/pairs", json={
            "source_point": [0, 0, 0], "target_point": [0, 0, 0]})
        resp = client.post("/api/estimate", json={"mode": "similarity"})
        assert resp.status_code == 409
        assert resp.json()["error"] == "insufficient-correspondences"

    def test_seven_pairs_match_library_bitwise(self, client, session_clouds):
        source, target, misreg = session_clouds
        src, tgt, _ = add_known_pairs(client, source, target)
        resp = client.post("/api/estimate", json={"mode": "similarity"})
        assert resp.status_code == 200
        body = resp.json()
        lib = vf.estimate_transform(
            vf.CorrespondenceSet(src, tgt), mode="similarity")
        assert np.array_equal(np.array(body["matrix"]), lib.transform.m)
        assert body["rmse"] == lib.rmse
        assert np.array_equal(np.array(body["residuals"]), lib.residuals)
        # and the estimate undoes the misregistration
        assert np.abs(
            np.array(body["matrix"]) - vf.invert_transform(misreg).m).max() < 1e-6

    def test_deleted_pair_excluded(self, client, session_clouds):
        source, target, _ = session_clouds
        _, _, ids = add_known_pairs(client, source, target, count=4)
        client.post("/api/pairs", json={
            "source_point": [0, 0, 0], "target_point": [500.0, 0, 0]})  # outlier
        with_outlier = client.post(
            "/api/estimate", json={"mode": "similarity"}).json()
        outlier_id = max(
            p["id"] for p in client.get("/api/pairs").json()["pairs"])
        client.delete(f"/api/pairs/{outlier_id}")
        without = client.post("/api/estimate", json={"mode": "similarity"}).json()
        assert without["rmse"] < with_outlier["rmse"]
        assert outlier_id not in without["pair_ids"]

    def test_bad_mode_400(self, client):
        assert client.post(
            "/api/estimate", json={"mode": "affine"}).status_code == 400

    def test_reestimate_is_idempotent(self, client, session_clouds):
        source, target, _ = session_clouds
        add_known_pairs(client, source, target)
        first = client.post("/api/estimate", json={"mode": "similarity"})
        second = client.post("/api/estimate", json={"mode": "similarity"})
        assert first.content == second.content


class TestPreviewExport:
    def test_preview_requires_estimate(self, client):
        assert client.get("/api/preview?lod=50").status_code == 409

    def test_identity_preview_equals_lod_cloud(self, rng):
        cloud = vf.PointCloud(rng.uniform(-5, 5, (120, 3)), source_tag="uav")
        app = create_app(cloud, cloud, lod_budget=1000, ui_dir="")
        client = TestClient(app)
        add_known_pairs(client, cloud, cloud, count=5)
        assert client.post(
            "/api/estimate", json={"mode": "rigid"}).status_code == 200
        preview = np.array(client.get("/api/preview?lod=1000").json()["points"])
        base = np.array(client.get("/api/clouds/source?lod=1000").json()["points"])
        assert np.abs(preview - base).max() < 1e-9

    def test_export_bit_identical_to_cli(self, client, session_clouds, tmp_path):
        source, target, _ = session_clouds
        src, tgt, _ = add_known_pairs(client, source, target)
        assert client.post(
            "/api/estimate", json={"mode": "similarity"}).status_code == 200
        exported = tmp_path / "exported.json"
        resp = client.post("/api/export", json={"path": str(exported)})
        assert resp.status_code == 200

        src_path = tmp_path / "source.ply"
        tgt_path = tmp_path / "target.ply"
        pairs_path = tmp_path / "pairs.txt"
        vf.write_cloud(source, src_path)
        vf.write_cloud(target, tgt_path)
        vf.write_pairs(vf.CorrespondenceSet(src, tgt), pairs_path)
        cli_out = tmp_path / "cli.json"
        assert run(["register", "--source", str(src_path),
                    "--target", str(tgt_path), "--pairs", str(pairs_path),
                    "--mode", "similarity", "--out", str(cli_out)]) == 0
        assert exported.read_bytes() == cli_out.read_bytes()

    def test_export_requires_estimate(self, client, tmp_path):
        resp = client.post(
            "/api/export", json={"path": str(tmp_path / "t.json")})
        assert resp.status_code == 409


def test_lod_cloud_deterministic_and_bounded(rng):
    cloud = vf.PointCloud(rng.uniform(-50, 50, (5000, 3)))
    a = lod_cloud(cloud, 300)
    b = lod_cloud(cloud, 300)
    assert len(a) <= 300
    assert np.array_equal(a.points, b.points)
    assert len(lod_cloud(cloud, 10_000)) == 5000
