"""Start an interactive registration session on synthetic data.

Generates a misregistered aerial cloud plus a street-level reference cloud,
then launches the HTTP session backend. Open the printed URL: with the
browser viewer built (see frontend/README.md) you can orbit both clouds,
click matching keypoints, watch RMSE update per estimate, preview the
aligned overlay, and export the transform. Without the viewer bundle the
JSON API is still available under /api/.

Run:  python demos/07_viewer_session.py [port]
"""

import pathlib
import sys

import uvicorn

import voxfuse as vf
from voxfuse.service import create_app

port = int(sys.argv[1]) if len(sys.argv) > 1 else 8707
out = pathlib.Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

scene = vf.build_scene(vf.default_scene_spec())
source = vf.sample_uav(
    scene, vf.default_uav_params(misregistration=vf.default_misregistration()))
target = vf.sample_mms(scene, vf.default_mms_params())
vf.write_cloud(source, out / "session_source.ply")
vf.write_cloud(target, out / "session_target.ply")

print(f"source (aerial, misregistered): {len(source)} points")
print(f"target (street reference):      {len(target)} points")
print(f"\nsession backend on http://127.0.0.1:{port}")
print("  GET  /api/clouds/source?lod=100000   level-of-detail points")
print("  POST /api/pairs                      {source_point, target_point}")
print("  POST /api/estimate                   {mode: rigid|similarity}")
print("  GET  /api/preview?lod=100000         source under the last estimate")
print("  POST /api/export                     {path} -> transform document")
print("\nsame session via the CLI:")
print(f"  voxfuse serve --source {out}/session_source.ply "
      f"--target {out}/session_target.ply --port {port}")

app = create_app(source, target)
uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
