"""Parse a flight pose log and place the camera stations in the local frame.

The pose table is a plain CSV of id, latitude, longitude, altitude, yaw.
Anchoring an east-north-up frame at the first station turns the geodetic
rows into meter coordinates that live alongside the point clouds.
"""

import pathlib

import numpy as np

import voxfuse as vf
from voxfuse.geodesy import pose_positions

out = pathlib.Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

csv = out / "flight_poses.csv"
csv.write_text(
    "Id,Latitude (deg),Longitude (deg),Altitude (m),Yaw(deg)\n"
    "1,29.06586,106.1266,50.08,259.1\n"
    "2,29.06585,106.1265,49.99,249.5\n"
    "3,29.06582,106.1264,50.1,248.6\n"
    "4,29.0658,106.1264,49.96,248.6\n"
    "5,29.06578,106.1263,49.97,248.7\n"
    "6,29.06577,106.1262,50.01,248.5\n"
    "7,29.06576,106.1262,50.02,248.7\n"
    "8,29.06575,106.1261,49.95,248.8\n"
    "9,29.06572,106.126,49.96,249.4\n"
    "10,29.06569,106.126,49.94,249.7\n")

records = vf.read_pose_table(csv)
print(f"parsed {len(records)} pose records; first: {records[0]}")

origin = vf.GeoOrigin(records[0].latitude, records[0].longitude, 0.0)
positions = pose_positions(records, origin)

print(f"\nlocal frame anchored at station 1 "
      f"({origin.latitude:.5f} N, {origin.longitude:.4f} E):")
print("  id      east      north         up    yaw")
for rec, p in zip(records, positions):
    print(f"  {rec.id:2d} {p[0]:9.2f} {p[1]:10.2f} {p[2]:10.2f}  {rec.yaw:5.1f}")

steps = np.linalg.norm(np.diff(positions[:, :2], axis=0), axis=1)
print(f"\nstation spacing: {steps.min():.1f} to {steps.max():.1f} m "
      f"(mean {steps.mean():.1f} m); the strip flies roughly "
      f"{'west' if positions[-1, 0] < 0 else 'east'}ward")
