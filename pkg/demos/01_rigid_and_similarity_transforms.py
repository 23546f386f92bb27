"""Build, compose, decompose, and invert rigid/similarity transforms.

Walks through the geometry kernel: per-axis rotations, the z*y*x Euler
composition, homogeneous 4x4 assembly, and the round trip back to
(scale, rotation, translation, angles).
"""

import math

import numpy as np

import voxfuse as vf

np.set_printoptions(precision=4, suppress=True)

# Per-axis rotations: a quarter turn about Z sends +X to +Y.
rz = vf.axis_rotation("z", math.pi / 2)
print("Rz(90deg) @ (1,0,0) =", rz @ [1, 0, 0])

# Euler composition is Rz(beta) Ry(alpha) Rx(theta).
angles = vf.EulerAngles(theta=0.1, alpha=0.2, beta=0.3)
r = vf.euler_to_rotation(angles)
print("\ncomposed rotation:\n", r)

# Assemble a similarity transform: scale 0.95, the rotation above, and a
# translation applied after the scaled rotation.
t = vf.make_transform(r, t=(3.0, -2.0, 0.5), s=0.95)
print("\nhomogeneous matrix (mode=%s):\n%s" % (t.mode, t.m))

# Decompose recovers every factor, including the Euler angles.
dec = vf.decompose_transform(t)
print("\nrecovered scale      :", dec.scale)
print("recovered translation:", dec.translation)
print("recovered angles     : theta=%.4f alpha=%.4f beta=%.4f"
      % dec.angles)

# Applying the inverse undoes the transform.
cloud = vf.PointCloud(np.random.default_rng(0).uniform(-10, 10, (5, 3)))
roundtrip = vf.apply_transform(vf.invert_transform(t),
                               vf.apply_transform(t, cloud))
print("\nround-trip max error :", np.abs(roundtrip.points - cloud.points).max())

# Rigid transforms preserve distances; similarities scale them uniformly.
p, q = cloud.points[0], cloud.points[1]
d0 = np.linalg.norm(p - q)
d1 = np.linalg.norm(vf.apply_transform(t, p) - vf.apply_transform(t, q))
print("distance ratio       : %.6f (scale %.6f)" % (d1 / d0, dec.scale))
