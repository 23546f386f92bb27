"""Align a misregistered aerial cloud to the scene frame from seven
hand-picked keypoint pairs.

The aerial cloud is deliberately offset by a similarity (scale 0.95, 2
degrees about Z, a few meters of translation). Seven correspondences are
enough for the closed-form estimator to recover the inverse to machine
precision when the picks are exact; the per-pair residuals show which pick
would be worth redoing when they are not.
"""

import pathlib

import numpy as np

import voxfuse as vf

out = pathlib.Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

scene = vf.build_scene(vf.default_scene_spec())
misreg = vf.default_misregistration()
skewed = vf.sample_uav(
    scene, vf.default_uav_params(misregistration=misreg))
reference = vf.sample_mms(scene, vf.default_mms_params())
truth = vf.invert_transform(misreg)

# Pick seven well-spread keypoints. Here we cheat and use ground truth to
# produce the matching reference coordinates; with real data a human picks
# them in the viewer (see demo 07).
pick = np.linspace(0, len(skewed) - 1, 7).astype(int)
source_pts = skewed.points[pick]
target_pts = vf.apply_transform(truth, source_pts)
pairs = vf.CorrespondenceSet(source_pts, target_pts)
vf.write_pairs(pairs, out / "keypoints.txt")

result = vf.estimate_transform(pairs, mode="similarity")
print("estimated matrix:\n", np.round(result.transform.m, 6))
print("\nrmse: %.3e m" % result.rmse)
print("per-pair residuals:", np.round(result.residuals, 9))

dec = vf.decompose_transform(result.transform)
print("\nrecovered scale %.6f (truth %.6f)"
      % (dec.scale, vf.decompose_transform(truth).scale))
print("matrix error vs ground truth: %.2e"
      % np.abs(result.transform.m - truth.m).max())

vf.write_transform(result.transform, out / "alignment.json", rmse=result.rmse)
print(f"\nwrote {out}/alignment.json and keypoints.txt")

# Noisy picks: repeat with 0.35 m of per-axis jitter on the picks.
rng = np.random.default_rng(1)
noisy = vf.CorrespondenceSet(source_pts, target_pts + rng.normal(0, 0.35, (7, 3)))
noisy_result = vf.estimate_transform(noisy, mode="similarity")
print("\nwith 0.35 m pick noise: rmse %.4f m, worst pair #%d (%.4f m)"
      % (noisy_result.rmse, int(np.argmax(noisy_result.residuals)),
         noisy_result.residuals.max()))
