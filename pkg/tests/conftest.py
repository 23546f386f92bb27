import numpy as np
import pytest

import voxfuse as vf


@pytest.fixture(scope="session")
def default_scene():
    return vf.build_scene(vf.default_scene_spec())


@pytest.fixture(scope="session")
def default_uav(default_scene):
    return vf.sample_uav(default_scene, vf.default_uav_params())


@pytest.fixture(scope="session")
def default_mms(default_scene):
    return vf.sample_mms(default_scene, vf.default_mms_params())


@pytest.fixture(scope="session")
def default_truth(default_scene):
    return vf.truth_cloud(default_scene)


@pytest.fixture
def rng():
    return np.random.default_rng(411)


def random_rotation(rng):
    """Uniform-ish random rotation via QR of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_similarity(rng, max_translation=100.0, scale_range=(0.5, 2.0)):
    s = rng.uniform(*scale_range)
    t = rng.uniform(-max_translation, max_translation, 3)
    return vf.make_transform(random_rotation(rng), t, s)


def rotation_angle_deg(r_a, r_b):
    """Geodesic angle between two rotations, degrees."""
    cos = (np.trace(r_a.T @ r_b) - 1.0) / 2.0
    return float(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))))
