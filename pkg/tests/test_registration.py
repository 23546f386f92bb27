import math

import numpy as np
import pytest

import voxfuse as vf
from voxfuse.errors import (
    DegenerateConfiguration,
    InsufficientCorrespondences,
    InvalidArgument,
    NoOverlap,
)

from conftest import random_rotation, random_similarity, rotation_angle_deg

# Envelope of the 20 fixed-seed noisy-estimation runs, frozen from the
# Monte-Carlo residual oracle (min 0.2583, max 0.6197).
NOISE_RMSE_BRACKET = (0.2582, 0.6198)


def make_pairs(rng, transform, n, noise=0.0, extent=20.0):
    src = rng.uniform(-extent, extent, (n, 3))
    tgt = vf.apply_transform(transform, src)
    if noise:
        tgt = tgt + rng.normal(0.0, noise, tgt.shape)
    return vf.CorrespondenceSet(src, tgt)


class TestEstimate:
    def test_exact_three_point_recovery(self, rng):
        truth = vf.make_transform(
            vf.euler_to_rotation((0.2, -0.4, 1.1)), (3, -7, 2))
        pairs = make_pairs(rng, truth, 3)
        result = vf.estimate_transform(pairs, mode="rigid")
        assert np.abs(result.transform.m - truth.m).max() < 1e-9
        assert result.rmse < 1e-9

    def test_noisy_seven_pairs_match_residual_oracle(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            src = rng.uniform(-20, 20, (7, 3))
            truth = vf.make_transform(
                vf.euler_to_rotation((0.05, -0.1, 0.3)), (4.0, -2.0, 1.0), 0.95)
            tgt = vf.apply_transform(truth, src) + rng.normal(0, 0.35, (7, 3))
            pairs = vf.CorrespondenceSet(src, tgt)
            result = vf.estimate_transform(pairs, mode="similarity")
            m = result.transform.m
            res = [math.dist((m[:3, :3] @ q + m[:3, 3]).tolist(), p.tolist())
                   for q, p in zip(src, tgt)]
            oracle = math.sqrt(sum(x * x for x in res) / len(res))
            assert math.isclose(result.rmse, oracle, rel_tol=1e-12)
            # identity between the reported rmse and reported residuals is
            # bit-exact (same summation order below numpy's pairwise cutoff)
            ident = math.sqrt(
                sum(x * x for x in result.residuals.tolist()) / len(result.residuals))
            assert ident == result.rmse
            assert NOISE_RMSE_BRACKET[0] < result.rmse < NOISE_RMSE_BRACKET[1]
            assert np.linalg.det(result.transform.m[:3, :3]) > 0

    def test_collinear_sources_rejected(self):
        src = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]], float)
        pairs = vf.CorrespondenceSet(src, src + 1.0)
        with pytest.raises(DegenerateConfiguration):
            vf.estimate_transform(pairs)

    def test_too_few_pairs_rejected(self):
        pairs = vf.CorrespondenceSet(np.zeros((2, 3)), np.zeros((2, 3)))
        with pytest.raises(InsufficientCorrespondences):
            vf.estimate_transform(pairs)

    def test_exact_recovery_property(self, rng):
        for _ in range(50):
            truth = random_similarity(rng)
            n = int(rng.integers(3, 51))
            pairs = make_pairs(rng, truth, n)
            result = vf.estimate_transform(pairs, mode="similarity")
            assert np.abs(result.transform.m - truth.m).max() < 1e-9
            assert result.rmse < 1e-9

    def test_equivariance(self, rng):
        truth = random_similarity(rng, max_translation=10.0)
        pairs = make_pairs(rng, truth, 12, noise=0.2)
        base = vf.estimate_transform(pairs, mode="similarity").transform
        for _ in range(20):
            g = vf.make_transform(random_rotation(rng), rng.uniform(-10, 10, 3))
            moved = vf.CorrespondenceSet(
                vf.apply_transform(g, pairs.source),
                vf.apply_transform(g, pairs.target))
            est = vf.estimate_transform(moved, mode="similarity").transform
            expect = g.m @ base.m @ vf.invert_transform(g).m
            assert np.abs(est.m - expect).max() < 1e-9

    def test_no_reflection_on_mirror_symmetric_input(self):
        # a planar square maps onto its mirror image; the estimator must
        # still return a proper rotation
        src = np.array([[1, 1, 0], [-1, 1, 0], [-1, -1, 0], [1, -1, 0]], float)
        tgt = src * np.array([-1.0, 1.0, 1.0])
        result = vf.estimate_transform(vf.CorrespondenceSet(src, tgt), mode="rigid")
        assert np.linalg.det(result.transform.m[:3, :3]) == pytest.approx(1.0, abs=1e-9)

    def test_optimality_against_random_perturbations(self, rng):
        truth = random_similarity(rng, max_translation=5.0, scale_range=(0.9, 1.1))
        pairs = make_pairs(rng, truth, 15, noise=0.3)
        result = vf.estimate_transform(pairs, mode="similarity")
        dec = vf.decompose_transform(result.transform)
        for _ in range(1000):
            d_angles = np.radians(rng.uniform(-5, 5, 3))
            jitter = vf.make_transform(
                vf.euler_to_rotation(
                    (dec.angles.theta + d_angles[0],
                     dec.angles.alpha + d_angles[1],
                     dec.angles.beta + d_angles[2])),
                dec.translation + rng.uniform(-0.5, 0.5, 3),
                dec.scale * rng.uniform(0.95, 1.05))
            assert vf.rmse(pairs, jitter) >= result.rmse - 1e-12


class TestRmseResiduals:
    def test_exact_match_is_zero(self, rng):
        truth = random_similarity(rng)
        pairs = make_pairs(rng, truth, 10)
        assert vf.rmse(pairs, truth) < 1e-12

    def test_single_pair_pythagorean(self):
        pairs = vf.CorrespondenceSet(
            np.array([[0.0, 0, 0]]), np.array([[3.0, 4.0, 0.0]]))
        assert vf.rmse(pairs, vf.Transform.identity()) == pytest.approx(5.0)
        assert vf.residuals(pairs, vf.Transform.identity())[0] == pytest.approx(5.0)

    def test_two_pair_mean(self):
        pairs = vf.CorrespondenceSet(
            np.array([[0.0, 0, 0], [10, 0, 0]]),
            np.array([[1.0, 0, 0], [17.0, 0, 0]]))
        # residual norms 1 and 7 -> sqrt((1 + 49) / 2) = 5
        assert vf.rmse(pairs, vf.Transform.identity()) == pytest.approx(5.0)

    def test_residual_order_and_offsets(self):
        src = np.zeros((3, 3))
        tgt = np.zeros((3, 3))
        tgt[1, 2] = 2.0
        res = vf.residuals(
            vf.CorrespondenceSet(src, tgt), vf.Transform.identity())
        assert np.allclose(res, [0.0, 2.0, 0.0])

    def test_consistency_identity(self, rng):
        truth = random_similarity(rng)
        pairs = make_pairs(rng, truth, 25, noise=0.5)
        res = vf.residuals(pairs, truth)
        assert vf.rmse(pairs, truth) == pytest.approx(
            float(np.sqrt(np.mean(res ** 2))), rel=1e-15)

    def test_order_independent(self, rng):
        truth = random_similarity(rng)
        pairs = make_pairs(rng, truth, 20, noise=0.4)
        perm = rng.permutation(20)
        shuffled = vf.CorrespondenceSet(pairs.source[perm], pairs.target[perm])
        assert vf.rmse(shuffled, truth) == pytest.approx(
            vf.rmse(pairs, truth), rel=1e-14)

    def test_empty_rejected(self):
        pairs = vf.CorrespondenceSet(np.zeros((0, 3)), np.zeros((0, 3)))
        with pytest.raises(InvalidArgument):
            vf.rmse(pairs, vf.Transform.identity())


class TestIcp:
    def test_identical_clouds_converge_immediately(self, rng):
        pts = rng.uniform(-5, 5, (400, 3))
        transform, history = vf.refine_icp(
            pts, pts, vf.Transform.identity(), vf.IcpParams())
        assert 1 <= len(history) <= 2
        assert history[-1] < 1e-12
        assert np.abs(transform.m - np.eye(4)).max() < 1e-9

    def test_recovers_known_offset(self, rng):
        # offset small relative to the sample spacing, so plain
        # nearest-neighbor ICP has no wrong-lattice local minimum here
        spec = vf.SceneSpec(
            ground_x=(-8, 8), ground_y=(-8, 8),
            boxes=[[[-2, -2, 0], [2, 2, 6]]], spacing=0.5)
        scene = vf.build_scene(spec)
        cloud = scene.positions
        offset = vf.make_transform(
            vf.axis_rotation("z", math.radians(2.0)), (0.2, -0.15, 0.0))
        moved = vf.apply_transform(offset, cloud)
        est, history = vf.refine_icp(
            moved, cloud, vf.Transform.identity(), vf.IcpParams(mode="rigid"))
        truth = vf.invert_transform(offset)
        assert np.abs(est.m[:3, 3] - truth.m[:3, 3]).max() < 1e-3
        assert rotation_angle_deg(est.m[:3, :3], truth.m[:3, :3]) < 0.05
        assert all(b <= a for a, b in zip(history, history[1:]))

    def test_disjoint_clouds_raise_no_overlap(self, rng):
        a = rng.uniform(0, 1, (50, 3))
        b = a + 100.0
        with pytest.raises(NoOverlap) as err:
            vf.refine_icp(a, b, vf.Transform.identity(),
                          vf.IcpParams(max_pair_distance=1.0))
        assert err.value.iteration == 1

    def test_param_validation(self):
        with pytest.raises(InvalidArgument):
            vf.IcpParams(max_iterations=0)
        with pytest.raises(InvalidArgument):
            vf.IcpParams(convergence_delta=0.0)
        with pytest.raises(InvalidArgument):
            vf.IcpParams(mode="affine")
