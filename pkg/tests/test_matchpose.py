"""
Tests for descriptor matching and RANSAC pose estimation.
"""

import math

import numpy as np
import pytest

from src.describe import Descriptor
from src.detect import Keypoint
from src.errors import ConfigError, DegenerateGeometryError
from src.matchpose import (
    Match,
    Pose2D,
    RansacConfig,
    apply_pose,
    descriptor_distance,
    distance_matrix,
    estimate_euclidean_lsq,
    match_ratio_test,
    ransac_pose,
)


def bits_descriptor(ones: list[int]) -> Descriptor:
    bits = np.zeros(256, dtype=bool)
    bits[ones] = True
    return Descriptor.from_bits(bits)


def real_descriptor(values) -> Descriptor:
    return Descriptor("real", np.asarray(values, dtype=np.float32))


def correspondences(rng, pose: Pose2D, n_inliers: int, n_outliers: int):
    """Test keypoints, reference keypoints and identity matches with some outliers."""
    src = rng.uniform(0, 400, size=(n_inliers + n_outliers, 2))
    dst = pose.apply(src)
    dst[n_inliers:] = rng.uniform(0, 400, size=(n_outliers, 2))
    test_kps = [Keypoint(float(x), float(y), 7.0) for x, y in src]
    ref_kps = [Keypoint(float(x), float(y), 7.0) for x, y in dst]
    matches = [Match(i, i, 0.0, 0.0) for i in range(len(src))]
    return test_kps, ref_kps, matches


class TestPose2D:
    """Test the planar pose type."""

    def test_quarter_turn(self):
        pose = Pose2D(angle=90.0, tx=1.0, ty=2.0)
        assert np.allclose(apply_pose(pose, [1.0, 0.0]), [1.0, 3.0])

    def test_inverse_composes_to_identity(self):
        pose = Pose2D(angle=-37.0, tx=12.0, ty=-4.0, scale=0.95)
        pts = np.array([[0.0, 0.0], [10.0, 5.0], [-3.0, 8.0]])
        assert np.allclose(pose.inverse().apply(pose.apply(pts)), pts)

    def test_scale_must_be_positive(self):
        with pytest.raises(ValueError):
            Pose2D(scale=0.0)


class TestLeastSquares:
    """Test the closed-form similarity fit."""

    @pytest.mark.parametrize("with_scale", [True, False])
    def test_exact_recovery(self, rng, with_scale):
        truth = Pose2D(angle=25.0, tx=3.0, ty=-4.0, scale=1.05 if with_scale else 1.0)
        src = rng.uniform(-50, 50, size=(10, 2))
        pairs = np.stack([src, truth.apply(src)], axis=1)
        est = estimate_euclidean_lsq(pairs, with_scale)
        assert est.angle == pytest.approx(truth.angle)
        assert est.scale == pytest.approx(truth.scale)
        assert (est.tx, est.ty) == (pytest.approx(3.0), pytest.approx(-4.0))

    def test_single_pair_is_degenerate(self):
        with pytest.raises(DegenerateGeometryError):
            estimate_euclidean_lsq([[[0.0, 0.0], [1.0, 1.0]]])

    def test_coincident_points_are_degenerate(self):
        with pytest.raises(DegenerateGeometryError):
            estimate_euclidean_lsq([[[2.0, 2.0], [0.0, 0.0]], [[2.0, 2.0], [5.0, 5.0]]])


class TestDistances:
    """Test descriptor distances."""

    def test_hamming(self):
        assert descriptor_distance(bits_descriptor([0, 3, 9]), bits_descriptor([0, 4, 200, 255])) == 5.0

    def test_euclidean(self):
        assert descriptor_distance(real_descriptor([0, 3]), real_descriptor([4, 0])) == pytest.approx(5.0)

    def test_kind_mismatch(self):
        with pytest.raises(ValueError):
            descriptor_distance(bits_descriptor([1]), real_descriptor([1.0]))

    def test_matrix_matches_pairwise(self, rng):
        descs = [Descriptor.from_bits(rng.integers(0, 2, 256).astype(bool)) for _ in range(6)]
        table = distance_matrix(np.stack([d.data for d in descs[:3]]), np.stack([d.data for d in descs[3:]]), "binary")
        for i in range(3):
            for j in range(3):
                assert table[i, j] == descriptor_distance(descs[i], descs[3 + j])


class TestRatioTest:
    """Test nearest-neighbour matching with the ratio test."""

    def test_distinctive_match_accepted(self):
        ref = [real_descriptor([0.0, 0.0]), real_descriptor([10.0, 0.0]), real_descriptor([0.0, 10.0])]
        test = [real_descriptor([9.0, 0.0])]
        [m] = match_ratio_test(test, ref, 0.7)
        assert (m.test_index, m.ref_index) == (0, 1)
        assert m.distance == pytest.approx(1.0)
        assert m.ratio == pytest.approx(1.0 / 9.0)

    def test_ambiguous_match_rejected(self):
        ref = [real_descriptor([1.0, 0.0]), real_descriptor([-1.0, 0.0])]
        assert match_ratio_test([real_descriptor([0.0, 0.0])], ref) == []

    def test_duplicate_references_rejected(self):
        ref = [bits_descriptor([5]), bits_descriptor([5])]
        assert match_ratio_test([bits_descriptor([5])], ref) == []

    def test_needs_two_references(self):
        assert match_ratio_test([bits_descriptor([1])], [bits_descriptor([1])]) == []

    def test_mixed_kinds(self):
        with pytest.raises(ValueError):
            match_ratio_test([bits_descriptor([1])], [real_descriptor([1.0]), real_descriptor([2.0])])


class TestRansac:
    """Test robust pose estimation."""

    def test_recovers_pose_despite_outliers(self, rng):
        truth = Pose2D(angle=12.0, tx=5.0, ty=-3.0)
        test_kps, ref_kps, matches = correspondences(rng, truth, 60, 20)
        result = ransac_pose(matches, test_kps, ref_kps, RansacConfig(iterations=500, with_scale=False))
        assert result is not None
        assert result.pose.angle == pytest.approx(12.0, abs=1e-6)
        assert result.pose.tx == pytest.approx(5.0, abs=1e-6)
        assert 60 <= len(result.inliers) <= 62
        assert all(m.test_index < 60 for m in result.inliers[:60])

    def test_similarity_with_scale(self, rng):
        truth = Pose2D(angle=-30.0, tx=40.0, ty=10.0, scale=1.04)
        test_kps, ref_kps, matches = correspondences(rng, truth, 40, 10)
        result = ransac_pose(matches, test_kps, ref_kps, RansacConfig(iterations=400))
        assert result.pose.scale == pytest.approx(1.04, abs=1e-6)
        assert result.pose.angle == pytest.approx(-30.0, abs=1e-6)

    def test_scale_outside_bounds_rejected(self, rng):
        truth = Pose2D(angle=5.0, scale=1.5)
        test_kps, ref_kps, matches = correspondences(rng, truth, 30, 0)
        assert ransac_pose(matches, test_kps, ref_kps, RansacConfig(iterations=200)) is None

    def test_deterministic_for_seed(self, rng):
        truth = Pose2D(angle=70.0, tx=-8.0, ty=2.0)
        test_kps, ref_kps, matches = correspondences(rng, truth, 20, 30)
        cfg = RansacConfig(iterations=300, seed=9)
        a = ransac_pose(matches, test_kps, ref_kps, cfg)
        b = ransac_pose(matches, test_kps, ref_kps, cfg)
        assert a == b

    def test_too_few_matches(self, rng):
        test_kps, ref_kps, matches = correspondences(rng, Pose2D(), 4, 0)
        assert ransac_pose(matches, test_kps, ref_kps, RansacConfig()) is None
        assert ransac_pose(matches[:1], test_kps, ref_kps, RansacConfig()) is None

    def test_invalid_config(self):
        with pytest.raises(ConfigError):
            RansacConfig(iterations=0)
        with pytest.raises(ConfigError):
            RansacConfig(scale_bounds=(1.1, 1.2))


def random_descriptor(rng, kind: str) -> Descriptor:
    # Small integers make exact distance ties common.
    if kind == "binary":
        return Descriptor.from_bits(rng.integers(0, 2, 256).astype(bool))
    return real_descriptor(rng.integers(0, 6, 4))


def two_smallest_oracle(test, ref, ratio):
    """Exhaustive nearest and second-nearest search, one test descriptor at a time."""
    out = []
    for i, t in enumerate(test):
        dists = [descriptor_distance(t, r) for r in ref]
        order = sorted(range(len(ref)), key=lambda j: (dists[j], j))
        best, second = dists[order[0]], dists[order[1]]
        if second > 0 and best / second < ratio:
            out.append((i, order[0], best))
    return out


class TestMatcherOracle:
    """Compare the vectorised matcher with an exhaustive search."""

    @pytest.mark.parametrize("kind", ["binary", "real"])
    def test_agrees_with_exhaustive_search(self, rng, kind):
        for _ in range(200):
            n_test, n_ref = rng.integers(1, 8), rng.integers(2, 10)
            test = [random_descriptor(rng, kind) for _ in range(n_test)]
            ref = [random_descriptor(rng, kind) for _ in range(n_ref)]
            got = [(m.test_index, m.ref_index, m.distance) for m in match_ratio_test(test, ref, 0.7)]
            assert got == [(i, j, pytest.approx(d)) for i, j, d in two_smallest_oracle(test, ref, 0.7)]


class TestPlantedPoses:
    """Closed-form and robust recovery of planted poses."""

    def test_hundred_noiseless_poses(self, rng):
        for k in range(100):
            with_scale = k % 2 == 1
            truth = Pose2D(
                angle=float(rng.uniform(-179, 179)),
                tx=float(rng.uniform(-200, 200)),
                ty=float(rng.uniform(-200, 200)),
                scale=float(rng.uniform(0.8, 1.25)) if with_scale else 1.0,
            )
            src = rng.uniform(0, 500, size=(20, 2))
            dst = truth.apply(src)
            est = estimate_euclidean_lsq(np.stack([src, dst], axis=1), with_scale)
            assert est.angle == pytest.approx(truth.angle, abs=1e-7)
            assert est.tx == pytest.approx(truth.tx, abs=1e-7)
            assert est.ty == pytest.approx(truth.ty, abs=1e-7)
            assert est.scale == pytest.approx(truth.scale, abs=1e-7)
            assert np.mean((est.apply(src) - dst) ** 2) < 1e-12

    def test_seventy_thirty_over_fifty_seeds(self):
        recovered = 0
        for seed in range(50):
            rng = np.random.default_rng(seed)
            truth = Pose2D(angle=float(rng.uniform(-180, 180)), tx=float(rng.uniform(-50, 50)),
                           ty=float(rng.uniform(-50, 50)))
            test_kps, ref_kps, matches = correspondences(rng, truth, 70, 30)
            cfg = RansacConfig(seed=seed)
            result = ransac_pose(matches, test_kps, ref_kps, cfg)
            assert result == ransac_pose(matches, test_kps, ref_kps, cfg)
            if result is None:
                continue
            angle_err = abs((result.pose.angle - truth.angle + 180.0) % 360.0 - 180.0)
            shift_err = math.hypot(result.pose.tx - truth.tx, result.pose.ty - truth.ty)
            recovered += angle_err <= 0.05 and shift_err <= 0.2
        assert recovered >= 49
