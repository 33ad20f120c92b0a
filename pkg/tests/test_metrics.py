"""
Tests for evaluation measures.
"""

import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from src.detect import Keypoint
from src.errors import ConfigError
from src.matchpose import Match, Pose2D
from src.metrics import (
    MetricsConfig,
    circle_iou,
    keypoint_iou,
    match_correctness,
    pose_success,
    repeatability_and_ambiguity,
    success_rate,
    wrap_angle,
)
from src.synth import GroundTruth2D, RegionMask


def grid_keypoints(step: float = 20.0, size: float = 10.0) -> list[Keypoint]:
    return [Keypoint(x, y, size) for y in np.arange(10.0, 100.0, step) for x in np.arange(10.0, 100.0, step)]


class TestCircleIou:
    """Test disc overlap."""

    def test_identical_discs(self):
        assert circle_iou(0.0, 3.0, 3.0) == pytest.approx(1.0)

    def test_offset_by_one_radius(self):
        assert circle_iou(1.0, 1.0, 1.0) == pytest.approx(0.2430, abs=1e-4)

    def test_disjoint(self):
        assert circle_iou(2.0, 1.0, 1.0) == 0.0

    def test_contained(self):
        assert circle_iou(0.5, 1.0, 2.0) == pytest.approx(0.25)

    def test_broadcasting(self):
        out = circle_iou(np.array([0.0, 1.0, 5.0]), 1.0, 1.0)
        assert out.shape == (3,)
        assert out[2] == 0.0

    def test_keypoint_iou_uses_ground_truth(self):
        gt = GroundTruth2D(tx=4.0, ty=0.0)
        ref = Keypoint(10.0, 10.0, 8.0)
        assert keypoint_iou(Keypoint(14.0, 10.0, 8.0), ref, gt) == pytest.approx(1.0)
        assert keypoint_iou(Keypoint(10.0, 10.0, 8.0), ref, gt) == pytest.approx(0.2430, abs=1e-4)


class TestRepeatability:
    """Test repeatability and ambiguity."""

    def test_identical_detections(self):
        kps = grid_keypoints()
        full = RegionMask.full(100, 100)
        score = repeatability_and_ambiguity(kps, kps, GroundTruth2D.identity(100, 100), full, full, MetricsConfig())
        assert score.repeatability == 1.0
        assert score.ambiguity == 1.0
        assert score.below_n
        assert score.n_considered == len(kps)

    def test_translation_ground_truth(self):
        ref = grid_keypoints()
        test = [Keypoint(kp.x + 7.0, kp.y + 7.0, kp.size) for kp in ref]
        gt = GroundTruth2D(tx=7.0, ty=7.0, cx=49.5, cy=49.5)
        full = RegionMask.full(100, 100)
        score = repeatability_and_ambiguity(ref, test, gt, full, full, MetricsConfig())
        assert score.repeatability == 1.0

    def test_rotation_ground_truth(self):
        ref = grid_keypoints()
        gt = GroundTruth2D(angle=30.0, cx=49.5, cy=49.5)
        moved = gt.apply(np.array([kp.pt for kp in ref]))
        test = [Keypoint(float(x), float(y), 10.0) for x, y in moved]
        full = RegionMask.full(100, 100)
        score = repeatability_and_ambiguity(ref, test, gt, full, full, MetricsConfig())
        assert score.repeatability == pytest.approx(1.0)

    def test_no_overlap_counts_zero(self):
        ref = grid_keypoints()
        test = [Keypoint(kp.x + 10.0, kp.y, kp.size) for kp in ref]
        full = RegionMask.full(100, 100)
        score = repeatability_and_ambiguity(ref, test, GroundTruth2D(), full, full, MetricsConfig())
        assert score.repeatability == 0.0
        assert score.ambiguity is None

    def test_ambiguity_counts_every_overlap(self):
        ref = [Keypoint(20.0, 20.0, 10.0), Keypoint(21.0, 20.0, 10.0)]
        test = [Keypoint(20.5, 20.0, 10.0)]
        full = RegionMask.full(50, 50)
        score = repeatability_and_ambiguity(ref, test, GroundTruth2D(), full, full, MetricsConfig())
        assert score.repeatability == 1.0
        assert score.ambiguity == 2.0

    def test_only_keypoints_in_both_masks_count(self):
        ref = grid_keypoints()
        test = [Keypoint(10.0, 10.0, 10.0), Keypoint(90.0, 90.0, 10.0)]
        ref_mask = RegionMask(0, 0, 50, 50)
        test_mask = RegionMask(0, 0, 100, 100)
        score = repeatability_and_ambiguity(ref, test, GroundTruth2D(), ref_mask, test_mask, MetricsConfig())
        assert score.n_considered == 1
        assert score.repeatability == 1.0

    def test_disjoint_masks_are_undefined(self):
        kps = grid_keypoints()
        score = repeatability_and_ambiguity(
            kps, kps, GroundTruth2D(), RegionMask(0, 0, 40, 40), RegionMask(50, 50, 100, 100), MetricsConfig()
        )
        assert score.repeatability is None

    def test_no_test_keypoints(self):
        full = RegionMask.full(100, 100)
        score = repeatability_and_ambiguity(grid_keypoints(), [], GroundTruth2D(), full, full, MetricsConfig())
        assert score.repeatability is None
        assert score.below_n and score.n_test_kps == 0


class TestMatchCorrectness:
    """Test match correctness and precision."""

    def test_precision(self):
        ref = [Keypoint(10.0, 10.0, 8.0), Keypoint(40.0, 40.0, 8.0)]
        test = [Keypoint(12.0, 10.0, 8.0), Keypoint(42.0, 40.0, 8.0)]
        gt = GroundTruth2D(tx=2.0)
        matches = [Match(0, 0, 1.0, 0.1), Match(1, 0, 1.0, 0.1)]
        score = match_correctness(matches, test, ref, gt, MetricsConfig())
        assert score.n_correct == 1
        assert score.precision == 0.5

    def test_no_matches(self):
        score = match_correctness([], [], [], GroundTruth2D(), MetricsConfig())
        assert score.n_correct == 0 and score.precision is None


class TestPoseSuccess:
    """Test pose success and success rate."""

    def test_exact_estimate_succeeds(self):
        gt = GroundTruth2D(angle=30.0, tx=5.0, ty=-2.0, cx=255.5, cy=255.5)
        assert pose_success(gt.to_pose().inverse(), gt, MetricsConfig())

    def test_angle_error_fails(self):
        gt = GroundTruth2D(angle=30.0, cx=255.5, cy=255.5)
        truth = gt.to_pose().inverse()
        off = Pose2D(angle=truth.angle + 2.0, tx=truth.tx, ty=truth.ty)
        assert not pose_success(off, gt, MetricsConfig())

    def test_position_error_fails(self):
        gt = GroundTruth2D(cx=255.5, cy=255.5)
        assert pose_success(Pose2D(tx=29.0), gt, MetricsConfig())
        assert not pose_success(Pose2D(tx=31.0), gt, MetricsConfig())

    def test_missing_estimate_fails(self):
        assert not pose_success(None, GroundTruth2D(), MetricsConfig())

    def test_angle_wraps(self):
        gt = GroundTruth2D(angle=179.5, cx=100.0, cy=100.0)
        truth = gt.to_pose().inverse()
        est = Pose2D(angle=truth.angle + 359.5, tx=truth.tx, ty=truth.ty)
        assert pose_success(est, gt, MetricsConfig(pos_threshold=50.0))
        assert wrap_angle(190.0) == pytest.approx(-170.0)
        assert wrap_angle(-180.0) == -180.0

    def test_success_rate(self):
        assert success_rate([True, False, True, True]) == 0.75
        with pytest.raises(ValueError):
            success_rate([])

    def test_invalid_config(self):
        with pytest.raises(ConfigError):
            MetricsConfig(iou_threshold=0.0)

    def test_default_thresholds(self):
        cfg = MetricsConfig()
        assert (cfg.pos_threshold, cfg.ang_threshold, cfg.iou_threshold) == (30.0, 1.5, 0.5)
        assert cfg.pos_threshold / cfg.px_per_mm == pytest.approx(4.8)
        assert cfg.n_min_keypoints == 100


def random_instance(rng, n_ref: int, n_test: int):
    """Keypoints, a similarity ground truth and masks on a 100x100 frame."""
    gt = GroundTruth2D(
        angle=float(rng.uniform(-40, 40)), tx=float(rng.uniform(-10, 10)), ty=float(rng.uniform(-10, 10)),
        scale=float(rng.uniform(0.9, 1.1)), cx=49.5, cy=49.5,
    )
    ref = [Keypoint(*rng.uniform(0, 100, 2), float(rng.uniform(4, 16))) for _ in range(n_ref)]
    # Most test keypoints sit near a mapped reference keypoint.
    test = []
    for kp in ref[:n_test]:
        x, y = gt.apply([kp.x, kp.y]) + rng.normal(0, 2.0, 2)
        test.append(Keypoint(float(x), float(y), kp.size * gt.scale * float(rng.uniform(0.8, 1.25))))
    x0, y0 = rng.integers(0, 30, 2)
    ref_mask = RegionMask(int(x0), int(y0), int(x0) + 70, int(y0) + 70)
    test_mask = RegionMask(10, 10, 95, 95)
    return ref, test, gt, ref_mask, test_mask


def iou_by_loops(test_kp: Keypoint, ref_kp: Keypoint, gt: GroundTruth2D) -> float:
    x, y = gt.apply_inverse([test_kp.x, test_kp.y])
    d = math.hypot(x - ref_kp.x, y - ref_kp.y)
    return float(circle_iou(d, test_kp.size / (2.0 * gt.scale), ref_kp.size / 2.0))


class TestBruteForceOracles:
    """Compare vectorised measures with direct per-keypoint loops."""

    def test_circle_iou_matches_numeric_area(self, rng):
        for _ in range(20):
            d, r1, r2 = rng.uniform(0, 12), rng.uniform(1, 8), rng.uniform(1, 8)
            xs = np.linspace(-r1, r1, 200001)
            h1 = np.sqrt(np.maximum(r1 * r1 - xs * xs, 0.0))
            h2 = np.sqrt(np.maximum(r2 * r2 - (xs - d) ** 2, 0.0))
            inter = trapezoid(2.0 * np.minimum(h1, h2), xs)
            expected = inter / (math.pi * (r1 * r1 + r2 * r2) - inter)
            assert float(circle_iou(d, r1, r2)) == pytest.approx(expected, abs=1e-5)

    def test_repeatability_and_ambiguity(self, rng):
        cfg = MetricsConfig()
        for _ in range(50):
            n_ref = int(rng.integers(1, 21))
            ref, test, gt, ref_mask, test_mask = random_instance(rng, n_ref, int(rng.integers(1, n_ref + 1)))
            region = ref_mask.intersect(test_mask)
            inside = [kp for kp in test if region.contains(*gt.apply_inverse([kp.x, kp.y]))]
            ref_in = [kp for kp in ref if region.contains(kp.x, kp.y)]
            counts = [sum(iou_by_loops(t, r, gt) > cfg.iou_threshold for r in ref_in) for t in inside]
            score = repeatability_and_ambiguity(ref, test, gt, ref_mask, test_mask, cfg)
            assert score.n_considered == len(inside)
            if not inside:
                assert score.repeatability is None
                continue
            matched = [c for c in counts if c > 0]
            assert score.repeatability == pytest.approx(len(matched) / len(inside))
            if matched:
                assert score.ambiguity == pytest.approx(sum(matched) / len(matched))
            else:
                assert score.ambiguity is None

    def test_match_correctness(self, rng):
        cfg = MetricsConfig()
        for _ in range(50):
            ref, test, gt, _, _ = random_instance(rng, 20, 20)
            matches = [Match(int(i), int(j), 0.0, 0.0) for i, j in rng.integers(0, 20, size=(15, 2))]
            matches += [Match(i, i, 0.0, 0.0) for i in range(5)]
            correct = sum(iou_by_loops(test[m.test_index], ref[m.ref_index], gt) > cfg.iou_threshold for m in matches)
            score = match_correctness(matches, test, ref, gt, cfg)
            assert score.n_correct == correct
            assert score.precision == pytest.approx(correct / len(matches))

    def test_pose_success(self, rng):
        cfg = MetricsConfig()
        for _ in range(200):
            gt = GroundTruth2D(angle=float(rng.uniform(-180, 180)), tx=float(rng.uniform(-50, 50)),
                               ty=float(rng.uniform(-50, 50)), cx=255.5, cy=255.5)
            est = Pose2D(angle=float(rng.uniform(-180, 180)), tx=float(rng.uniform(-400, 400)),
                         ty=float(rng.uniform(-400, 400)))
            if rng.random() < 0.5:
                # Perturb the true test-to-reference pose instead.
                truth = gt.to_pose().inverse()
                est = Pose2D(angle=truth.angle + float(rng.normal(0, 1.0)), tx=truth.tx + float(rng.normal(0, 15)),
                             ty=truth.ty + float(rng.normal(0, 15)))
            centre = np.array([gt.cx, gt.cy])
            miss = math.hypot(*(est.apply(centre) - gt.apply_inverse(centre)))
            turn = abs((est.angle - gt.angle + 180.0) % 360.0 - 180.0)
            assert pose_success(est, gt, cfg) == (miss < 30.0 and turn < 1.5)
