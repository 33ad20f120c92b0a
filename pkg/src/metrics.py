"""
Evaluation measures: keypoint IoU, repeatability and ambiguity, match
correctness, pose success and success rate.

Keypoint regions are discs of diameter `size`. Test keypoints are mapped
into the reference frame with the inverse ground truth before comparison.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from src.detect import Keypoint
from src.errors import ConfigError
from src.matchpose import Match, Pose2D
from src.synth import GroundTruth2D, RegionMask

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricsConfig:
    iou_threshold: float = 0.5
    n_min_keypoints: int = 100
    pos_threshold: float = 30.0
    ang_threshold: float = 1.5
    # Reporting only: 30 px correspond to 4.8 mm on the reference dataset.
    px_per_mm: float = 6.25

    def __post_init__(self):
        for name in ("iou_threshold", "n_min_keypoints", "pos_threshold", "ang_threshold", "px_per_mm"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"metrics parameter {name} must be positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class DetectionScore:
    """
    Attributes:
        repeatability: Share of considered test keypoints with a reference
            match, None when no test keypoint is considered.
        ambiguity: Mean match count over matched test keypoints, None when
            nothing matched.
        below_n: The test image produced fewer than n_min_keypoints.
        n_test_kps: Test keypoints in the full frame.
        n_ref_kps: Reference keypoints in the full frame.
        n_considered: Test keypoints inside the mask intersection.
    """

    repeatability: Optional[float]
    ambiguity: Optional[float]
    below_n: bool
    n_test_kps: int
    n_ref_kps: int
    n_considered: int = 0


class MatchScore(NamedTuple):
    n_correct: int
    precision: Optional[float]


def circle_iou(d, r1, r2) -> np.ndarray:
    """IoU of discs with radii r1, r2 whose centres lie d apart (broadcasting)."""
    d, r1, r2 = np.broadcast_arrays(
        np.asarray(d, dtype=np.float64), np.asarray(r1, dtype=np.float64), np.asarray(r2, dtype=np.float64)
    )
    inter = np.zeros(d.shape)
    contained = d <= np.abs(r1 - r2)
    inter[contained] = math.pi * np.minimum(r1, r2)[contained] ** 2
    partial = ~contained & (d < r1 + r2)
    if np.any(partial):
        dp, a, b = d[partial], r1[partial], r2[partial]
        alpha = np.arccos(np.clip((dp * dp + a * a - b * b) / (2 * dp * a), -1.0, 1.0))
        beta = np.arccos(np.clip((dp * dp + b * b - a * a) / (2 * dp * b), -1.0, 1.0))
        kite = np.sqrt(np.maximum((-dp + a + b) * (dp + a - b) * (dp - a + b) * (dp + a + b), 0.0))
        inter[partial] = a * a * alpha + b * b * beta - 0.5 * kite
    union = math.pi * (r1 * r1 + r2 * r2) - inter
    return np.clip(inter / union, 0.0, 1.0)


def _mapped_test(test_kps: Sequence[Keypoint], gt: GroundTruth2D) -> tuple[np.ndarray, np.ndarray]:
    """Test keypoint centres in the reference frame and their radii there."""
    if not test_kps:
        return np.zeros((0, 2)), np.zeros(0)
    pts = gt.apply_inverse(np.array([[kp.x, kp.y] for kp in test_kps]))
    radii = np.array([kp.size for kp in test_kps]) / (2.0 * gt.scale)
    return pts.reshape(-1, 2), radii


def _iou_matrix(test_pts, test_r, ref_kps: Sequence[Keypoint]) -> np.ndarray:
    ref_pts = np.array([[kp.x, kp.y] for kp in ref_kps]).reshape(-1, 2)
    ref_r = np.array([kp.size / 2.0 for kp in ref_kps])
    d = np.hypot(test_pts[:, None, 0] - ref_pts[None, :, 0], test_pts[:, None, 1] - ref_pts[None, :, 1])
    return circle_iou(d, test_r[:, None], ref_r[None, :])


def keypoint_iou(test_kp: Keypoint, ref_kp: Keypoint, gt: GroundTruth2D) -> float:
    """IoU of the reference disc and the test disc mapped into the reference frame."""
    pts, radii = _mapped_test([test_kp], gt)
    return float(_iou_matrix(pts, radii, [ref_kp])[0, 0])


def repeatability_and_ambiguity(
    ref_kps: Sequence[Keypoint],
    test_kps: Sequence[Keypoint],
    gt: GroundTruth2D,
    ref_mask: RegionMask,
    test_mask: RegionMask,
    cfg: MetricsConfig,
) -> DetectionScore:
    """
    Score test detections against reference detections inside the mask
    intersection (both masks in reference-frame coordinates).
    """
    below_n = len(test_kps) < cfg.n_min_keypoints
    region = ref_mask.intersect(test_mask)
    test_pts, test_r = _mapped_test(test_kps, gt)
    if region is None or len(test_kps) == 0:
        return DetectionScore(None, None, below_n, len(test_kps), len(ref_kps))

    keep_test = region.contains(test_pts[:, 0], test_pts[:, 1])
    considered = int(keep_test.sum())
    if considered == 0:
        return DetectionScore(None, None, below_n, len(test_kps), len(ref_kps))
    ref_in = [kp for kp in ref_kps if region.contains(kp.x, kp.y)]
    if not ref_in:
        return DetectionScore(0.0, None, below_n, len(test_kps), len(ref_kps), considered)

    ious = _iou_matrix(test_pts[keep_test], test_r[keep_test], ref_in)
    counts = (ious > cfg.iou_threshold).sum(axis=1)
    matched = counts > 0
    repeatability = float(matched.sum()) / considered
    ambiguity = float(counts[matched].mean()) if matched.any() else None
    return DetectionScore(repeatability, ambiguity, below_n, len(test_kps), len(ref_kps), considered)


def match_correctness(
    matches: Sequence[Match],
    test_kps: Sequence[Keypoint],
    ref_kps: Sequence[Keypoint],
    gt: GroundTruth2D,
    cfg: MetricsConfig,
) -> MatchScore:
    """A match is correct when its keypoints overlap with IoU above the threshold."""
    if not matches:
        return MatchScore(0, None)
    n_correct = sum(
        1 for m in matches if keypoint_iou(test_kps[m.test_index], ref_kps[m.ref_index], gt) > cfg.iou_threshold
    )
    return MatchScore(n_correct, n_correct / len(matches))


def wrap_angle(angle: float) -> float:
    """Wrap degrees into [-180, 180)."""
    return (angle + 180.0) % 360.0 - 180.0


def pose_success(est: Optional[Pose2D], gt: GroundTruth2D, cfg: MetricsConfig) -> bool:
    """
    Compare an estimated test-to-reference pose with the ground truth.

    Success needs the image centre to land within pos_threshold pixels of
    where the ground truth puts it and the wrapped angle error to stay below
    ang_threshold degrees.
    """
    if est is None:
        return False
    truth = gt.to_pose().inverse()
    center = np.array([gt.cx, gt.cy])
    displacement = float(np.linalg.norm(est.apply(center) - truth.apply(center)))
    angle_error = abs(wrap_angle(est.angle - truth.angle))
    return displacement < cfg.pos_threshold and angle_error < cfg.ang_threshold


def success_rate(flags: Sequence[bool]) -> float:
    """Fraction of successful pose estimates among all of them."""
    flags = list(flags)
    if not flags:
        raise ValueError("success rate of an empty sequence is undefined")
    return sum(1 for f in flags if f) / len(flags)
