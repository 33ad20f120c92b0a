"""
Descriptor matching and planar pose estimation.

Poses use the standard rotation matrix [[c, -s], [s, c]] applied to raster
coordinates: p' = scale * R(angle) * p + (tx, ty). RANSAC estimates the
pose that maps test keypoints onto reference keypoints.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from src.describe import Descriptor, stack_descriptors
from src.detect import Keypoint
from src.errors import ConfigError, DegenerateGeometryError

logger = logging.getLogger(__name__)

_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint16)
_HAMMING_CHUNK = 256
_RANSAC_CHUNK = 256


class Match(NamedTuple):
    test_index: int
    ref_index: int
    distance: float
    ratio: float


@dataclass(frozen=True)
class Pose2D:
    angle: float = 0.0
    tx: float = 0.0
    ty: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"pose scale must be positive, got {self.scale}")

    @property
    def rotation(self) -> np.ndarray:
        rad = math.radians(self.angle)
        c, s = math.cos(rad), math.sin(rad)
        return np.array([[c, -s], [s, c]])

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return self.scale * pts @ self.rotation.T + np.array([self.tx, self.ty])

    def inverse(self) -> "Pose2D":
        inv_scale = 1.0 / self.scale
        back = Pose2D(angle=-self.angle, scale=inv_scale)
        t = -back.apply(np.array([self.tx, self.ty]))
        return Pose2D(angle=-self.angle, tx=float(t[0]), ty=float(t[1]), scale=inv_scale)


def apply_pose(pose: Pose2D, p) -> np.ndarray:
    """p' = scale * R(angle) * p + (tx, ty) for one point or an (n, 2) array."""
    return pose.apply(p)


@dataclass(frozen=True)
class RansacConfig:
    iterations: int = 2000
    inlier_threshold: float = 3.0
    with_scale: bool = True
    seed: int = 0
    min_inliers: int = 5
    scale_bounds: tuple[float, float] = (0.9, 1.1)

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError(f"ransac iterations must be >= 1, got {self.iterations}")
        if not self.inlier_threshold > 0:
            raise ConfigError(f"inlier threshold must be positive, got {self.inlier_threshold}")
        lo, hi = self.scale_bounds
        if not (0 < lo <= 1.0 <= hi):
            raise ConfigError(f"scale bounds must contain 1, got {self.scale_bounds}")
        if self.min_inliers < 2:
            raise ConfigError(f"min_inliers must be >= 2, got {self.min_inliers}")


class RansacResult(NamedTuple):
    pose: Pose2D
    inliers: list[Match]


# =============================================================================
# Matching
# =============================================================================

def descriptor_distance(a: Descriptor, b: Descriptor) -> float:
    """Hamming distance for binary descriptors, L2 for real ones."""
    if a.kind != b.kind:
        raise ValueError(f"cannot compare {a.kind} and {b.kind} descriptors")
    if a.kind == "binary":
        return float(_POPCOUNT[np.bitwise_xor(a.data, b.data)].sum())
    return float(np.linalg.norm(a.data.astype(np.float64) - b.data.astype(np.float64)))


def distance_matrix(test: np.ndarray, ref: np.ndarray, kind: str) -> np.ndarray:
    """All-pairs distances between stacked descriptors, shape (len(test), len(ref))."""
    if kind == "real":
        return cdist(test.astype(np.float64), ref.astype(np.float64), metric="euclidean")
    out = np.empty((len(test), len(ref)), dtype=np.float64)
    for start in range(0, len(test), _HAMMING_CHUNK):
        block = np.bitwise_xor(test[start:start + _HAMMING_CHUNK, None, :], ref[None, :, :])
        out[start:start + _HAMMING_CHUNK] = _POPCOUNT[block].sum(axis=2)
    return out


def match_ratio_test(
    test: Sequence[Descriptor], ref: Sequence[Descriptor], ratio_threshold: float = 0.7
) -> list[Match]:
    """
    Linear nearest-neighbour matching with the ratio test.

    A test descriptor is matched to its nearest reference descriptor when
    d1 / d2 < ratio_threshold. Distance ties resolve to the lowest reference
    index; d2 == 0 or fewer than two references yield no match.
    """
    test, ref = list(test), list(ref)
    if not test or len(ref) < 2:
        return []
    kinds = {d.kind for d in test} | {d.kind for d in ref}
    if len(kinds) > 1:
        raise ValueError("cannot match binary against real descriptors")
    kind = kinds.pop()
    dist = distance_matrix(stack_descriptors(test), stack_descriptors(ref), kind)
    order = np.argsort(dist, axis=1, kind="stable")
    matches = []
    for i in range(len(test)):
        j1, j2 = order[i, 0], order[i, 1]
        d1, d2 = dist[i, j1], dist[i, j2]
        if d2 <= 0:
            continue
        ratio = d1 / d2
        if ratio < ratio_threshold:
            matches.append(Match(i, int(j1), float(d1), float(ratio)))
    return matches


# =============================================================================
# Pose estimation
# =============================================================================

def _fit(src: np.ndarray, dst: np.ndarray, with_scale: bool) -> Pose2D:
    if len(src) < 2:
        raise DegenerateGeometryError(f"need at least 2 point pairs, got {len(src)}")
    src_mean, dst_mean = src.mean(axis=0), dst.mean(axis=0)
    p, q = src - src_mean, dst - dst_mean
    spread = float((p * p).sum())
    if spread < 1e-12:
        raise DegenerateGeometryError("source points are coincident")
    a = float((p[:, 0] * q[:, 0] + p[:, 1] * q[:, 1]).sum())
    b = float((p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0]).sum())
    if with_scale:
        scale = math.hypot(a, b) / spread
        if scale < 1e-12:
            raise DegenerateGeometryError("target points are coincident")
    else:
        scale = 1.0
    angle = math.degrees(math.atan2(b, a))
    pose = Pose2D(angle=angle, scale=scale)
    t = dst_mean - pose.apply(src_mean)
    return Pose2D(angle=angle, tx=float(t[0]), ty=float(t[1]), scale=scale)


def estimate_euclidean_lsq(pairs, with_scale: bool = True) -> Pose2D:
    """
    Closed-form least-squares rigid (or similarity) fit.

    Args:
        pairs: Sequence of ((x, y), (x', y')) correspondences.
        with_scale: Also estimate a uniform scale.

    Returns:
        Pose minimising sum |p' - (s * R * p + t)|^2.

    Raises:
        DegenerateGeometryError: fewer than 2 pairs or coincident points.
    """
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[0] < 2:
        raise DegenerateGeometryError(f"need at least 2 point pairs, got {len(arr)}")
    return _fit(arr[:, 0, :], arr[:, 1, :], with_scale)


def _hypotheses(src: np.ndarray, dst: np.ndarray, i: np.ndarray, j: np.ndarray, with_scale: bool):
    """Two-point pose hypotheses as arrays (s*cos, s*sin, tx, ty, scale, valid)."""
    dp = src[j] - src[i]
    dq = dst[j] - dst[i]
    norm_p = np.hypot(dp[:, 0], dp[:, 1])
    dot = dp[:, 0] * dq[:, 0] + dp[:, 1] * dq[:, 1]
    cross = dp[:, 0] * dq[:, 1] - dp[:, 1] * dq[:, 0]
    valid = norm_p > 1e-9
    safe = np.where(valid, norm_p, 1.0)
    theta = np.arctan2(cross, dot)
    scale = np.hypot(dq[:, 0], dq[:, 1]) / safe if with_scale else np.ones_like(norm_p)
    sc, ss = scale * np.cos(theta), scale * np.sin(theta)
    mid_p = 0.5 * (src[i] + src[j])
    mid_q = 0.5 * (dst[i] + dst[j])
    tx = mid_q[:, 0] - (sc * mid_p[:, 0] - ss * mid_p[:, 1])
    ty = mid_q[:, 1] - (ss * mid_p[:, 0] + sc * mid_p[:, 1])
    return sc, ss, tx, ty, scale, valid


def _residuals(pose: Pose2D, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    diff = pose.apply(src) - dst
    return np.hypot(diff[:, 0], diff[:, 1])


def ransac_pose(
    matches: Sequence[Match], test_kps: Sequence[Keypoint], ref_kps: Sequence[Keypoint], cfg: RansacConfig
) -> Optional[RansacResult]:
    """
    RANSAC over two-point samples for the pose mapping test keypoints onto
    their matched reference keypoints.

    The best hypothesis has the most inliers (ties: smaller mean inlier
    error, then earlier sample). It is refit on its inliers and the inliers
    are recounted once.

    Returns:
        RansacResult, or None when fewer than min_inliers support the pose
        or its scale is outside cfg.scale_bounds.
    """
    matches = list(matches)
    m = len(matches)
    if m < 2:
        return None
    src = np.array([[test_kps[mt.test_index].x, test_kps[mt.test_index].y] for mt in matches])
    dst = np.array([[ref_kps[mt.ref_index].x, ref_kps[mt.ref_index].y] for mt in matches])

    rng = np.random.default_rng(cfg.seed)
    first = rng.integers(0, m, size=cfg.iterations)
    second = rng.integers(0, m - 1, size=cfg.iterations)
    second = second + (second >= first)

    lo, hi = cfg.scale_bounds
    thr = cfg.inlier_threshold
    best_key = None
    for start in range(0, cfg.iterations, _RANSAC_CHUNK):
        i, j = first[start:start + _RANSAC_CHUNK], second[start:start + _RANSAC_CHUNK]
        sc, ss, tx, ty, scale, valid = _hypotheses(src, dst, i, j, cfg.with_scale)
        if cfg.with_scale:
            valid &= (scale >= lo) & (scale <= hi)
        px = sc[:, None] * src[None, :, 0] - ss[:, None] * src[None, :, 1] + tx[:, None]
        py = ss[:, None] * src[None, :, 0] + sc[:, None] * src[None, :, 1] + ty[:, None]
        err = np.hypot(px - dst[None, :, 0], py - dst[None, :, 1])
        inlier = err < thr
        counts = np.where(valid, inlier.sum(axis=1), -1)
        mean_err = np.where(inlier, err, 0.0).sum(axis=1) / np.maximum(counts, 1)
        for k in range(len(counts)):
            if counts[k] < 0:
                continue
            key = (-int(counts[k]), float(mean_err[k]))
            if best_key is None or key < best_key:
                best_key = key
                best_mask = inlier[k]
    if best_key is None or -best_key[0] < 2:
        logger.debug("ransac: no valid hypothesis among %d matches", m)
        return None

    try:
        pose = _fit(src[best_mask], dst[best_mask], cfg.with_scale)
    except DegenerateGeometryError:
        return None
    inlier_mask = _residuals(pose, src, dst) < thr
    n_inliers = int(inlier_mask.sum())
    if n_inliers < cfg.min_inliers:
        logger.debug("ransac: %d inliers below minimum %d", n_inliers, cfg.min_inliers)
        return None
    if cfg.with_scale and not (lo <= pose.scale <= hi):
        logger.debug("ransac: refit scale %.4f outside bounds", pose.scale)
        return None
    inliers = [mt for mt, keep in zip(matches, inlier_mask) if keep]
    return RansacResult(pose, inliers)
