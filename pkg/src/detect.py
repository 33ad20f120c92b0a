"""
Native keypoint detectors.

Corner family: Harris, Shi-Tomasi (minimum eigenvalue), FAST and oriented
FAST on a pyramid ("orb"). Scale-space family: CenSurE with bi-level box
filters and Difference-of-Gaussians with orientation assignment.

All detectors honour the detection mask of their DetectorConfig and return
keypoints ordered by (response descending, y, x).
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Union

import numpy as np
from scipy import ndimage

from src.errors import ConfigError
from src.imgcore import (
    FloatImage,
    GrayImage,
    blur_array,
    gradient_arrays,
    integral,
)
from src.synth import RegionMask

logger = logging.getLogger(__name__)

# Bresenham circle of radius 3, clockwise from 12 o'clock, as (dx, dy).
FAST_CIRCLE = (
    (0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3),
)
FAST_COMPASS = (0, 4, 8, 12)
FAST_SIZE = 7.0

ORIENTATION_BINS = 36
ORIENTATION_PEAK_RATIO = 0.8
DOG_BORDER = 5
DOG_MAX_REFINE_STEPS = 3


@dataclass(frozen=True)
class Keypoint:
    """
    Detected interest location.

    Attributes:
        x: Column in the detection image (sub-pixel).
        y: Row in the detection image (sub-pixel).
        size: Region diameter in pixels.
        angle: Orientation in degrees [0, 360), counter-clockwise on screen,
            or None when the detector assigns none.
        response: Detector score, >= 0.
        octave: Pyramid level the keypoint was found on.
    """

    x: float
    y: float
    size: float
    angle: Optional[float] = None
    response: float = 0.0
    octave: int = 0

    def __post_init__(self):
        if not self.size > 0:
            raise ValueError(f"keypoint size must be positive, got {self.size}")
        if self.response < 0:
            raise ValueError(f"keypoint response must be >= 0, got {self.response}")

    @property
    def pt(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class DetectorConfig:
    """Thresholds and pyramid parameters for all detectors."""

    mask: Optional[RegionMask] = None
    # Harris / Shi-Tomasi
    window_sigma: float = 2.0
    harris_k: float = 0.04
    corner_quality: float = 0.01
    # FAST
    fast_threshold: int = 3
    fast_arc: int = 9
    # CenSurE
    censure_scales: int = 7
    censure_threshold: float = 8.0
    censure_line_threshold: float = 10.0
    # Difference of Gaussians
    dog_octaves: int = 4
    dog_intervals: int = 3
    dog_sigma: float = 1.6
    dog_contrast: float = 0.01
    dog_edge_ratio: float = 10.0
    # Oriented FAST pyramid
    orb_levels: int = 4
    orb_scale: float = 1.2
    orb_patch_radius: int = 15

    def __post_init__(self):
        positive = (
            "window_sigma", "harris_k", "corner_quality", "fast_threshold", "censure_threshold",
            "censure_line_threshold", "dog_sigma", "dog_contrast", "dog_edge_ratio", "orb_scale",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"detector parameter {name} must be positive, got {getattr(self, name)}")
        for name in ("dog_octaves", "dog_intervals", "censure_scales", "orb_levels"):
            if getattr(self, name) < 1:
                raise ConfigError(f"detector parameter {name} must be >= 1")
        if not 1 <= self.fast_arc <= 16:
            raise ConfigError(f"fast_arc must lie in [1, 16], got {self.fast_arc}")

    def with_mask(self, mask: Optional[RegionMask]) -> "DetectorConfig":
        return replace(self, mask=mask)


def sort_keypoints(kps: list[Keypoint]) -> list[Keypoint]:
    """Stable ordering: response descending, then y, then x."""
    return sorted(kps, key=lambda kp: (-kp.response, kp.y, kp.x))


def _apply_mask(kps: list[Keypoint], mask: Optional[RegionMask]) -> list[Keypoint]:
    if mask is None or not kps:
        return kps
    xs = np.fromiter((kp.x for kp in kps), dtype=np.float64, count=len(kps))
    ys = np.fromiter((kp.y for kp in kps), dtype=np.float64, count=len(kps))
    keep = mask.contains(xs, ys)
    return [kp for kp, k in zip(kps, keep) if k]


def _as_float_array(img: Union[GrayImage, FloatImage]) -> np.ndarray:
    return img.as_float() if isinstance(img, GrayImage) else np.asarray(img.data, dtype=np.float64)


# =============================================================================
# Harris / Shi-Tomasi
# =============================================================================

def corner_response(arr: np.ndarray, response_kind: str, window_sigma: float, k: float = 0.04) -> np.ndarray:
    """Structure-tensor corner measure for every pixel."""
    gx, gy = gradient_arrays(arr)
    sxx = blur_array(gx * gx, window_sigma)
    syy = blur_array(gy * gy, window_sigma)
    sxy = blur_array(gx * gy, window_sigma)
    if response_kind == "harris":
        trace = sxx + syy
        return sxx * syy - sxy * sxy - k * trace * trace
    if response_kind == "min_eigenvalue":
        half_trace = 0.5 * (sxx + syy)
        return half_trace - np.sqrt(0.25 * (sxx - syy) ** 2 + sxy * sxy)
    raise ValueError(f"Unsupported response kind: {response_kind}. Use 'harris' or 'min_eigenvalue'.")


def detect_corners(img: GrayImage, cfg: DetectorConfig, response_kind: str = "harris") -> list[Keypoint]:
    """
    Harris or Shi-Tomasi corners: 3x3 local maxima of the response above
    cfg.corner_quality times the strongest response.

    Args:
        img: Input image, at least 7x7.
        cfg: Detector configuration.
        response_kind: "harris" or "min_eigenvalue".

    Returns:
        Keypoints of size 6 * window_sigma without orientation.
    """
    if img.width < 7 or img.height < 7:
        raise ValueError(f"corner detection needs at least 7x7 pixels, got {img.width}x{img.height}")
    r = corner_response(img.as_float(), response_kind, cfg.window_sigma, cfg.harris_k)
    peak = float(r.max())
    if peak <= 0:
        return []
    local_max = r == ndimage.maximum_filter(r, size=3, mode="nearest")
    candidates = local_max & (r > cfg.corner_quality * peak)
    border = 3
    candidates[:border, :] = False
    candidates[-border:, :] = False
    candidates[:, :border] = False
    candidates[:, -border:] = False
    ys, xs = np.nonzero(candidates)
    size = 6.0 * cfg.window_sigma
    kps = [Keypoint(float(x), float(y), size, None, float(r[y, x])) for y, x in zip(ys, xs)]
    return sort_keypoints(_apply_mask(kps, cfg.mask))


# =============================================================================
# FAST
# =============================================================================

def fast_score_naive(arr: np.ndarray, x: int, y: int, t: int, arc: int = 9) -> int:
    """
    Reference FAST test for one pixel, straight from the definition.

    Returns:
        Best sum of |difference| - t over a window of `arc` contiguous
        circle pixels that are all brighter than p + t or all darker than
        p - t; 0 when no such window exists.
    """
    p = int(arr[y, x])
    ring = [int(arr[y + dy, x + dx]) for dx, dy in FAST_CIRCLE]
    best = 0
    for start in range(16):
        window = [ring[(start + j) % 16] for j in range(arc)]
        if all(v > p + t for v in window):
            best = max(best, sum(v - p - t for v in window))
        if all(v < p - t for v in window):
            best = max(best, sum(p - v - t for v in window))
    return best


def fast_score_map(arr: np.ndarray, t: int, arc: int = 9, early_reject: bool = True) -> np.ndarray:
    """
    FAST corner score for every pixel (0 where the test fails).

    With early_reject the four compass pixels are tested first: any window
    of `arc` contiguous circle pixels contains at least arc // 4 of them.
    """
    a = np.asarray(arr).astype(np.int32)
    h, w = a.shape
    scores = np.zeros((h, w), dtype=np.int64)
    if h < 7 or w < 7:
        return scores
    center = a[3:h - 3, 3:w - 3]
    ring = np.stack([a[3 + dy:h - 3 + dy, 3 + dx:w - 3 + dx] for dx, dy in FAST_CIRCLE])

    if early_reject:
        need = arc // 4
        compass = ring[list(FAST_COMPASS)]
        n_bright = (compass > center + t).sum(axis=0)
        n_dark = (compass < center - t).sum(axis=0)
        ys, xs = np.nonzero((n_bright >= need) | (n_dark >= need))
    else:
        ys, xs = np.nonzero(np.ones_like(center, dtype=bool))
    if ys.size == 0:
        return scores

    diff = ring[:, ys, xs] - center[ys, xs]
    bright = diff > t
    dark = diff < -t
    gain_bright = np.where(bright, diff - t, 0)
    gain_dark = np.where(dark, -diff - t, 0)
    best = np.zeros(ys.size, dtype=np.int64)
    for start in range(16):
        idx = [(start + j) % 16 for j in range(arc)]
        best = np.maximum(best, np.where(bright[idx].all(axis=0), gain_bright[idx].sum(axis=0), 0))
        best = np.maximum(best, np.where(dark[idx].all(axis=0), gain_dark[idx].sum(axis=0), 0))
    scores[ys + 3, xs + 3] = best
    return scores


def _fast_peaks(scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    local_max = scores == ndimage.maximum_filter(scores, size=3, mode="constant", cval=0)
    return np.nonzero(local_max & (scores > 0))


def detect_fast(img: GrayImage, cfg: DetectorConfig) -> list[Keypoint]:
    """FAST corners with 3x3 non-maximum suppression on the score."""
    scores = fast_score_map(img.data, cfg.fast_threshold, cfg.fast_arc)
    ys, xs = _fast_peaks(scores)
    kps = [Keypoint(float(x), float(y), FAST_SIZE, None, float(scores[y, x])) for y, x in zip(ys, xs)]
    return sort_keypoints(_apply_mask(kps, cfg.mask))


def intensity_centroid_angle(img, x: float, y: float, radius: int = 15) -> float:
    """
    Orientation from the intensity centroid of a disc around (x, y).

    Returns:
        Degrees in [0, 360), counter-clockwise on screen; 0 for a flat patch.
    """
    arr = _as_float_array(img) if isinstance(img, (GrayImage, FloatImage)) else np.asarray(img, np.float64)
    xi, yi = int(round(x)), int(round(y))
    h, w = arr.shape
    y0, y1 = max(0, yi - radius), min(h, yi + radius + 1)
    x0, x1 = max(0, xi - radius), min(w, xi + radius + 1)
    patch = arr[y0:y1, x0:x1]
    dy, dx = np.mgrid[y0 - yi:y1 - yi, x0 - xi:x1 - xi]
    disc = dx * dx + dy * dy <= radius * radius
    m10 = float((dx * patch)[disc].sum())
    m01 = float((dy * patch)[disc].sum())
    if abs(m10) < 1e-12 and abs(m01) < 1e-12:
        return 0.0
    angle = math.degrees(math.atan2(-m01, m10)) % 360.0
    return 0.0 if angle >= 360.0 else angle


def detect_orb(img: GrayImage, cfg: DetectorConfig) -> list[Keypoint]:
    """
    Oriented FAST on an image pyramid, ranked by the Harris measure.

    Keypoints are reported in base-image coordinates with size
    (2 * orb_patch_radius + 1) * scale and an intensity-centroid angle.
    """
    base = img.as_float()
    radius = cfg.orb_patch_radius
    kps = []
    for level in range(cfg.orb_levels):
        factor = cfg.orb_scale ** level
        arr = base if level == 0 else ndimage.zoom(base, 1.0 / factor, order=1)
        if min(arr.shape) < 2 * radius + 3:
            break
        scores = fast_score_map(np.clip(np.floor(arr + 0.5), 0, 255), cfg.fast_threshold, cfg.fast_arc)
        harris = corner_response(arr, "harris", 1.0, cfg.harris_k)
        ys, xs = _fast_peaks(scores)
        h, w = arr.shape
        for y, x in zip(ys, xs):
            if not (radius <= x < w - radius and radius <= y < h - radius):
                continue
            score = float(harris[y, x])
            if score <= 0:
                continue
            angle = intensity_centroid_angle(arr, x, y, radius)
            kps.append(Keypoint(
                float(x) * factor, float(y) * factor, (2 * radius + 1) * factor, angle, score, level,
            ))
    return sort_keypoints(_apply_mask(kps, cfg.mask))


# =============================================================================
# CenSurE
# =============================================================================

def _box_sum_map(table: np.ndarray, half: int) -> np.ndarray:
    """Sums of all (2*half+1)^2 boxes; entry [i, j] is centred at (i+half, j+half)."""
    s = 2 * half + 1
    return table[s:, s:] - table[:-s, s:] - table[s:, :-s] + table[:-s, :-s]


def censure_responses(img: GrayImage, n_scales: int = 7) -> np.ndarray:
    """
    Bi-level centre-surround responses, shape (n_scales, height, width).

    Scale n uses an inner box of side 2n+1 and an outer box of side 4n+1;
    response = mean(inner) - mean(outer ring). Pixels where the outer box
    does not fit are 0.
    """
    h, w = img.height, img.width
    table = integral(img).table.astype(np.float64)
    out = np.zeros((n_scales, h, w), dtype=np.float64)
    for k, n in enumerate(range(1, n_scales + 1)):
        outer_half = 2 * n
        if h < 2 * outer_half + 1 or w < 2 * outer_half + 1:
            break
        outer = _box_sum_map(table, outer_half)
        inner_full = _box_sum_map(table, n)
        inner = inner_full[n:n + outer.shape[0], n:n + outer.shape[1]]
        a_in = (2 * n + 1) ** 2
        a_ring = (4 * n + 1) ** 2 - a_in
        out[k, outer_half:h - outer_half, outer_half:w - outer_half] = inner / a_in - (outer - inner) / a_ring
    return out


def detect_censure(img: GrayImage, cfg: DetectorConfig) -> list[Keypoint]:
    """
    CenSurE: 3x3x3 scale-space maxima of |DoB response| that pass the
    Harris-ratio line test at their scale.

    Raises:
        ValueError: if the image is smaller than the largest filter.
    """
    largest = 4 * cfg.censure_scales + 1
    if img.width < largest or img.height < largest:
        raise ValueError(f"CenSurE needs at least {largest}x{largest} pixels, got {img.width}x{img.height}")
    responses = np.abs(censure_responses(img, cfg.censure_scales))
    peaks = responses == ndimage.maximum_filter(responses, size=3, mode="nearest")
    peaks &= responses > cfg.censure_threshold
    ks, ys, xs = np.nonzero(peaks)
    if ks.size == 0:
        return []

    gx, gy = gradient_arrays(img.as_float())
    t_xx = integral(FloatImage(gx * gx)).table
    t_yy = integral(FloatImage(gy * gy)).table
    t_xy = integral(FloatImage(gx * gy)).table

    kps = []
    for k, y, x in zip(ks, ys, xs):
        half = 2 * (k + 1)
        y0, y1, x0, x1 = y - half, y + half + 1, x - half, x + half + 1
        sxx = t_xx[y1, x1] - t_xx[y0, x1] - t_xx[y1, x0] + t_xx[y0, x0]
        syy = t_yy[y1, x1] - t_yy[y0, x1] - t_yy[y1, x0] + t_yy[y0, x0]
        sxy = t_xy[y1, x1] - t_xy[y0, x1] - t_xy[y1, x0] + t_xy[y0, x0]
        det = sxx * syy - sxy * sxy
        trace = sxx + syy
        if det <= 1e-9 * max(trace * trace, 1.0) or trace * trace / det > cfg.censure_line_threshold:
            continue
        kps.append(Keypoint(float(x), float(y), float(4 * (k + 1) + 1), None, float(responses[k, y, x]), int(k)))
    return sort_keypoints(_apply_mask(kps, cfg.mask))


# =============================================================================
# Difference of Gaussians
# =============================================================================

def _orientation_peaks(gx: np.ndarray, gy: np.ndarray, x: float, y: float, sigma: float) -> Optional[list[float]]:
    """Dominant gradient directions around (x, y); None when the window leaves the image."""
    radius = max(1, int(round(3.0 * sigma)))
    xi, yi = int(round(x)), int(round(y))
    h, w = gx.shape
    if xi - radius < 0 or yi - radius < 0 or xi + radius >= w or yi + radius >= h:
        return None
    pgx = gx[yi - radius:yi + radius + 1, xi - radius:xi + radius + 1]
    pgy = gy[yi - radius:yi + radius + 1, xi - radius:xi + radius + 1]
    dy, dx = np.mgrid[-radius:radius + 1, -radius:radius + 1]
    weight = np.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))
    magnitude = np.hypot(pgx, pgy) * weight
    direction = np.degrees(np.arctan2(-pgy, pgx)) % 360.0
    bins = np.round(direction * ORIENTATION_BINS / 360.0).astype(np.int64) % ORIENTATION_BINS
    hist = np.bincount(bins.ravel(), weights=magnitude.ravel(), minlength=ORIENTATION_BINS)
    hist = (
        6 * hist + 4 * (np.roll(hist, 1) + np.roll(hist, -1)) + np.roll(hist, 2) + np.roll(hist, -2)
    ) / 16.0
    top = hist.max()
    if top <= 0:
        return []
    left, right = np.roll(hist, 1), np.roll(hist, -1)
    angles = []
    for b in np.nonzero((hist > left) & (hist > right) & (hist >= ORIENTATION_PEAK_RATIO * top))[0]:
        l, c, r = left[b], hist[b], right[b]
        denom = l - 2 * c + r
        offset = 0.5 * (l - r) / denom if denom != 0 else 0.0
        angle = ((b + offset) * 360.0 / ORIENTATION_BINS) % 360.0
        angles.append(0.0 if angle >= 360.0 else float(angle))
    return angles


def assign_orientation(img_level: FloatImage, kp: Keypoint) -> list[Keypoint]:
    """
    One keypoint per orientation-histogram peak within 80% of the highest.

    The 36-bin histogram collects Sobel gradient magnitudes over a Gaussian
    window of sigma 1.5 * (kp.size / 3); peak angles are refined by a parabola.
    An empty list is returned when the window leaves the image.
    """
    gx, gy = gradient_arrays(img_level.data)
    angles = _orientation_peaks(gx, gy, kp.x, kp.y, 1.5 * kp.size / 3.0)
    if not angles:
        return []
    return [replace(kp, angle=a) for a in angles]


def _scale_space(base: np.ndarray, cfg: DetectorConfig) -> tuple[list[np.ndarray], int]:
    """
    Full-resolution Gaussian levels sigma_j = dog_sigma * 2^(j / intervals).

    Octaves are never decimated, so every level keeps the sampling grid of
    the input. The number of octaves is capped by the image size.
    """
    s = cfg.dog_intervals
    k = 2.0 ** (1.0 / s)
    octaves = 0
    while octaves < cfg.dog_octaves and min(base.shape) >= (2 * DOG_BORDER + 6) * 2 ** octaves:
        octaves += 1
    sigmas = [cfg.dog_sigma * k ** j for j in range(octaves * s + 3)]
    levels = [blur_array(base, math.sqrt(max(cfg.dog_sigma ** 2 - 0.25, 0.01)))]
    for j in range(1, len(sigmas)):
        levels.append(blur_array(levels[-1], math.sqrt(sigmas[j] ** 2 - sigmas[j - 1] ** 2)))
    return levels, octaves


def _refine_extremum(dog: np.ndarray, i: int, y: int, x: int, cfg: DetectorConfig):
    """Quadratic interpolation of a DoG extremum; None when rejected."""
    s = cfg.dog_intervals
    n_layers, h, w = dog.shape
    for _ in range(DOG_MAX_REFINE_STEPS):
        d = dog
        v = d[i, y, x]
        g = np.array([
            (d[i, y, x + 1] - d[i, y, x - 1]) * 0.5,
            (d[i, y + 1, x] - d[i, y - 1, x]) * 0.5,
            (d[i + 1, y, x] - d[i - 1, y, x]) * 0.5,
        ])
        dxx = d[i, y, x + 1] + d[i, y, x - 1] - 2 * v
        dyy = d[i, y + 1, x] + d[i, y - 1, x] - 2 * v
        dss = d[i + 1, y, x] + d[i - 1, y, x] - 2 * v
        dxy = (d[i, y + 1, x + 1] - d[i, y + 1, x - 1] - d[i, y - 1, x + 1] + d[i, y - 1, x - 1]) * 0.25
        dxs = (d[i + 1, y, x + 1] - d[i + 1, y, x - 1] - d[i - 1, y, x + 1] + d[i - 1, y, x - 1]) * 0.25
        dys = (d[i + 1, y + 1, x] - d[i + 1, y - 1, x] - d[i - 1, y + 1, x] + d[i - 1, y - 1, x]) * 0.25
        hess = np.array([[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]])
        try:
            offset = -np.linalg.solve(hess, g)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(offset)):
            return None
        if np.all(np.abs(offset) <= 0.5):
            contrast = v + 0.5 * float(g @ offset)
            if abs(contrast) * s < cfg.dog_contrast:
                return None
            trace = dxx + dyy
            det = dxx * dyy - dxy * dxy
            r = cfg.dog_edge_ratio
            if det <= 0 or trace * trace * r >= (r + 1) ** 2 * det:
                return None
            return x + offset[0], y + offset[1], i + offset[2], abs(contrast)
        x += int(round(offset[0]))
        y += int(round(offset[1]))
        i += int(round(offset[2]))
        if i < 1 or i > n_layers - 2 or x < DOG_BORDER or y < DOG_BORDER or x >= w - DOG_BORDER or y >= h - DOG_BORDER:
            return None
    return None


def detect_dog(img: GrayImage, cfg: DetectorConfig) -> list[Keypoint]:
    """
    Difference-of-Gaussians blobs with sub-pixel refinement and orientation.

    The scale space is built at full resolution, so an integer shift of the
    image shifts every keypoint by the same amount. The contrast threshold is
    relative to the [0, 1] intensity range and is divided by the number of
    intervals per octave before it is applied. Sizes are 3 * sigma.
    """
    if img.width < 32 or img.height < 32:
        raise ValueError(f"DoG detection needs at least 32x32 pixels, got {img.width}x{img.height}")
    s = cfg.dog_intervals
    levels, octaves = _scale_space(img.as_float() / 255.0, cfg)
    dog = np.stack([b - a for a, b in zip(levels[:-1], levels[1:])])
    is_max = dog == ndimage.maximum_filter(dog, size=3, mode="nearest")
    is_min = dog == ndimage.minimum_filter(dog, size=3, mode="nearest")
    cand = (is_max | is_min) & (np.abs(dog) > 0.5 * cfg.dog_contrast / s)
    cand[0] = False
    cand[-1] = False
    cand[:, :DOG_BORDER, :] = False
    cand[:, -DOG_BORDER:, :] = False
    cand[:, :, :DOG_BORDER] = False
    cand[:, :, -DOG_BORDER:] = False

    grads = {}
    kps = []
    for i, y, x in zip(*np.nonzero(cand)):
        refined = _refine_extremum(dog, int(i), int(y), int(x), cfg)
        if refined is None:
            continue
        rx, ry, ri, contrast = refined
        sigma = cfg.dog_sigma * 2.0 ** (ri / s)
        layer = int(round(ri))
        if layer not in grads:
            grads[layer] = gradient_arrays(levels[layer])
        gx, gy = grads[layer]
        angles = _orientation_peaks(gx, gy, rx, ry, 1.5 * sigma)
        if not angles:
            continue
        octave = min(max(layer - 1, 0) // s, octaves - 1)
        for angle in angles:
            kps.append(Keypoint(rx, ry, 3.0 * sigma, angle, float(contrast), octave))
    kps = [kp for kp in kps if 0 <= kp.x <= img.width - 1 and 0 <= kp.y <= img.height - 1]
    return sort_keypoints(_apply_mask(kps, cfg.mask))


# =============================================================================
# Dispatch
# =============================================================================

DETECTORS: dict[str, Callable[[GrayImage, DetectorConfig], list[Keypoint]]] = {
    "harris": lambda img, cfg: detect_corners(img, cfg, "harris"),
    "gftt": lambda img, cfg: detect_corners(img, cfg, "min_eigenvalue"),
    "fast": detect_fast,
    "censure": detect_censure,
    "dog": detect_dog,
    "orb": detect_orb,
}


def detect_keypoints(name: str, img: GrayImage, cfg: DetectorConfig) -> list[Keypoint]:
    """Run the detector registered under name."""
    try:
        detector = DETECTORS[name]
    except KeyError:
        raise ConfigError(f"Unknown detector: {name}. Use one of {', '.join(DETECTORS)}.") from None
    kps = detector(img, cfg)
    logger.debug("%s: %d keypoints on %dx%d image", name, len(kps), img.width, img.height)
    return kps
