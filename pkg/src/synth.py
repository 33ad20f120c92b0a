"""
Synthetic transformations with exact ground truth, and procedural textures.

Four transform kinds are supported: rotation, translation (of the detection
mask), Gaussian noise and gamma change. Ground truth always maps a point of
the reference image into the test image.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy import ndimage

from src.errors import ConfigError, DegenerateGeometryError
from src.imgcore import (
    GrayImage,
    blur_array,
    rotation_source_coords,
    screen_rotation,
    to_gray,
    warp_rotate,
)

logger = logging.getLogger(__name__)

G_MAX = 255

TRANSFORM_KINDS = ("rotation", "translation", "noise", "gamma")

# Inclusive parameter ranges per kind.
PARAMETER_RANGES = {
    "rotation": (0.0, 180.0),
    "translation": (0.2, 1.0),
    "noise": (0.0, 40.0),
    "gamma": (0.1, 3.0),
}

TEXTURE_KINDS = ("blobs", "fractal-noise", "speckle")

DEFAULT_MASK_FRACTION = 0.5

# Camera noise on the view of every synthetic pose pair.
POSE_NOISE_SIGMA = 5.0


# =============================================================================
# Domain types
# =============================================================================

@dataclass(frozen=True)
class GroundTruth2D:
    """
    Reference-to-test mapping p' = scale * R(angle) * (p - c) + c + (tx, ty).

    R is the screen counter-clockwise rotation (see imgcore.screen_rotation)
    and c = (cx, cy) the image centre.
    """

    angle: float = 0.0
    tx: float = 0.0
    ty: float = 0.0
    scale: float = 1.0
    cx: float = 0.0
    cy: float = 0.0

    @classmethod
    def identity(cls, width: int = 1, height: int = 1) -> "GroundTruth2D":
        return cls(cx=(width - 1) / 2.0, cy=(height - 1) / 2.0)

    def apply(self, points) -> np.ndarray:
        """Map (n, 2) reference points (or a single (x, y)) into the test frame."""
        pts = np.asarray(points, dtype=np.float64)
        c = np.array([self.cx, self.cy])
        out = self.scale * (pts - c) @ screen_rotation(self.angle).T + c + np.array([self.tx, self.ty])
        return out

    def inverse(self) -> "GroundTruth2D":
        r_inv = screen_rotation(-self.angle)
        t = -(r_inv @ np.array([self.tx, self.ty])) / self.scale
        return GroundTruth2D(
            angle=-self.angle, tx=float(t[0]), ty=float(t[1]),
            scale=1.0 / self.scale, cx=self.cx, cy=self.cy,
        )

    def apply_inverse(self, points) -> np.ndarray:
        return self.inverse().apply(points)

    def to_pose(self):
        """Same mapping expressed as a Pose2D (standard rotation matrix, no pivot)."""
        from src.matchpose import Pose2D

        c = np.array([self.cx, self.cy])
        t = c + np.array([self.tx, self.ty]) - self.scale * (screen_rotation(self.angle) @ c)
        return Pose2D(angle=-self.angle, tx=float(t[0]), ty=float(t[1]), scale=self.scale)


@dataclass(frozen=True, eq=False)
class RegionMask:
    """
    Axis-aligned pixel rectangle [x0, x1) x [y0, y1), optionally restricted
    by a full-frame validity bitmap (shape (height, width), True = usable).
    """

    x0: int
    y0: int
    x1: int
    y1: int
    valid: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (0 <= self.x0 < self.x1 and 0 <= self.y0 < self.y1):
            raise ValueError(f"invalid mask rectangle ({self.x0},{self.y0})-({self.x1},{self.y1})")
        if self.valid is not None:
            bitmap = np.array(self.valid, dtype=bool, copy=True)
            if bitmap.ndim != 2 or self.x1 > bitmap.shape[1] or self.y1 > bitmap.shape[0]:
                raise ValueError("validity bitmap must be 2-D and cover the rectangle")
            bitmap.setflags(write=False)
            object.__setattr__(self, "valid", bitmap)

    @classmethod
    def full(cls, width: int, height: int) -> "RegionMask":
        return cls(0, 0, width, height)

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return self.width * self.height

    def contains(self, xs, ys) -> np.ndarray:
        """Vectorised membership test for (sub-pixel) coordinates."""
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        # Pixel i covers [i - 0.5, i + 0.5).
        inside = (xs >= self.x0 - 0.5) & (xs < self.x1 - 0.5) & (ys >= self.y0 - 0.5) & (ys < self.y1 - 0.5)
        if self.valid is not None:
            h, w = self.valid.shape
            ix = np.clip(np.floor(xs + 0.5).astype(np.int64), 0, w - 1)
            iy = np.clip(np.floor(ys + 0.5).astype(np.int64), 0, h - 1)
            inside &= self.valid[iy, ix]
        return inside

    def shifted(self, dx: int, dy: int) -> "RegionMask":
        if self.valid is not None:
            raise ValueError("cannot shift a mask carrying a validity bitmap")
        return RegionMask(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)

    def clipped(self, width: int, height: int) -> "RegionMask":
        return RegionMask(
            max(self.x0, 0), max(self.y0, 0), min(self.x1, width), min(self.y1, height), self.valid
        )

    def intersect(self, other: "RegionMask") -> Optional["RegionMask"]:
        """Intersection of two masks, None when empty."""
        x0, y0 = max(self.x0, other.x0), max(self.y0, other.y0)
        x1, y1 = min(self.x1, other.x1), min(self.y1, other.y1)
        if x0 >= x1 or y0 >= y1:
            return None
        if self.valid is None:
            valid = other.valid
        elif other.valid is None:
            valid = self.valid
        else:
            valid = self.valid & other.valid
        return RegionMask(x0, y0, x1, y1, valid)

    def iou(self, other: "RegionMask") -> float:
        """Rectangle IoU (bitmaps ignored)."""
        inter = self.intersect(RegionMask(other.x0, other.y0, other.x1, other.y1))
        overlap = 0 if inter is None else inter.area
        return overlap / (self.area + other.area - overlap)

    def eroded(self, margin: int) -> "RegionMask":
        """Shrink the rectangle and the bitmap by margin pixels."""
        if margin <= 0:
            return self
        x0, y0 = self.x0 + margin, self.y0 + margin
        x1, y1 = max(self.x1 - margin, x0 + 1), max(self.y1 - margin, y0 + 1)
        valid = self.valid
        if valid is not None:
            valid = ndimage.binary_erosion(valid, iterations=margin, border_value=0)
        return RegionMask(x0, y0, x1, y1, valid)


@dataclass(frozen=True)
class TransformSpec:
    """One synthetic transformation: kind, its parameter and (noise only) a seed."""

    kind: str
    parameter: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PARAMETER_RANGES:
            raise ConfigError(f"Unknown transform kind: {self.kind}. Use one of {', '.join(TRANSFORM_KINDS)}.")
        lo, hi = PARAMETER_RANGES[self.kind]
        if not (lo <= self.parameter <= hi):
            raise ConfigError(f"{self.kind} parameter {self.parameter} outside [{lo}, {hi}]")

    @property
    def label(self) -> str:
        return f"{self.kind}:{self.parameter:g}"


class SyntheticCase(NamedTuple):
    spec: TransformSpec
    gt: GroundTruth2D
    mask: RegionMask


@dataclass(frozen=True, eq=False)
class CasePair:
    """A realised evaluation pair with masks for detection and for scoring."""

    spec: TransformSpec
    ref_img: GrayImage
    test_img: GrayImage
    gt: GroundTruth2D
    ref_detect_mask: RegionMask
    test_detect_mask: RegionMask
    # Scoring masks, both in the reference frame.
    ref_mask: RegionMask
    test_mask: RegionMask


# =============================================================================
# Photometric transforms
# =============================================================================

def gamma_lut(gamma: float) -> np.ndarray:
    """256-entry table of round(255 * (g / 255) ** gamma), rounding half up."""
    if not (PARAMETER_RANGES["gamma"][0] <= gamma <= PARAMETER_RANGES["gamma"][1]):
        raise ValueError(f"gamma must lie in [0.1, 3.0], got {gamma}")
    g = np.arange(256, dtype=np.float64)
    return np.floor(G_MAX * (g / G_MAX) ** gamma + 0.5).astype(np.uint8)


def apply_gamma(img: GrayImage, gamma: float) -> GrayImage:
    """Apply the gamma curve through a lookup table."""
    return GrayImage(gamma_lut(gamma)[img.data])


def apply_noise(img: GrayImage, sigma: float, seed: int) -> GrayImage:
    """
    Add i.i.d. zero-mean Gaussian noise, then clamp and round.

    Args:
        img: Source image.
        sigma: Standard deviation in [0, 40].
        seed: Generator seed; identical arguments give identical output.
    """
    lo, hi = PARAMETER_RANGES["noise"]
    if not (lo <= sigma <= hi):
        raise ValueError(f"noise sigma must lie in [{lo}, {hi}], got {sigma}")
    if sigma == 0:
        return GrayImage(img.data)
    rng = np.random.default_rng(seed)
    noisy = img.as_float() + rng.normal(0.0, sigma, size=img.data.shape)
    return to_gray(noisy)


# =============================================================================
# Geometric transforms
# =============================================================================

def rect_iou_for_offset(mask_w: int, mask_h: int, d: int) -> float:
    """IoU of a mask_w x mask_h rectangle and its copy shifted by (d, d)."""
    if d >= min(mask_w, mask_h):
        return 0.0
    overlap = (mask_w - d) * (mask_h - d)
    return overlap / (2 * mask_w * mask_h - overlap)


def _mask_dims(width: int, height: int, mask_size) -> tuple[int, int]:
    if mask_size is None:
        return max(1, int(width * DEFAULT_MASK_FRACTION)), max(1, int(height * DEFAULT_MASK_FRACTION))
    if isinstance(mask_size, (int, np.integer)):
        return int(mask_size), int(mask_size)
    mw, mh = mask_size
    return int(mw), int(mh)


def make_translation_masks(
    width: int,
    height: int,
    target_iou: float,
    mask_size: Union[int, tuple[int, int], None] = None,
) -> tuple[RegionMask, RegionMask, GroundTruth2D]:
    """
    Reference mask and a copy pushed toward the lower-right image corner.

    The integer diagonal offset d is found by bisection so that the mask IoU
    is closest to target_iou (ties go to the smaller offset).

    Args:
        width: Image width.
        height: Image height.
        target_iou: Desired IoU in [0.2, 1.0].
        mask_size: Side (int) or (width, height) of the mask; defaults to
            half of each image dimension.

    Returns:
        (ref, test, gt) with gt a pure translation (d, d).

    Raises:
        DegenerateGeometryError: if the mask or the required offset does not fit.
    """
    lo_iou, hi_iou = PARAMETER_RANGES["translation"]
    if not (lo_iou <= target_iou <= hi_iou):
        raise ValueError(f"target IoU must lie in [{lo_iou}, {hi_iou}], got {target_iou}")
    mw, mh = _mask_dims(width, height, mask_size)
    if mw < 1 or mh < 1 or mw > width or mh > height:
        raise DegenerateGeometryError(f"mask {mw}x{mh} does not fit a {width}x{height} image")

    # Smallest d with IoU(d) <= target; IoU is strictly decreasing in d.
    lo, hi = 0, min(mw, mh)
    while lo < hi:
        mid = (lo + hi) // 2
        if rect_iou_for_offset(mw, mh, mid) <= target_iou:
            hi = mid
        else:
            lo = mid + 1
    d = lo
    if d > 0 and abs(rect_iou_for_offset(mw, mh, d - 1) - target_iou) <= abs(
        rect_iou_for_offset(mw, mh, d) - target_iou
    ):
        d -= 1

    if d > min(width - mw, height - mh):
        raise DegenerateGeometryError(
            f"offset {d} for IoU {target_iou} pushes a {mw}x{mh} mask out of a {width}x{height} image"
        )
    # Centre the whole extent a translation case needs (R, T and T shifted by d).
    x0 = max(0, (width - mw - 2 * d) // 2)
    y0 = max(0, (height - mh - 2 * d) // 2)
    ref = RegionMask(x0, y0, x0 + mw, y0 + mh)
    test = ref.shifted(d, d)
    gt = GroundTruth2D(tx=float(d), ty=float(d), cx=(width - 1) / 2.0, cy=(height - 1) / 2.0)
    logger.debug("translation mask: target IoU %.3f -> d=%d (IoU %.4f)", target_iou, d, ref.iou(test))
    return ref, test, gt


def translate_image(img: GrayImage, dx: int, dy: int) -> GrayImage:
    """Shift content by non-negative integer (dx, dy); vacated pixels become 0."""
    out = np.zeros_like(img.data)
    h, w = out.shape
    if dx < w and dy < h:
        out[dy:, dx:] = img.data[: h - dy, : w - dx]
    return GrayImage(out)


def rotation_valid_bitmap(width: int, height: int, angle: float) -> np.ndarray:
    """Test-frame pixels whose inverse-mapped source lies inside the source."""
    sx, sy = rotation_source_coords(width, height, angle)
    eps = 1e-9
    return (sx >= -eps) & (sx <= width - 1 + eps) & (sy >= -eps) & (sy <= height - 1 + eps)


def rotation_overlap_bitmap(width: int, height: int, angle: float) -> np.ndarray:
    """Reference-frame pixels whose rotated position lies inside the test frame."""
    return rotation_valid_bitmap(width, height, -angle)


def rotation_case(img: GrayImage, angle: float) -> tuple[GrayImage, GroundTruth2D, RegionMask]:
    """
    Rotate img about its centre.

    Returns:
        (test image, ground truth, validity mask in the test frame).
    """
    lo, hi = PARAMETER_RANGES["rotation"]
    if not (lo <= angle <= hi):
        raise ValueError(f"rotation angle must lie in [{lo}, {hi}], got {angle}")
    w, h = img.width, img.height
    gt = GroundTruth2D(angle=float(angle), cx=(w - 1) / 2.0, cy=(h - 1) / 2.0)
    valid = RegionMask(0, 0, w, h, rotation_valid_bitmap(w, h, angle))
    return warp_rotate(img, angle), gt, valid


# =============================================================================
# Procedural textures
# =============================================================================

def _stretch(values: np.ndarray) -> GrayImage:
    lo, hi = float(values.min()), float(values.max())
    if hi - lo < 1e-12:
        return to_gray(np.full(values.shape, 128.0))
    return to_gray((values - lo) * (255.0 / (hi - lo)))


def _blobs(width: int, height: int, rng: np.random.Generator) -> np.ndarray:
    canvas = np.zeros((height, width), dtype=np.float64)
    count = max(8, (width * height) // 600)
    for _ in range(count):
        cx, cy = rng.uniform(0, width), rng.uniform(0, height)
        radius = rng.uniform(3.0, 18.0)
        amp = rng.choice((-1.0, 1.0)) * rng.uniform(0.4, 1.0)
        reach = int(radius + 4)
        x0, x1 = max(0, int(cx) - reach), min(width, int(cx) + reach + 1)
        y0, y1 = max(0, int(cy) - reach), min(height, int(cy) + reach + 1)
        if x0 >= x1 or y0 >= y1:
            continue
        yy, xx = np.mgrid[y0:y1, x0:x1]
        # Stretch each blob into an ellipse so corners appear where blobs overlap.
        ex = rng.uniform(0.6, 1.4)
        dist = np.hypot((xx - cx) * ex, (yy - cy) / ex)
        canvas[y0:y1, x0:x1] += amp / (1.0 + np.exp((dist - radius) / 0.8))
    return canvas


def _fractal(width: int, height: int, rng: np.random.Generator) -> np.ndarray:
    total = np.zeros((height, width), dtype=np.float64)
    amplitude = 1.0
    for octave in range(7):
        cells = 4 * 2 ** octave
        if cells > max(width, height):
            break
        grid = rng.standard_normal((cells + 1, cells + 1))
        layer = ndimage.zoom(grid, ((height + 1) / (cells + 1), (width + 1) / (cells + 1)), order=3)
        total += amplitude * layer[:height, :width]
        amplitude *= 0.7
    return total


def _speckle(width: int, height: int, rng: np.random.Generator) -> np.ndarray:
    fine = blur_array(rng.standard_normal((height, width)), 1.2)
    coarse = blur_array(rng.standard_normal((height, width)), 6.0)
    return fine + 4.0 * coarse


def generate_texture(kind: str, width: int, height: int, seed: int) -> GrayImage:
    """
    Procedural ground-like texture using the full gray range.

    Args:
        kind: "blobs", "fractal-noise" or "speckle".
        width: Image width.
        height: Image height.
        seed: Generator seed; output is bit-deterministic per arguments.
    """
    rng = np.random.default_rng([seed, TEXTURE_KINDS.index(kind) if kind in TEXTURE_KINDS else 0])
    if kind == "blobs":
        values = _blobs(width, height, rng)
    elif kind == "fractal-noise":
        values = _fractal(width, height, rng)
    elif kind == "speckle":
        values = _speckle(width, height, rng)
    else:
        raise ConfigError(f"Unknown texture kind: {kind}. Use one of {', '.join(TEXTURE_KINDS)}.")
    return _stretch(values)


# =============================================================================
# Sweeps
# =============================================================================

DEFAULT_SWEEP = {
    "rotation": (15.0, 45.0, 90.0, 135.0, 180.0),
    "translation": (0.2, 0.4, 0.6, 0.8),
    "noise": (10.0, 20.0, 30.0, 40.0),
    "gamma": (0.1, 0.5, 1.5, 2.2, 3.0),
}


def default_sweep(seed: int = 0) -> list[TransformSpec]:
    """The 18-case default grid, kinds in fixed order."""
    specs = []
    for kind in TRANSFORM_KINDS:
        for i, value in enumerate(DEFAULT_SWEEP[kind]):
            specs.append(TransformSpec(kind, value, seed + i if kind == "noise" else 0))
    return specs


def transform_suite(
    spec_list: Sequence[TransformSpec], width: int = 512, height: int = 512
) -> list[SyntheticCase]:
    """
    Expand transform specs into cases (spec, ground truth, test mask).

    The mask is the region of the reference frame that the test image
    covers: the shifted mask for translation, the rotated-frame overlap for
    rotation and the full frame otherwise.
    """
    cases = []
    for spec in spec_list:
        if not isinstance(spec, TransformSpec):
            raise ConfigError(f"expected TransformSpec, got {type(spec).__name__}")
        if spec.kind == "translation":
            _, test, gt = make_translation_masks(width, height, spec.parameter)
            cases.append(SyntheticCase(spec, gt, test))
        elif spec.kind == "rotation":
            gt = GroundTruth2D(angle=spec.parameter, cx=(width - 1) / 2.0, cy=(height - 1) / 2.0)
            mask = RegionMask(0, 0, width, height, rotation_overlap_bitmap(width, height, spec.parameter))
            cases.append(SyntheticCase(spec, gt, mask))
        else:
            cases.append(SyntheticCase(spec, GroundTruth2D.identity(width, height), RegionMask.full(width, height)))
    return cases


def realize_case(img: GrayImage, spec: TransformSpec, mask_size=None) -> CasePair:
    """Apply spec to img and return the pair with detection and scoring masks."""
    w, h = img.width, img.height
    full = RegionMask.full(w, h)
    if spec.kind == "rotation":
        test_img, gt, valid = rotation_case(img, spec.parameter)
        overlap = RegionMask(0, 0, w, h, rotation_overlap_bitmap(w, h, spec.parameter))
        return CasePair(spec, img, test_img, gt, full, valid, full, overlap)
    if spec.kind == "translation":
        ref, test, gt = make_translation_masks(w, h, spec.parameter, mask_size)
        d = int(gt.tx)
        test_img = translate_image(img, d, d)
        # The test window covers source region T; in the test frame it sits at T + d.
        window = test.shifted(d, d).clipped(w, h)
        scored = window.shifted(-d, -d)
        return CasePair(spec, img, test_img, gt, ref, window, ref, scored)
    if spec.kind == "noise":
        test_img = apply_noise(img, spec.parameter, spec.seed)
    else:
        test_img = apply_gamma(img, spec.parameter)
    return CasePair(spec, img, test_img, GroundTruth2D.identity(w, h), full, full, full, full)


class PoseCase(NamedTuple):
    """A reference map and one noisy camera view of it."""

    spec: TransformSpec
    ref_img: GrayImage
    test_img: GrayImage
    gt: GroundTruth2D


def realize_pose_case(
    img: GrayImage,
    spec: TransformSpec,
    noise_sigma: float = POSE_NOISE_SIGMA,
    seed: int = 0,
    mask_size=None,
) -> PoseCase:
    """
    Build a pose pair from a geometric spec.

    The whole of img is the reference map. A translation view is the test
    window of the translation case cropped out of the map, so it only sees
    part of it; a rotation view is the full rotated frame. Both views carry
    Gaussian noise of noise_sigma drawn from seed.

    Raises:
        ConfigError: if spec is not a translation or rotation.
    """
    w, h = img.width, img.height
    if spec.kind == "translation":
        _, window, _ = make_translation_masks(w, h, spec.parameter, mask_size)
        view = GrayImage(img.data[window.y0:window.y1, window.x0:window.x1])
        gt = GroundTruth2D(tx=-float(window.x0), ty=-float(window.y0), cx=(w - 1) / 2.0, cy=(h - 1) / 2.0)
    elif spec.kind == "rotation":
        view, gt, _ = rotation_case(img, spec.parameter)
    else:
        raise ConfigError(f"pose pairs need a translation or rotation, got {spec.kind}")
    return PoseCase(spec, img, apply_noise(view, noise_sigma, seed), gt)
