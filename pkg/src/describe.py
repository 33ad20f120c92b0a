"""
Keypoint descriptors: BRIEF (plain and steered), LATCH and a 4x4x8
gradient-orientation histogram.

Every describe_* function returns (keypoint, descriptor) pairs in input
order; binary descriptors drop keypoints whose sampling pattern leaves the
image.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np

from src.detect import Keypoint
from src.errors import ConfigError
from src.imgcore import GrayImage, gaussian_blur, gradient_arrays, screen_rotation

logger = logging.getLogger(__name__)

DESCRIPTOR_BITS = 256
BRIEF_PATCH = 31
GRADHIST_CELLS = 4
GRADHIST_BINS = 8
GRADHIST_CLAMP = 0.2
DEFAULT_PATTERN_SEED = 20190527

Feature = tuple[Keypoint, "Descriptor"]


@dataclass(frozen=True, eq=False)
class Descriptor:
    """
    Binary descriptors hold 256 bits packed into 32 uint8 bytes; real
    descriptors hold 128 float32 values.
    """

    kind: str
    data: np.ndarray

    def __post_init__(self):
        if self.kind == "binary":
            arr = np.asarray(self.data, dtype=np.uint8)
            if arr.shape != (DESCRIPTOR_BITS // 8,):
                raise ValueError(f"binary descriptor needs {DESCRIPTOR_BITS // 8} bytes, got shape {arr.shape}")
        elif self.kind == "real":
            arr = np.asarray(self.data, dtype=np.float32)
            if arr.ndim != 1:
                raise ValueError("real descriptor must be one-dimensional")
        else:
            raise ValueError(f"descriptor kind must be 'binary' or 'real', got {self.kind!r}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_bits(cls, bits) -> "Descriptor":
        return cls("binary", np.packbits(np.asarray(bits, dtype=bool)))

    @property
    def metric(self) -> str:
        return "hamming" if self.kind == "binary" else "euclidean"

    @property
    def bits(self) -> np.ndarray:
        if self.kind != "binary":
            raise ValueError("real descriptors have no bit view")
        return np.unpackbits(self.data).astype(bool)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Descriptor):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.data, other.data)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class BriefPattern:
    """256 sampling pairs (x1, y1, x2, y2) inside the 31x31 patch."""

    pairs: np.ndarray
    seed: int

    @property
    def points(self) -> np.ndarray:
        """All 512 sampling points, shape (512, 2)."""
        return self.pairs.reshape(-1, 2)


@dataclass(frozen=True)
class DescriptorConfig:
    pattern_seed: int = DEFAULT_PATTERN_SEED
    blur_sigma: float = 2.0
    latch_window: int = 48
    latch_patch: int = 7

    def __post_init__(self):
        if self.blur_sigma <= 0:
            raise ConfigError(f"blur_sigma must be positive, got {self.blur_sigma}")
        if self.latch_patch < 1 or self.latch_patch % 2 == 0:
            raise ConfigError(f"latch_patch must be a positive odd size, got {self.latch_patch}")
        if self.latch_window < 2 * self.latch_patch:
            raise ConfigError("latch_window must hold at least two mini-patches")


@lru_cache(maxsize=8)
def brief_pattern(seed: int = DEFAULT_PATTERN_SEED) -> BriefPattern:
    """Isotropic Gaussian pairs (sigma = 31 / 5), rounded and clamped to [-15, 15]."""
    half = BRIEF_PATCH // 2
    rng = np.random.default_rng(seed)
    raw = rng.normal(0.0, BRIEF_PATCH / 5.0, size=(DESCRIPTOR_BITS, 4))
    pairs = np.clip(np.rint(raw), -half, half).astype(np.int64)
    pairs.setflags(write=False)
    return BriefPattern(pairs, seed)


def _placed_offsets(offsets: np.ndarray, kp: Keypoint, steered: bool) -> np.ndarray:
    """Integer pixel coordinates of pattern offsets (..., 2) for kp."""
    if steered and kp.angle is not None:
        offsets = offsets @ screen_rotation(kp.angle).T
    center = np.array([math.floor(kp.x + 0.5), math.floor(kp.y + 0.5)])
    return np.rint(offsets).astype(np.int64) + center


def _inside(coords: np.ndarray, width: int, height: int) -> bool:
    xs, ys = coords[..., 0], coords[..., 1]
    return bool(xs.min() >= 0 and ys.min() >= 0 and xs.max() < width and ys.max() < height)


def describe_brief(
    img: GrayImage,
    kps: list[Keypoint],
    pattern: Optional[BriefPattern] = None,
    steered: bool = False,
    blur_sigma: float = 2.0,
) -> list[Feature]:
    """
    BRIEF: bit i is 1 iff the smoothed intensity at the first point of pair i
    is strictly below that at the second.

    With steered=True the pattern is rotated by each keypoint's angle
    (keypoints without an angle use the unrotated pattern).
    """
    pattern = pattern or brief_pattern()
    smooth = gaussian_blur(img, blur_sigma).data
    h, w = smooth.shape
    offsets = pattern.pairs.reshape(-1, 2, 2).astype(np.float64)
    out = []
    for kp in kps:
        coords = _placed_offsets(offsets, kp, steered)
        if not _inside(coords, w, h):
            continue
        v1 = smooth[coords[:, 0, 1], coords[:, 0, 0]]
        v2 = smooth[coords[:, 1, 1], coords[:, 1, 0]]
        out.append((kp, Descriptor.from_bits(v1 < v2)))
    return out


@lru_cache(maxsize=8)
def latch_triplets(seed: int = DEFAULT_PATTERN_SEED, window: int = 48, patch: int = 7) -> np.ndarray:
    """
    Mini-patch centres for LATCH, shape (256, 3, 2): anchor, first and
    second companion. Every mini-patch lies inside the window.
    """
    half_window = window // 2
    half_patch = patch // 2
    lo, hi = -half_window + half_patch, half_window - half_patch - 1
    rng = np.random.default_rng([seed, window, patch])
    triplets = rng.integers(lo, hi + 1, size=(DESCRIPTOR_BITS, 3, 2))
    triplets.setflags(write=False)
    return triplets


def describe_latch(
    img: GrayImage,
    kps: list[Keypoint],
    seed: int = DEFAULT_PATTERN_SEED,
    window: int = 48,
    patch: int = 7,
    blur_sigma: float = 2.0,
) -> list[Feature]:
    """
    LATCH: bit i is 1 iff the anchor mini-patch is strictly closer (SSD) to
    the first companion than to the second. Patches are steered when the
    keypoint has an angle.
    """
    smooth = gaussian_blur(img, blur_sigma).data
    h, w = smooth.shape
    half_patch = patch // 2
    dy, dx = np.mgrid[-half_patch:half_patch + 1, -half_patch:half_patch + 1]
    inner = np.stack([dx.ravel(), dy.ravel()], axis=-1)
    # (256, 3, patch*patch, 2) sampling offsets around the keypoint
    offsets = (latch_triplets(seed, window, patch)[:, :, None, :] + inner[None, None, :, :]).astype(np.float64)
    out = []
    for kp in kps:
        coords = _placed_offsets(offsets, kp, steered=True)
        if not _inside(coords, w, h):
            continue
        values = smooth[coords[..., 1], coords[..., 0]]
        anchor, first, second = values[:, 0], values[:, 1], values[:, 2]
        ssd_first = ((anchor - first) ** 2).sum(axis=1)
        ssd_second = ((anchor - second) ** 2).sum(axis=1)
        out.append((kp, Descriptor.from_bits(ssd_first < ssd_second)))
    return out


def clamp_normalize(values: np.ndarray, clamp: float = GRADHIST_CLAMP) -> np.ndarray:
    """
    Unit-norm vector with every component at most clamp.

    Components above clamp are pinned to it and the rest rescaled until the
    norm is one again. That needs at least ceil(1 / clamp^2) non-zero
    components; with fewer no unit vector fits under clamp, so the
    normalised vector is clamped and its norm stays below one. All-zero
    input stays zero.
    """
    v = np.asarray(values, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return np.zeros_like(v)
    v = v / norm
    if v.max() <= clamp:
        return v
    nonzero = int(np.count_nonzero(v))
    if nonzero * clamp * clamp < 1.0:
        return np.minimum(v, clamp)
    ordered = np.sort(v)[::-1]
    tail = np.cumsum((ordered ** 2)[::-1])[::-1]
    for k in range(nonzero):
        budget = 1.0 - k * clamp * clamp
        if budget <= 0 or tail[k] <= 0:
            break
        scale = math.sqrt(budget / tail[k])
        if scale * ordered[k] <= clamp:
            return np.minimum(v * scale, clamp)
    return np.minimum(v, clamp)


def _grad_hist_one(gx: np.ndarray, gy: np.ndarray, kp: Keypoint) -> np.ndarray:
    h, w = gx.shape
    radius = 1.5 * kp.size
    theta = kp.angle or 0.0
    c, s = math.cos(math.radians(theta)), math.sin(math.radians(theta))
    reach = int(math.ceil(radius * math.sqrt(2.0))) + 1
    xi, yi = int(math.floor(kp.x + 0.5)), int(math.floor(kp.y + 0.5))
    x0, x1 = max(0, xi - reach), min(w, xi + reach + 1)
    y0, y1 = max(0, yi - reach), min(h, yi + reach + 1)
    hist = np.zeros((GRADHIST_CELLS + 2, GRADHIST_CELLS + 2, GRADHIST_BINS))
    if x0 >= x1 or y0 >= y1:
        return np.zeros(GRADHIST_CELLS * GRADHIST_CELLS * GRADHIST_BINS)

    yy, xx = np.mgrid[y0:y1, x0:x1]
    dx, dy = xx - kp.x, yy - kp.y
    # Keypoint frame: u along the keypoint direction (c, -s), v along (s, c).
    u = dx * c - dy * s
    v = dx * s + dy * c
    inside = (np.abs(u) < radius) & (np.abs(v) < radius)
    pgx, pgy = gx[y0:y1, x0:x1][inside], gy[y0:y1, x0:x1][inside]
    u, v = u[inside], v[inside]
    weight = np.exp(-(u * u + v * v) / (2.0 * radius * radius))
    magnitude = np.hypot(pgx, pgy) * weight
    relative = (np.degrees(np.arctan2(-pgy, pgx)) - theta) % 360.0

    cell = 2.0 * radius / GRADHIST_CELLS
    bu = (u + radius) / cell - 0.5
    bv = (v + radius) / cell - 0.5
    bo = relative / (360.0 / GRADHIST_BINS)
    iu, iv, io = np.floor(bu).astype(np.int64), np.floor(bv).astype(np.int64), np.floor(bo).astype(np.int64)
    fu, fv, fo = bu - iu, bv - iv, bo - io
    for du, wu in ((0, 1 - fu), (1, fu)):
        for dv, wv in ((0, 1 - fv), (1, fv)):
            for do, wo in ((0, 1 - fo), (1, fo)):
                np.add.at(hist, (iv + dv + 1, iu + du + 1, (io + do) % GRADHIST_BINS), magnitude * wu * wv * wo)
    return hist[1:-1, 1:-1].ravel()


def describe_grad_hist(img: GrayImage, kps: list[Keypoint]) -> list[Feature]:
    """
    Gradient-orientation histogram: 4x4 cells x 8 bins over a square of
    half-width 1.5 * size in the keypoint frame, trilinear binning and
    Gaussian weighting, then unit norm with components clamped at 0.2.
    """
    gx, gy = gradient_arrays(img.as_float())
    out = []
    for kp in kps:
        values = clamp_normalize(_grad_hist_one(gx, gy, kp))
        out.append((kp, Descriptor("real", values.astype(np.float32))))
    return out


# =============================================================================
# Dispatch
# =============================================================================

DESCRIPTOR_NAMES = ("brief", "brief-steered", "latch", "gradhist")


def describe_keypoints(
    name: str, img: GrayImage, kps: list[Keypoint], cfg: Optional[DescriptorConfig] = None
) -> list[Feature]:
    """Run the descriptor registered under name."""
    cfg = cfg or DescriptorConfig()
    if name == "brief":
        return describe_brief(img, kps, brief_pattern(cfg.pattern_seed), False, cfg.blur_sigma)
    if name == "brief-steered":
        return describe_brief(img, kps, brief_pattern(cfg.pattern_seed), True, cfg.blur_sigma)
    if name == "latch":
        return describe_latch(img, kps, cfg.pattern_seed, cfg.latch_window, cfg.latch_patch, cfg.blur_sigma)
    if name == "gradhist":
        return describe_grad_hist(img, kps)
    raise ConfigError(f"Unknown descriptor: {name}. Use one of {', '.join(DESCRIPTOR_NAMES)}.")


def descriptor_kind(name: str) -> str:
    if name not in DESCRIPTOR_NAMES:
        raise ConfigError(f"Unknown descriptor: {name}. Use one of {', '.join(DESCRIPTOR_NAMES)}.")
    return "real" if name == "gradhist" else "binary"


def stack_descriptors(descriptors: Iterable[Descriptor], kind: Optional[str] = None) -> np.ndarray:
    """
    Stack descriptors into one 2-D array (packed bytes or float32 rows).

    Raises:
        ValueError: on mixed kinds.
    """
    descriptors = list(descriptors)
    if not descriptors:
        if kind == "real":
            return np.zeros((0, GRADHIST_CELLS * GRADHIST_CELLS * GRADHIST_BINS), dtype=np.float32)
        return np.zeros((0, DESCRIPTOR_BITS // 8), dtype=np.uint8)
    first = kind or descriptors[0].kind
    if any(d.kind != first for d in descriptors):
        raise ValueError("cannot stack binary and real descriptors together")
    return np.stack([d.data for d in descriptors])
