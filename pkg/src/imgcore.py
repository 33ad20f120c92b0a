"""
Image representation, PGM I/O and the shared low-level kernels.

Every raster in groundloc is a 2-D numpy array wrapped in GrayImage (uint8)
or FloatImage (float64). Rows are y, columns are x, origin at the top-left
pixel centre.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from scipy import ndimage

from src.errors import DataError, PgmFormatError
from src.utils import atomic_write_bytes

logger = logging.getLogger(__name__)

_WHITESPACE = frozenset(b" \t\r\n\x0b\x0c")
_HASH = ord("#")


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit single-channel raster; data has shape (height, width)."""

    data: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.data)
        if raw.ndim != 2:
            raise ValueError(f"GrayImage needs a 2-D array, got shape {raw.shape}")
        if raw.shape[0] < 1 or raw.shape[1] < 1:
            raise ValueError("GrayImage width and height must be >= 1")
        if raw.dtype != np.uint8:
            if raw.size and (raw.min() < 0 or raw.max() > 255):
                raise ValueError("GrayImage values must lie in [0, 255]")
        object.__setattr__(self, "data", _frozen_array(raw, np.uint8))

    @classmethod
    def from_values(cls, width: int, height: int, values) -> "GrayImage":
        """Build an image from a flat row-major sequence."""
        flat = np.asarray(values)
        if flat.size != width * height:
            raise ValueError(f"expected {width * height} values, got {flat.size}")
        return cls(flat.reshape(height, width))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def as_float(self) -> np.ndarray:
        return self.data.astype(np.float64)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class FloatImage:
    """Real-valued raster used for scale-space levels and gradients."""

    data: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.data, dtype=np.float64)
        if raw.ndim != 2:
            raise ValueError(f"FloatImage needs a 2-D array, got shape {raw.shape}")
        object.__setattr__(self, "data", _frozen_array(raw, np.float64))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    __hash__ = None


ImageLike = Union[GrayImage, FloatImage]


def _as_array(img: ImageLike) -> np.ndarray:
    if isinstance(img, GrayImage):
        return img.as_float()
    if isinstance(img, FloatImage):
        return img.data
    return np.asarray(img, dtype=np.float64)


def to_gray(img: ImageLike) -> GrayImage:
    """Clamp to [0, 255] and round half up."""
    arr = _as_array(img)
    return GrayImage(np.floor(np.clip(arr, 0.0, 255.0) + 0.5).astype(np.uint8))


# =============================================================================
# PGM I/O
# =============================================================================

def _next_token(raw: bytes, pos: int) -> tuple[bytes, int]:
    """Read one header token, skipping whitespace and '#' comments."""
    n = len(raw)
    while pos < n:
        ch = raw[pos]
        if ch == _HASH:
            while pos < n and raw[pos] not in (0x0A, 0x0D):
                pos += 1
        elif ch in _WHITESPACE:
            pos += 1
        else:
            break
    start = pos
    while pos < n and raw[pos] not in _WHITESPACE and raw[pos] != _HASH:
        pos += 1
    return raw[start:pos], pos


def load_pgm(path: Union[str, Path]) -> GrayImage:
    """
    Read a binary (P5) or ASCII (P2) PGM file.

    Pixel values are returned exactly as stored; a maxval below 255 is not
    rescaled.

    Raises:
        DataError: if the file cannot be read.
        PgmFormatError: on a malformed header, maxval > 255 or a truncated payload.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise DataError(f"cannot read image {path}: {e}") from e
    magic = raw[:2]
    if magic not in (b"P5", b"P2"):
        raise PgmFormatError(f"malformed header: bad magic {magic!r} in {path}")

    fields = []
    pos = 2
    for _ in range(3):
        token, pos = _next_token(raw, pos)
        if not token.isdigit():
            raise PgmFormatError(f"malformed header: expected integer, got {token!r} in {path}")
        fields.append(int(token))
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise PgmFormatError(f"malformed header: bad dimensions {width}x{height} in {path}")
    if maxval < 1 or maxval > 255:
        raise PgmFormatError(f"unsupported maxval {maxval} in {path}")

    count = width * height
    if magic == b"P5":
        # Exactly one whitespace byte separates maxval from the raster.
        if pos >= len(raw) or raw[pos] not in _WHITESPACE:
            raise PgmFormatError(f"truncated payload: no raster after header in {path}")
        payload = raw[pos + 1:pos + 1 + count]
        if len(payload) < count:
            raise PgmFormatError(
                f"truncated payload: expected {count} bytes, got {len(payload)} in {path}"
            )
        values = np.frombuffer(payload, dtype=np.uint8)
    else:
        values = []
        while len(values) < count:
            token, pos = _next_token(raw, pos)
            if not token:
                break
            if not token.isdigit():
                raise PgmFormatError(f"malformed header: non-numeric sample {token!r} in {path}")
            values.append(int(token))
        if len(values) < count:
            raise PgmFormatError(
                f"truncated payload: expected {count} samples, got {len(values)} in {path}"
            )
        values = np.asarray(values)
    if values.max(initial=0) > maxval:
        raise PgmFormatError(f"malformed header: sample exceeds maxval {maxval} in {path}")

    logger.debug("Loaded %s (%dx%d, %s)", path, width, height, magic.decode())
    return GrayImage(values.reshape(height, width))


def save_pgm(img: GrayImage, path: Union[str, Path]) -> None:
    """Write img as binary P5 with maxval 255."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    atomic_write_bytes(path, header + img.data.tobytes())


# =============================================================================
# Kernels
# =============================================================================

@dataclass(frozen=True, eq=False)
class IntegralImage:
    """
    Summed-area table of shape (height + 1, width + 1).

    Entry [y, x] holds the sum of all source pixels with row < y and
    column < x; row 0 and column 0 are zero.
    """

    table: np.ndarray

    @property
    def width(self) -> int:
        return self.table.shape[1] - 1

    @property
    def height(self) -> int:
        return self.table.shape[0] - 1

    def box_sum(self, x0: int, y0: int, x1: int, y1: int) -> int:
        """Sum over the half-open box [x0, x1) x [y0, y1)."""
        if not (0 <= x0 <= x1 <= self.width and 0 <= y0 <= y1 <= self.height):
            raise ValueError(f"box ({x0},{y0})-({x1},{y1}) outside {self.width}x{self.height}")
        t = self.table
        return int(t[y1, x1] - t[y0, x1] - t[y1, x0] + t[y0, x0])

    def box_sums(self, x0, y0, x1, y1) -> np.ndarray:
        """Vectorised box_sum over index arrays (no bounds checking)."""
        t = self.table
        return t[y1, x1] - t[y0, x1] - t[y1, x0] + t[y0, x0]


def integral(img: ImageLike) -> IntegralImage:
    """Build the integral image; uint8 input accumulates in int64."""
    if isinstance(img, GrayImage):
        src = img.data.astype(np.int64)
        dtype = np.int64
    else:
        src = _as_array(img)
        dtype = np.float64
    table = np.zeros((src.shape[0] + 1, src.shape[1] + 1), dtype=dtype)
    np.cumsum(np.cumsum(src, axis=0), axis=1, out=table[1:, 1:])
    table.setflags(write=False)
    return IntegralImage(table)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalised 1-D Gaussian of radius ceil(3 * sigma)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def blur_array(arr: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur of a raw array with replicated borders."""
    k = gaussian_kernel(sigma)
    out = ndimage.correlate1d(np.asarray(arr, dtype=np.float64), k, axis=0, mode="nearest")
    return ndimage.correlate1d(out, k, axis=1, mode="nearest")


def gaussian_blur(img: ImageLike, sigma: float) -> FloatImage:
    """
    Blur with a normalised Gaussian kernel of radius ceil(3 * sigma).

    Args:
        img: Gray or float image.
        sigma: Standard deviation in pixels, must be > 0.

    Returns:
        Blurred FloatImage; borders replicate edge pixels.
    """
    return FloatImage(blur_array(_as_array(img), sigma))


def gradient_arrays(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sobel derivatives (1-2-1 smoothing, -1-0-1 difference) of a raw array."""
    arr = np.asarray(arr, dtype=np.float64)
    gx = ndimage.sobel(arr, axis=1, mode="nearest")
    gy = ndimage.sobel(arr, axis=0, mode="nearest")
    return gx, gy


def gradients(img: ImageLike) -> tuple[FloatImage, FloatImage]:
    """Sobel gradients (gx, gy); gx grows with intensity to the right, gy downward."""
    arr = _as_array(img)
    if arr.shape[0] < 3 or arr.shape[1] < 3:
        raise ValueError(f"gradients need an image of at least 3x3, got {arr.shape[1]}x{arr.shape[0]}")
    gx, gy = gradient_arrays(arr)
    return FloatImage(gx), FloatImage(gy)


# =============================================================================
# Geometry
# =============================================================================

def screen_rotation(angle_deg: float) -> np.ndarray:
    """
    2x2 rotation that turns content counter-clockwise as seen on screen.

    In raster coordinates (y down) this is [[cos, sin], [-sin, cos]].
    """
    a = math.radians(angle_deg)
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, s], [-s, c]])


def _catmull_rom_weights(t: np.ndarray) -> tuple[np.ndarray, ...]:
    # Keys cubic with a = -0.5
    t2 = t * t
    t3 = t2 * t
    w0 = -0.5 * t3 + t2 - 0.5 * t
    w1 = 1.5 * t3 - 2.5 * t2 + 1.0
    w2 = -1.5 * t3 + 2.0 * t2 + 0.5 * t
    w3 = 0.5 * t3 - 0.5 * t2
    return w0, w1, w2, w3


def sample_bicubic(arr: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Catmull-Rom interpolation of arr at real coordinates.

    Returns:
        (values, inside) where inside flags coordinates within the pixel
        grid [0, w-1] x [0, h-1]; values outside are 0.
    """
    h, w = arr.shape
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    # Snap float noise so integer sample points stay exact.
    xs = np.where(np.abs(xs - np.round(xs)) < 1e-9, np.round(xs), xs)
    ys = np.where(np.abs(ys - np.round(ys)) < 1e-9, np.round(ys), ys)
    inside = (xs >= 0) & (xs <= w - 1) & (ys >= 0) & (ys <= h - 1)

    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    wx = _catmull_rom_weights(xs - x0)
    wy = _catmull_rom_weights(ys - y0)

    out = np.zeros(xs.shape, dtype=np.float64)
    for j in range(4):
        yy = np.clip(y0 + j - 1, 0, h - 1)
        row = np.zeros(xs.shape, dtype=np.float64)
        for i in range(4):
            xx = np.clip(x0 + i - 1, 0, w - 1)
            row += wx[i] * arr[yy, xx]
        out += wy[j] * row
    return np.where(inside, out, 0.0), inside


def rotation_source_coords(width: int, height: int, angle_deg: float) -> tuple[np.ndarray, np.ndarray]:
    """Source coordinates that warp_rotate samples for every output pixel."""
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    inv = screen_rotation(angle_deg).T
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    dx, dy = xx - cx, yy - cy
    sx = inv[0, 0] * dx + inv[0, 1] * dy + cx
    sy = inv[1, 0] * dx + inv[1, 1] * dy + cy
    return sx, sy


def warp_rotate(img: GrayImage, angle_deg: float, interp: str = "bicubic") -> GrayImage:
    """
    Rotate img about its centre ((w-1)/2, (h-1)/2), same output size.

    Args:
        img: Source image.
        angle_deg: Counter-clockwise angle as seen on screen.
        interp: Only "bicubic" (Catmull-Rom) is supported.

    Returns:
        Rotated image; samples from outside the source are 0.
    """
    if interp != "bicubic":
        raise ValueError(f"Unsupported interpolation: {interp}. Use 'bicubic'.")
    if angle_deg % 360 == 0:
        return GrayImage(img.data)
    sx, sy = rotation_source_coords(img.width, img.height, angle_deg)
    values, _ = sample_bicubic(img.as_float(), sx, sy)
    return to_gray(values)
