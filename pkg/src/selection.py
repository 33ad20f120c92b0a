"""
Keypoint budget selectors: top-N by response, suppression via square
covering (SSC) and grid bucketing.

Selectors never create or alter keypoints; they return a subset of their
input ordered by (response descending, y, x) unless stated otherwise.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from src.detect import Keypoint, sort_keypoints
from src.errors import ConfigError

logger = logging.getLogger(__name__)

SELECTION_METHODS = ("nms", "ssc", "bucketing")
SSC_MAX_STEPS = 40


@dataclass(frozen=True)
class SelectorConfig:
    method: str = "nms"
    n_target: int = 1000
    ssc_tolerance: float = 0.20
    grid_rows: int = 8
    grid_cols: int = 6
    per_cell: int = 21

    def __post_init__(self):
        if self.method not in SELECTION_METHODS:
            raise ConfigError(f"Unknown selection method: {self.method}. Use one of {', '.join(SELECTION_METHODS)}.")
        if self.n_target < 1:
            raise ConfigError(f"n_target must be >= 1, got {self.n_target}")
        if not 0 < self.ssc_tolerance < 1:
            raise ConfigError(f"ssc_tolerance must lie in (0, 1), got {self.ssc_tolerance}")
        if self.grid_rows < 1 or self.grid_cols < 1 or self.per_cell < 1:
            raise ConfigError("grid_rows, grid_cols and per_cell must be >= 1")

    @property
    def label(self) -> str:
        return self.method


class SscResult(NamedTuple):
    keypoints: list[Keypoint]
    radius: float
    converged: bool


def select_nms(kps: list[Keypoint], n: int) -> list[Keypoint]:
    """The n strongest keypoints; ties go to the smaller (y, x)."""
    return sort_keypoints(kps)[:max(n, 0)]


def _suppress(ordered: list[Keypoint], r: float) -> list[Keypoint]:
    """Greedy acceptance in order; a keypoint is dropped if an accepted one lies within L-inf < r."""
    if r <= 0:
        return list(ordered)
    grid: dict[tuple[int, int], list[tuple[float, float]]] = {}
    accepted = []
    for kp in ordered:
        cx, cy = math.floor(kp.x / r), math.floor(kp.y / r)
        blocked = False
        for gx in (cx - 1, cx, cx + 1):
            for gy in (cy - 1, cy, cy + 1):
                for ax, ay in grid.get((gx, gy), ()):
                    if abs(ax - kp.x) < r and abs(ay - kp.y) < r:
                        blocked = True
                        break
                if blocked:
                    break
            if blocked:
                break
        if not blocked:
            grid.setdefault((cx, cy), []).append((kp.x, kp.y))
            accepted.append(kp)
    return accepted


def select_ssc_detailed(kps: list[Keypoint], n: int, tolerance: float, width: int, height: int) -> SscResult:
    """
    Suppression via square covering with a binary search over the radius.

    The search runs over real radii in [1, max(width, height)] and stops at
    the first radius whose accepted count k satisfies n <= k <= n * (1 + tolerance).
    When no radius reaches that window the result with the count closest to
    n is returned and `converged` is False.
    """
    ordered = sort_keypoints(kps)
    if len(ordered) <= n:
        return SscResult(ordered, 0.0, True)
    upper = n * (1.0 + tolerance)
    lo, hi = 1.0, float(max(width, height, 1))
    best = None
    for _ in range(SSC_MAX_STEPS):
        r = 0.5 * (lo + hi)
        chosen = _suppress(ordered, r)
        k = len(chosen)
        if best is None or abs(k - n) < abs(len(best[0]) - n):
            best = (chosen, r)
        if n <= k <= upper:
            return SscResult(chosen, r, True)
        if k < n:
            hi = r
        else:
            lo = r
        if hi - lo < 1e-6:
            break
    chosen, r = best
    logger.warning("SSC did not reach [%d, %d] keypoints; returning %d at radius %.3f", n, int(upper), len(chosen), r)
    return SscResult(chosen, r, False)


def select_ssc(kps: list[Keypoint], n: int, tolerance: float, width: int, height: int) -> list[Keypoint]:
    return select_ssc_detailed(kps, n, tolerance, width, height).keypoints


def _cell_index(coord: np.ndarray, cell: int, count: int) -> np.ndarray:
    idx = np.floor(coord + 0.5).astype(np.int64) // max(cell, 1)
    return np.clip(idx, 0, count - 1)


def select_bucketing(
    kps: list[Keypoint], rows: int, cols: int, per_cell: int, width: int, height: int
) -> list[Keypoint]:
    """
    Per-cell top-N over a rows x cols grid; the last row and column absorb
    the remainder. Cells are concatenated in row-major order.
    """
    if rows < 1 or cols < 1:
        raise ConfigError("bucketing needs rows >= 1 and cols >= 1")
    if not kps:
        return []
    xs = np.array([kp.x for kp in kps])
    ys = np.array([kp.y for kp in kps])
    col = _cell_index(xs, width // cols, cols)
    row = _cell_index(ys, height // rows, rows)
    cells: dict[tuple[int, int], list[Keypoint]] = {}
    for kp, r, c in zip(kps, row, col):
        cells.setdefault((int(r), int(c)), []).append(kp)
    out = []
    for r in range(rows):
        for c in range(cols):
            out.extend(select_nms(cells.get((r, c), []), per_cell))
    return out


def select_keypoints(kps: list[Keypoint], cfg: SelectorConfig, width: int, height: int) -> list[Keypoint]:
    """Apply the selector named by cfg.method."""
    if cfg.method == "nms":
        return select_nms(kps, cfg.n_target)
    if cfg.method == "ssc":
        return select_ssc(kps, cfg.n_target, cfg.ssc_tolerance, width, height)
    return select_bucketing(kps, cfg.grid_rows, cfg.grid_cols, cfg.per_cell, width, height)
