"""
Pair manifests: one evaluation pair per line,

    ref_path<TAB>test_path<TAB>angle_deg<TAB>tx<TAB>ty<TAB>scale<TAB>tag

Ground-truth fields may be "NA" (all four together) for rows that are not
scored for pose. Relative paths resolve against the manifest's directory.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from src.errors import ConfigError, DataError
from src.synth import GroundTruth2D
from src.utils import atomic_write_text

logger = logging.getLogger(__name__)

PAIR_TAGS = ("incremental", "absolute", "synthetic")
MANIFEST_COLUMNS = ("ref_path", "test_path", "angle_deg", "tx", "ty", "scale", "tag")


@dataclass(frozen=True)
class PairRow:
    """
    One manifest row. The pose (angle, tx, ty, scale) maps reference pixels
    to test pixels, rotating about the image centre.
    """

    ref_path: str
    test_path: str
    angle: Optional[float]
    tx: Optional[float]
    ty: Optional[float]
    scale: Optional[float]
    tag: str

    @property
    def has_gt(self) -> bool:
        return self.angle is not None

    def ground_truth(self, width: int, height: int) -> Optional[GroundTruth2D]:
        """Ground truth pivoting on the centre of a width x height image."""
        if not self.has_gt:
            return None
        return GroundTruth2D(
            angle=self.angle, tx=self.tx, ty=self.ty, scale=self.scale,
            cx=(width - 1) / 2.0, cy=(height - 1) / 2.0,
        )


@dataclass(frozen=True)
class PairManifest:
    rows: tuple[PairRow, ...]
    base_dir: Optional[str] = None

    def __len__(self) -> int:
        return len(self.rows)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        if p.is_absolute() or self.base_dir is None:
            return p
        return Path(self.base_dir) / p

    def require_gt(self) -> None:
        """Pose scoring needs ground truth on every row."""
        for i, row in enumerate(self.rows, start=1):
            if not row.has_gt:
                raise ConfigError(f"manifest row {i} ({row.ref_path}) has no ground truth")


def _parse_float(text: str, lineno: int, name: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"manifest line {lineno}: invalid {name} {text!r}") from None
    if not math.isfinite(value):
        raise DataError(f"manifest line {lineno}: {name} must be finite")
    return value


def parse_manifest(text: str, base_dir: Optional[Union[str, Path]] = None) -> PairManifest:
    """
    Parse manifest text. Blank lines and lines starting with '#' are skipped.

    Raises:
        DataError: malformed rows.
        ConfigError: unknown tags.
    """
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = [c.strip() for c in line.rstrip("\r\n").split("\t")]
        if len(cols) != len(MANIFEST_COLUMNS):
            raise DataError(f"manifest line {lineno}: expected {len(MANIFEST_COLUMNS)} tab-separated fields, got {len(cols)}")
        ref, test, angle, tx, ty, scale, tag = cols
        if tag not in PAIR_TAGS:
            raise ConfigError(f"manifest line {lineno}: unknown tag {tag!r}. Use one of {', '.join(PAIR_TAGS)}.")
        gt_fields = (angle, tx, ty, scale)
        missing = [f.upper() == "NA" for f in gt_fields]
        if all(missing):
            rows.append(PairRow(ref, test, None, None, None, None, tag))
            continue
        if any(missing):
            raise DataError(f"manifest line {lineno}: ground truth must be given completely or as NA")
        values = [_parse_float(v, lineno, n) for v, n in zip(gt_fields, MANIFEST_COLUMNS[2:6])]
        if values[3] <= 0:
            raise DataError(f"manifest line {lineno}: scale must be positive")
        rows.append(PairRow(ref, test, *values, tag))
    return PairManifest(tuple(rows), str(base_dir) if base_dir is not None else None)


def load_manifest(path: Union[str, Path]) -> PairManifest:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read manifest {path}: {e}") from e
    manifest = parse_manifest(text, path.parent)
    logger.info("loaded %d pairs from %s", len(manifest), path)
    return manifest


def format_manifest(manifest: PairManifest) -> str:
    def cell(value: Optional[float]) -> str:
        return "NA" if value is None else repr(float(value))

    lines = []
    for row in manifest.rows:
        lines.append("\t".join((
            row.ref_path, row.test_path, cell(row.angle), cell(row.tx), cell(row.ty), cell(row.scale), row.tag,
        )))
    return "\n".join(lines) + ("\n" if lines else "")


def write_manifest(manifest: PairManifest, path: Union[str, Path]) -> None:
    atomic_write_text(path, format_manifest(manifest))
