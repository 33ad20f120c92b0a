"""
Binary feature cache.

Layout (little endian):

    magic "GTLF" | u16 format version | u32 header length | JSON header
    | n x 6 float64 keypoint records (x, y, size, angle or NaN, response, octave)
    | descriptor block (n x 32 uint8 packed bits, or n x dim float32)
    | u32 CRC-32 of everything before it

The header records detector and descriptor names, the run-config hash and
the record count. Files are written atomically.
"""

import json
import logging
import math
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from src.describe import Descriptor, Feature, stack_descriptors
from src.detect import Keypoint
from src.errors import CacheCorruptError, CacheVersionError, StaleCacheError
from src.utils import atomic_write_bytes

logger = logging.getLogger(__name__)

MAGIC = b"GTLF"
FORMAT_VERSION = 1
_PREAMBLE = struct.Struct("<4sHI")
_CRC = struct.Struct("<I")
_KEYPOINT_DTYPE = np.dtype("<f8")
_REAL_DTYPE = np.dtype("<f4")


@dataclass(frozen=True)
class CachedFeatures:
    detector: str
    descriptor: str
    config_hash: str
    features: list[Feature]


def encode_features(features: list[Feature], detector: str, descriptor: str, config_hash: str) -> bytes:
    kinds = {d.kind for _, d in features}
    if len(kinds) > 1:
        raise ValueError("cannot cache binary and real descriptors together")
    kind = kinds.pop() if kinds else "binary"
    block = stack_descriptors([d for _, d in features], kind)
    header = {
        "detector": detector,
        "descriptor": descriptor,
        "config_hash": config_hash,
        "count": len(features),
        "kind": kind,
        "dim": int(block.shape[1]),
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    records = np.array(
        [[kp.x, kp.y, kp.size, math.nan if kp.angle is None else kp.angle, kp.response, kp.octave]
         for kp, _ in features],
        dtype=_KEYPOINT_DTYPE,
    ).reshape(-1, 6)
    descriptors = block.astype(_REAL_DTYPE if kind == "real" else np.uint8)
    body = _PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(header_bytes)) + header_bytes
    body += records.tobytes() + descriptors.tobytes()
    return body + _CRC.pack(zlib.crc32(body))


def decode_features(payload: bytes, expected_hash: Optional[str] = None) -> CachedFeatures:
    """
    Raises:
        CacheCorruptError: bad magic, truncation or checksum mismatch.
        CacheVersionError: a different format version.
        StaleCacheError: config hash differs from expected_hash.
    """
    if len(payload) < _PREAMBLE.size + _CRC.size:
        raise CacheCorruptError("cache file is truncated")
    magic, version, header_len = _PREAMBLE.unpack_from(payload, 0)
    if magic != MAGIC:
        raise CacheCorruptError("not a feature cache (bad magic)")
    if version != FORMAT_VERSION:
        raise CacheVersionError(f"cache format version {version}, expected {FORMAT_VERSION}")
    (stored_crc,) = _CRC.unpack_from(payload, len(payload) - _CRC.size)
    body = payload[:-_CRC.size]
    if zlib.crc32(body) != stored_crc:
        raise CacheCorruptError("cache checksum mismatch")
    try:
        header = json.loads(body[_PREAMBLE.size:_PREAMBLE.size + header_len].decode("utf-8"))
        count, dim, kind = int(header["count"]), int(header["dim"]), header["kind"]
    except (ValueError, KeyError, UnicodeDecodeError) as e:
        raise CacheCorruptError(f"unreadable cache header: {e}") from e
    if expected_hash is not None and header["config_hash"] != expected_hash:
        raise StaleCacheError("cache was written under a different configuration")

    offset = _PREAMBLE.size + header_len
    kp_bytes = count * 6 * _KEYPOINT_DTYPE.itemsize
    desc_dtype = _REAL_DTYPE if kind == "real" else np.dtype(np.uint8)
    desc_bytes = count * dim * desc_dtype.itemsize
    if len(body) != offset + kp_bytes + desc_bytes:
        raise CacheCorruptError("cache size does not match its header")
    records = np.frombuffer(body, dtype=_KEYPOINT_DTYPE, count=count * 6, offset=offset).reshape(count, 6)
    block = np.frombuffer(body, dtype=desc_dtype, count=count * dim, offset=offset + kp_bytes).reshape(count, dim)

    features = []
    for rec, row in zip(records, block):
        angle = None if math.isnan(rec[3]) else float(rec[3])
        kp = Keypoint(float(rec[0]), float(rec[1]), float(rec[2]), angle, float(rec[4]), int(rec[5]))
        features.append((kp, Descriptor(kind, row)))
    return CachedFeatures(header["detector"], header["descriptor"], header["config_hash"], features)


def save_features(
    path: Union[str, Path], features: list[Feature], detector: str, descriptor: str, config_hash: str
) -> None:
    atomic_write_bytes(path, encode_features(features, detector, descriptor, config_hash))


def load_features(path: Union[str, Path], expected_hash: Optional[str] = None) -> CachedFeatures:
    try:
        payload = Path(path).read_bytes()
    except OSError as e:
        raise CacheCorruptError(f"cannot read cache {path}: {e}") from e
    return decode_features(payload, expected_hash)


class FeatureCache:
    """
    Directory of cache files keyed by image and pipeline names.

    Unusable entries (stale, corrupt, other version) are recomputed and
    overwritten.
    """

    def __init__(self, directory: Union[str, Path], config_hash: str):
        self.directory = Path(directory)
        self.config_hash = config_hash
        self.directory.mkdir(parents=True, exist_ok=True)

    def path_for(self, image: str, detector: str, selector: str, descriptor: str, budget: int) -> Path:
        return self.directory / f"{image}__{detector}__{selector}__{descriptor}__n{budget}.gtlf"

    def get_or_compute(
        self,
        image: str,
        detector: str,
        selector: str,
        descriptor: str,
        budget: int,
        compute: Callable[[], list[Feature]],
    ) -> list[Feature]:
        path = self.path_for(image, detector, selector, descriptor, budget)
        if path.exists():
            try:
                return load_features(path, self.config_hash).features
            except (StaleCacheError, CacheVersionError, CacheCorruptError) as e:
                logger.warning("ignoring cache %s: %s", path.name, e)
        features = compute()
        save_features(path, features, detector, descriptor, self.config_hash)
        logger.debug("cached %d features in %s", len(features), path.name)
        return features
