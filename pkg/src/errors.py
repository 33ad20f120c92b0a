"""
Exception hierarchy for groundloc.

The CLI maps ConfigError to exit code 2 and DataError to exit code 3.
"""


class GroundlocError(Exception):
    """Base class for all groundloc errors."""


class ConfigError(GroundlocError, ValueError):
    """Invalid configuration, unknown component name or invalid transform spec."""


class DataError(GroundlocError):
    """Input data could not be read or is malformed."""


class PgmFormatError(DataError):
    """A PGM file violates the supported subset of the format."""


class CacheError(DataError):
    """A feature cache file cannot be used."""


class CacheVersionError(CacheError):
    """The cache was written by an incompatible format version."""


class StaleCacheError(CacheError):
    """The cache was produced under a different configuration."""


class CacheCorruptError(CacheError):
    """The cache file is truncated or its checksum does not match."""


class DegenerateGeometryError(GroundlocError, ValueError):
    """Point configuration or mask geometry admits no solution."""
