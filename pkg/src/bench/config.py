"""
Run configuration for benchmark experiments.

Config files are flat `key = value` text: `#` starts a comment, list values
are comma separated and grouped parameters use dotted keys, e.g.

    detectors = harris, dog
    budget = 1000
    ransac.iterations = 2000
    sweep = rotation:90, translation:0.4, noise:20
"""

import hashlib
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Union

from src.describe import DESCRIPTOR_NAMES, DescriptorConfig
from src.detect import DETECTORS, DetectorConfig
from src.errors import ConfigError, DataError
from src.matchpose import RansacConfig
from src.metrics import MetricsConfig
from src.selection import SELECTION_METHODS, SelectorConfig
from src.synth import POSE_NOISE_SIGMA, TEXTURE_KINDS, TransformSpec, default_sweep

logger = logging.getLogger(__name__)

BREAKDOWNS = ("none", "kind", "texture")
REPORT_FORMATS = ("csv", "markdown")

# Nested parameter groups addressable as `<prefix>.<field>`.
_SECTIONS = ("detector", "selector", "descriptor", "ransac", "metrics")


@dataclass(frozen=True)
class RunConfig:
    """
    Everything one benchmark run needs.

    Selectors are listed by method name; their shared parameters come from
    the `selector` template, and each selector's n_target is the budget.
    """

    detectors: tuple[str, ...] = ("harris", "gftt", "fast", "censure", "dog", "orb")
    selectors: tuple[str, ...] = ("nms",)
    descriptors: tuple[str, ...] = DESCRIPTOR_NAMES
    budget: int = 1000
    ref_budgets: tuple[int, ...] = ()
    ratio: float = 0.7
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    selector: SelectorConfig = field(default_factory=SelectorConfig)
    descriptor: DescriptorConfig = field(default_factory=DescriptorConfig)
    ransac: RansacConfig = field(default_factory=RansacConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    sweep: tuple[TransformSpec, ...] = field(default_factory=lambda: tuple(default_sweep(0)))
    images: tuple[str, ...] = ()
    textures: tuple[str, ...] = TEXTURE_KINDS
    image_width: int = 512
    image_height: int = 512
    seeds: tuple[int, ...] = (0,)
    mask_erosion: int = 8
    pose_noise: float = POSE_NOISE_SIGMA
    breakdown: str = "none"
    timing: bool = False
    jobs: int = 1
    output_dir: str = "results"
    cache_dir: Optional[str] = None

    def __post_init__(self):
        for name in self.detectors:
            if name not in DETECTORS:
                raise ConfigError(f"Unknown detector: {name}. Use one of {', '.join(DETECTORS)}.")
        for name in self.selectors:
            if name not in SELECTION_METHODS:
                raise ConfigError(f"Unknown selection method: {name}. Use one of {', '.join(SELECTION_METHODS)}.")
        for name in self.descriptors:
            if name not in DESCRIPTOR_NAMES:
                raise ConfigError(f"Unknown descriptor: {name}. Use one of {', '.join(DESCRIPTOR_NAMES)}.")
        for name in self.textures:
            if name not in TEXTURE_KINDS:
                raise ConfigError(f"Unknown texture kind: {name}. Use one of {', '.join(TEXTURE_KINDS)}.")
        if self.budget < 1 or any(b < 1 for b in self.ref_budgets):
            raise ConfigError("budgets must be >= 1")
        if not 0 < self.ratio <= 1:
            raise ConfigError(f"ratio must lie in (0, 1], got {self.ratio}")
        if self.breakdown not in BREAKDOWNS:
            raise ConfigError(f"breakdown must be one of {', '.join(BREAKDOWNS)}, got {self.breakdown}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        if self.image_width < 64 or self.image_height < 64:
            raise ConfigError("synthetic images must be at least 64x64")
        if self.mask_erosion < 0:
            raise ConfigError("mask_erosion must be >= 0")
        if not 0 <= self.pose_noise <= 40:
            raise ConfigError(f"pose_noise must lie in [0, 40], got {self.pose_noise}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if not isinstance(self.output_dir, str) or self.output_dir.lower() in _NULLS:
            raise ConfigError(f"output_dir must name a directory, got {self.output_dir!r}")

    def selector_config(self, method: str, budget: Optional[int] = None) -> SelectorConfig:
        return replace(self.selector, method=method, n_target=budget or self.budget)

    def config_hash(self) -> str:
        """SHA-256 of the canonical dump; stored in feature caches."""
        return hashlib.sha256(dump_run_config(self).encode("utf-8")).hexdigest()


# =============================================================================
# Value coercion
# =============================================================================

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}
_INT_LISTS = {"ref_budgets", "seeds", "image_size"}
_FLOAT_LISTS = {"scale_bounds"}
_NULLS = ("", "none", "na")


def _split_list(raw: str) -> list[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]


def _coerce(key: str, raw: str, default):
    """Convert raw text to the type of the field default."""
    try:
        if isinstance(default, bool):
            lowered = raw.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            items = _split_list(raw)
            leaf = key.rsplit(".", 1)[-1]
            if leaf in _FLOAT_LISTS:
                return tuple(float(v) for v in items)
            if leaf in _INT_LISTS:
                return tuple(int(v) for v in items)
            return tuple(items)
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {raw!r}") from None
    if default is None:
        return None if raw.lower() in _NULLS else raw
    if not raw:
        raise ConfigError(f"{key} requires a value")
    return raw


def parse_sweep(raw: str) -> tuple[TransformSpec, ...]:
    """
    Parse `kind:parameter[:seed]` items. "default" expands to the 18-case
    grid; noise items without a seed get their position in the list.
    """
    if raw.strip().lower() == "default":
        return tuple(default_sweep(0))
    specs = []
    for position, item in enumerate(_split_list(raw)):
        parts = item.split(":")
        if len(parts) not in (2, 3):
            raise ConfigError(f"sweep item must be kind:parameter[:seed], got {item!r}")
        try:
            parameter = float(parts[1])
            seed = int(parts[2]) if len(parts) == 3 else position
        except ValueError:
            raise ConfigError(f"invalid sweep item {item!r}") from None
        specs.append(TransformSpec(parts[0].strip(), parameter, seed if parts[0].strip() == "noise" else 0))
    if not specs:
        raise ConfigError("sweep must contain at least one transform")
    return tuple(specs)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        if value and isinstance(value[0], TransformSpec):
            return ", ".join(f"{s.kind}:{s.parameter!r}:{s.seed}" for s in value)
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return "none"
    return str(value)


# =============================================================================
# Parse / dump
# =============================================================================

def parse_run_config(text: str) -> RunConfig:
    """
    Build a RunConfig from config-file text.

    Raises:
        ConfigError: on unknown keys, malformed lines or invalid values.
    """
    defaults = RunConfig()
    top: dict = {}
    nested: dict[str, dict] = {name: {} for name in _SECTIONS}
    top_fields = {f.name for f in fields(RunConfig)} - set(_SECTIONS)

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if "." in key:
            section, name = key.split(".", 1)
            if section == "report" and name == "timing":
                top["timing"] = _coerce(key, raw, False)
                continue
            if section not in _SECTIONS:
                raise ConfigError(f"line {lineno}: unknown section {section!r}")
            template = getattr(defaults, section)
            valid = {f.name for f in fields(template)} - {"mask", "method", "n_target"}
            if name not in valid:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            nested[section][name] = _coerce(key, raw, getattr(template, name))
        elif key == "sweep":
            top["sweep"] = parse_sweep(raw)
        elif key == "image_size":
            size = _coerce(key, raw, (0,))
            if len(size) not in (1, 2):
                raise ConfigError(f"line {lineno}: image_size takes one or two integers")
            top["image_width"], top["image_height"] = size[0], size[-1]
        elif key in top_fields:
            top[key] = _coerce(key, raw, getattr(defaults, key))
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")

    for section, values in nested.items():
        if values:
            top[section] = replace(getattr(defaults, section), **values)
    return RunConfig(**top)


def load_run_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read config {path}: {e}") from e
    logger.debug("loaded run config from %s", path)
    return parse_run_config(text)


def dump_run_config(cfg: RunConfig) -> str:
    """Canonical `key = value` text; parse_run_config(dump_run_config(c)) == c."""
    lines = []
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if f.name in _SECTIONS:
            for sub in fields(value):
                if sub.name in ("mask", "method", "n_target"):
                    continue
                lines.append(f"{f.name}.{sub.name} = {_format(getattr(value, sub.name))}")
        elif f.name == "timing":
            lines.append(f"report.timing = {_format(value)}")
        else:
            lines.append(f"{f.name} = {_format(value)}")
    return "\n".join(lines) + "\n"
