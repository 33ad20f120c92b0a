"""
Experiment orchestration.

Each experiment fans out over images (or pairs) with a bounded worker pool
and reassembles results in input order, so reports do not depend on the
number of workers. Averages give every transform kind equal weight: values
are averaged within a kind first, then across kinds.
"""

import asyncio
import logging
import time
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, TypeVar, Union

from src.bench.config import RunConfig
from src.bench.manifest import PairManifest, PairRow, write_manifest
from src.bench.report import EvalReport
from src.describe import describe_keypoints
from src.detect import Keypoint, detect_keypoints
from src.errors import ConfigError
from src.imgcore import GrayImage, load_pgm, save_pgm
from src.matchpose import match_ratio_test, ransac_pose
from src.metrics import match_correctness, pose_success, repeatability_and_ambiguity
from src.persistence.cache import FeatureCache
from src.selection import select_keypoints
from src.synth import (
    CasePair,
    GroundTruth2D,
    PoseCase,
    RegionMask,
    generate_texture,
    realize_case,
    realize_pose_case,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

POSE_KINDS = ("translation", "rotation")


@dataclass(frozen=True)
class NamedImage:
    name: str
    texture: str
    img: GrayImage


@dataclass(frozen=True)
class PosePair:
    name: str
    ref_img: GrayImage
    test_img: GrayImage
    gt: GroundTruth2D
    tag: str


@dataclass(frozen=True)
class _Record:
    detector: str
    selector: str
    descriptor: str
    kind: str
    texture: str
    values: dict


# =============================================================================
# Worker pool
# =============================================================================

async def _gather_ordered(fn: Callable[[T], R], items: list[T], jobs: int) -> list[R]:
    semaphore = asyncio.Semaphore(jobs)

    async def run_one(item: T) -> R:
        async with semaphore:
            return await asyncio.to_thread(fn, item)

    return await asyncio.gather(*(run_one(item) for item in items))


def run_jobs(fn: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> list[R]:
    """Apply fn to every item with up to `jobs` worker threads; results keep input order."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    return list(asyncio.run(_gather_ordered(fn, items, jobs)))


# =============================================================================
# Inputs
# =============================================================================

def reference_images(cfg: RunConfig) -> list[NamedImage]:
    """Configured PGM files, or procedural textures for every (texture, seed)."""
    if cfg.images:
        return [NamedImage(Path(p).stem, "file", load_pgm(p)) for p in cfg.images]
    return [
        NamedImage(f"{texture}-s{seed}", texture, generate_texture(texture, cfg.image_width, cfg.image_height, seed))
        for texture in cfg.textures
        for seed in cfg.seeds
    ]


def _pose_specs(cfg: RunConfig):
    specs = [s for s in cfg.sweep if s.kind in POSE_KINDS]
    if not specs:
        raise ConfigError("the sweep has no translation or rotation cases to build pose pairs from")
    return specs


def _pose_cases(cfg: RunConfig) -> list[tuple[NamedImage, PoseCase]]:
    """Every (reference image, geometric spec) pose case; the noise seed is the case position."""
    specs = _pose_specs(cfg)
    out = []
    for item in reference_images(cfg):
        for spec in specs:
            out.append((item, realize_pose_case(item.img, spec, cfg.pose_noise, seed=len(out))))
    return out


def synthetic_pose_pairs(cfg: RunConfig) -> list[PosePair]:
    """Pose pairs built from the sweep's geometric cases, tagged "synthetic"."""
    return [
        PosePair(f"{item.name}/{case.spec.label}", case.ref_img, case.test_img, case.gt, "synthetic")
        for item, case in _pose_cases(cfg)
    ]


def manifest_pose_pairs(manifest: PairManifest) -> list[PosePair]:
    """Load every manifest pair; rows must carry ground truth."""
    manifest.require_gt()
    pairs = []
    for row in manifest.rows:
        ref = load_pgm(manifest.resolve(row.ref_path))
        test = load_pgm(manifest.resolve(row.test_path))
        pairs.append(PosePair(f"{row.ref_path}|{row.test_path}", ref, test, row.ground_truth(ref.width, ref.height), row.tag))
    return pairs


# =============================================================================
# Pipeline pieces
# =============================================================================

def _detect_select(
    cfg: RunConfig, detector: str, selector: str, budget: int, img: GrayImage, mask: Optional[RegionMask]
) -> tuple[list[Keypoint], float]:
    start = time.perf_counter()
    raw = detect_keypoints(detector, img, cfg.detector.with_mask(mask))
    elapsed = time.perf_counter() - start
    return select_keypoints(raw, cfg.selector_config(selector, budget), img.width, img.height), elapsed


def _test_detect_mask(cfg: RunConfig, case: CasePair) -> RegionMask:
    if case.spec.kind == "rotation":
        return case.test_detect_mask.eroded(cfg.mask_erosion)
    return case.test_detect_mask


def _mask_key(mask: RegionMask) -> tuple:
    return (mask.x0, mask.y0, mask.x1, mask.y1, mask.valid is None)


def _describe(cfg: RunConfig, descriptor: str, img: GrayImage, kps: list[Keypoint]):
    return describe_keypoints(descriptor, img, kps, cfg.descriptor)


def _split(features) -> tuple[list, list]:
    return [kp for kp, _ in features], [d for _, d in features]


# =============================================================================
# Aggregation
# =============================================================================

def _mean(values: Sequence[float]) -> Optional[float]:
    return sum(values) / len(values) if values else None


def kind_balanced_mean(records: Sequence[_Record], column: str) -> Optional[float]:
    """Mean within each transform kind, then across kinds; None values are skipped."""
    by_kind: dict[str, list[float]] = {}
    for rec in records:
        value = rec.values.get(column)
        if value is not None:
            by_kind.setdefault(rec.kind, []).append(float(value))
    return _mean([_mean(v) for v in by_kind.values()])


def _groups(cfg: RunConfig, records: Sequence[_Record]) -> list[tuple[str, list[_Record]]]:
    groups = [("all", list(records))]
    if cfg.breakdown == "kind":
        for kind in dict.fromkeys(r.kind for r in records):
            groups.append((kind, [r for r in records if r.kind == kind]))
    elif cfg.breakdown == "texture":
        for texture in dict.fromkeys(r.texture for r in records):
            groups.append((texture, [r for r in records if r.texture == texture]))
    return groups


def _assemble(cfg: RunConfig, report: EvalReport, records: list[_Record], descriptors: Sequence[str]) -> EvalReport:
    for det in cfg.detectors:
        for sel in cfg.selectors:
            for desc in descriptors:
                mine = [r for r in records if (r.detector, r.selector, r.descriptor) == (det, sel, desc)]
                for group, subset in _groups(cfg, mine):
                    values = {c: kind_balanced_mean(subset, c) for c in report.metric_columns}
                    report.add(det, sel, desc, group, **values)
    return report


# =============================================================================
# Experiments
# =============================================================================

def _detection_job(cfg: RunConfig, item: NamedImage) -> list[_Record]:
    records = []
    cases = [realize_case(item.img, spec) for spec in cfg.sweep]
    for det in cfg.detectors:
        for sel in cfg.selectors:
            ref_cache: dict[tuple, tuple[list[Keypoint], float]] = {}
            for case in cases:
                key = _mask_key(case.ref_detect_mask)
                if key not in ref_cache:
                    ref_cache[key] = _detect_select(cfg, det, sel, cfg.budget, case.ref_img, case.ref_detect_mask)
                ref_kps, _ = ref_cache[key]
                test_kps, elapsed = _detect_select(
                    cfg, det, sel, cfg.budget, case.test_img, _test_detect_mask(cfg, case)
                )
                score = repeatability_and_ambiguity(
                    ref_kps, test_kps, case.gt, case.ref_mask, case.test_mask, cfg.metrics
                )
                records.append(_Record(det, sel, "-", case.spec.kind, item.texture, {
                    "below_n": 1.0 if score.below_n else 0.0,
                    "repeatability": score.repeatability,
                    "ambiguity": score.ambiguity,
                    "detect_time_s": elapsed,
                }))
    logger.debug("detection: %s done (%d records)", item.name, len(records))
    return records


def run_detector_eval(cfg: RunConfig) -> EvalReport:
    """Repeatability, ambiguity and the below-N share per detector and selector."""
    images = reference_images(cfg)
    logger.info("detector evaluation: %d images x %d cases", len(images), len(cfg.sweep))
    batches = run_jobs(partial(_detection_job, cfg), images, cfg.jobs)
    records = [rec for batch in batches for rec in batch]
    return _assemble(cfg, EvalReport.empty("detect", cfg.timing), records, ["-"])


def _reference_features(cfg: RunConfig, cache: Optional[FeatureCache], item: NamedImage, case: CasePair,
                        det: str, sel: str, desc: str, ref_kps: list[Keypoint]):
    compute = partial(_describe, cfg, desc, case.ref_img, ref_kps)
    full_frame = case.ref_detect_mask.area == case.ref_img.width * case.ref_img.height
    if cache is None or not full_frame:
        return compute()
    return cache.get_or_compute(item.name, det, sel, desc, cfg.budget, compute)


def _matching_job(cfg: RunConfig, item: NamedImage) -> list[_Record]:
    records = []
    cache = FeatureCache(cfg.cache_dir, cfg.config_hash()) if cfg.cache_dir else None
    cases = [realize_case(item.img, spec) for spec in cfg.sweep]
    for det in cfg.detectors:
        for sel in cfg.selectors:
            ref_cache: dict[tuple, list[Keypoint]] = {}
            for case in cases:
                key = _mask_key(case.ref_detect_mask)
                if key not in ref_cache:
                    ref_cache[key] = _detect_select(cfg, det, sel, cfg.budget, case.ref_img, case.ref_detect_mask)[0]
                ref_kps = ref_cache[key]
                test_kps, _ = _detect_select(cfg, det, sel, cfg.budget, case.test_img, _test_detect_mask(cfg, case))
                for desc in cfg.descriptors:
                    ref_k, ref_d = _split(_reference_features(cfg, cache, item, case, det, sel, desc, ref_kps))
                    test_k, test_d = _split(_describe(cfg, desc, case.test_img, test_kps))
                    if not ref_d or not test_d:
                        # No keypoint leaves room for the descriptor's sampling window.
                        logger.warning("%s + %s on %s/%s: no describable keypoints", det, desc, item.name, case.spec.label)
                        values = {"n_correct": None, "precision": None}
                    else:
                        matches = match_ratio_test(test_d, ref_d, cfg.ratio)
                        score = match_correctness(matches, test_k, ref_k, case.gt, cfg.metrics)
                        values = {"n_correct": float(score.n_correct), "precision": score.precision}
                    records.append(_Record(det, sel, desc, case.spec.kind, item.texture, values))
    return records


def run_matching_eval(cfg: RunConfig) -> EvalReport:
    """Correct-match counts and precision per detector, selector and descriptor."""
    images = reference_images(cfg)
    logger.info("matching evaluation: %d images x %d cases", len(images), len(cfg.sweep))
    batches = run_jobs(partial(_matching_job, cfg), images, cfg.jobs)
    records = [rec for batch in batches for rec in batch]
    return _assemble(cfg, EvalReport.empty("match"), records, cfg.descriptors)


def _pose_job(cfg: RunConfig, pair: PosePair) -> list[tuple[str, str, str, int, bool]]:
    outcomes = []
    budgets = cfg.ref_budgets or (cfg.budget,)
    w, h = pair.ref_img.width, pair.ref_img.height
    for det in cfg.detectors:
        raw_ref = detect_keypoints(det, pair.ref_img, cfg.detector)
        raw_test = detect_keypoints(det, pair.test_img, cfg.detector)
        for sel in cfg.selectors:
            test_kps = select_keypoints(raw_test, cfg.selector_config(sel), pair.test_img.width, pair.test_img.height)
            ref_sets = {b: select_keypoints(raw_ref, cfg.selector_config(sel, b), w, h) for b in budgets}
            for desc in cfg.descriptors:
                test_k, test_d = _split(_describe(cfg, desc, pair.test_img, test_kps))
                for budget in budgets:
                    ref_k, ref_d = _split(_describe(cfg, desc, pair.ref_img, ref_sets[budget]))
                    matches = match_ratio_test(test_d, ref_d, cfg.ratio)
                    result = ransac_pose(matches, test_k, ref_k, cfg.ransac)
                    ok = pose_success(result.pose if result else None, pair.gt, cfg.metrics)
                    outcomes.append((det, sel, desc, budget, ok))
    logger.debug("pose: %s done", pair.name)
    return outcomes


def run_pose_eval(cfg: RunConfig, manifest: Optional[PairManifest] = None) -> EvalReport:
    """
    Pose success rate per detector, selector, descriptor and pair tag, for
    every reference budget (cfg.ref_budgets, or the single cfg.budget).

    Without a manifest the pairs are generated from the sweep.
    """
    pairs = manifest_pose_pairs(manifest) if manifest is not None else synthetic_pose_pairs(cfg)
    logger.info("pose evaluation: %d pairs", len(pairs))
    results = run_jobs(partial(_pose_job, cfg), pairs, cfg.jobs)
    budgets = cfg.ref_budgets or (cfg.budget,)
    tags = list(dict.fromkeys(p.tag for p in pairs))
    report = EvalReport.empty("pose")
    for det in cfg.detectors:
        for sel in cfg.selectors:
            for desc in cfg.descriptors:
                for tag in tags:
                    for budget in budgets:
                        flags = [
                            ok
                            for pair, outcomes in zip(pairs, results) if pair.tag == tag
                            for (d, s, ds, b, ok) in outcomes if (d, s, ds, b) == (det, sel, desc, budget)
                        ]
                        rate = sum(flags) / len(flags) if flags else None
                        report.add(det, sel, desc, tag, ref_budget=budget, n_pairs=len(flags), success_rate=rate)
    return report


# =============================================================================
# Artifacts
# =============================================================================

def _extract_job(cfg: RunConfig, cache: FeatureCache, item: NamedImage) -> int:
    written = 0
    for det in cfg.detectors:
        raw = detect_keypoints(det, item.img, cfg.detector)
        for sel in cfg.selectors:
            kps = select_keypoints(raw, cfg.selector_config(sel), item.img.width, item.img.height)
            for desc in cfg.descriptors:
                cache.get_or_compute(item.name, det, sel, desc, cfg.budget, partial(_describe, cfg, desc, item.img, kps))
                written += 1
    return written


def extract_features(cfg: RunConfig, cache_dir: Optional[Union[str, Path]] = None) -> int:
    """Populate the feature cache for every configured image and pipeline; returns the entry count."""
    directory = cache_dir or cfg.cache_dir or Path(cfg.output_dir) / "cache"
    cache = FeatureCache(directory, cfg.config_hash())
    counts = run_jobs(partial(_extract_job, cfg, cache), reference_images(cfg), cfg.jobs)
    return sum(counts)


def generate_fixtures(cfg: RunConfig, out_dir: Union[str, Path]) -> PairManifest:
    """
    Write reference textures and their geometric test images as PGM files
    plus a `pairs.tsv` manifest with ground truth.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for item, case in _pose_cases(cfg):
        ref_name = f"{item.name}.pgm"
        if not rows or rows[-1].ref_path != ref_name:
            save_pgm(item.img, out / ref_name)
        test_name = f"{item.name}_{case.spec.kind}{case.spec.parameter:g}.pgm"
        save_pgm(case.test_img, out / test_name)
        gt = case.gt
        rows.append(PairRow(ref_name, test_name, gt.angle, gt.tx, gt.ty, gt.scale, "synthetic"))
    manifest = PairManifest(tuple(rows), str(out))
    write_manifest(manifest, out / "pairs.tsv")
    logger.info("wrote %d pairs to %s", len(rows), out)
    return manifest
