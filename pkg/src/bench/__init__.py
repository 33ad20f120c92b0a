"""Benchmark experiments: run configuration, pair manifests, orchestration and reports."""

from src.bench.config import RunConfig, dump_run_config, load_run_config, parse_run_config
from src.bench.manifest import PairManifest, PairRow, load_manifest, parse_manifest
from src.bench.report import EvalReport, write_report
from src.bench.runner import (
    extract_features,
    generate_fixtures,
    run_detector_eval,
    run_matching_eval,
    run_pose_eval,
)

__all__ = [
    "RunConfig",
    "dump_run_config",
    "load_run_config",
    "parse_run_config",
    "PairManifest",
    "PairRow",
    "load_manifest",
    "parse_manifest",
    "EvalReport",
    "write_report",
    "extract_features",
    "generate_fixtures",
    "run_detector_eval",
    "run_matching_eval",
    "run_pose_eval",
]
