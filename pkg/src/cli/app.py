#!/usr/bin/env python3
"""
groundloc CLI - ground-texture feature benchmark

Commands:
- synth-gen: write procedural fixture textures, test images and a manifest
- eval-detect: repeatability / ambiguity of detectors under the sweep
- eval-match: correct matches and precision of detector/descriptor pairings
- eval-pose: pose success rate on a manifest or synthetic pairs
- extract: populate the feature cache

Usage:
    groundloc eval-detect --config configs/smoke.conf
    groundloc eval-pose --manifest pairs.tsv --format markdown --out table.md
    groundloc synth-gen --out fixtures/
"""

import logging
from dataclasses import replace
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import Progress, SpinnerColumn, TextColumn

from src.bench.config import REPORT_FORMATS, RunConfig, load_run_config
from src.bench.manifest import load_manifest
from src.bench.report import EvalReport, write_report
from src.errors import ConfigError, DataError, DegenerateGeometryError

from . import __version__
from .config import get_config, set_theme
from .formatters.panels import (
    create_error_panel,
    create_header_panel,
    create_info_panel,
    create_run_panel,
    create_success_panel,
)
from .formatters.tables import format_manifest_summary, format_report

app = typer.Typer(
    name="groundloc",
    help="groundloc - ground-texture feature detection, description and pose benchmark",
    rich_markup_mode="rich",
    no_args_is_help=True,
    add_completion=False,
)

console = Console()
logger = logging.getLogger("src.cli")

EXIT_CONFIG = 2
EXIT_DATA = 3


def version_callback(value: bool):
    """Show version and exit."""
    if value:
        console.print(f"[cyan]groundloc[/cyan] version [green]{__version__}[/green]")
        raise typer.Exit()


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False, rich_tracebacks=verbose)],
        force=True,
    )


@app.callback()
def main(
    version: Optional[bool] = typer.Option(
        None, "--version", callback=version_callback, is_eager=True,
        help="Show version and exit."
    ),
    theme: Optional[str] = typer.Option(
        None, "--theme", "-t",
        help="Color theme: default, professional, minimal"
    ),
    no_banner: bool = typer.Option(False, "--no-banner", help="Hide the banner header."),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging."),
):
    """
    groundloc - benchmark keypoint detectors, descriptors and pose
    estimation on ground textures.
    """
    if theme:
        set_theme(theme)
    config = get_config()
    config.show_banner = not no_banner
    config.verbose = verbose
    _setup_logging(verbose)


# =============================================================================
# Shared options
# =============================================================================

ConfigOption = typer.Option(None, "--config", "-c", help="Run configuration file (key = value).")
SeedOption = typer.Option(None, "--seed", help="Override the texture and RANSAC seed.")
JobsOption = typer.Option(None, "--jobs", "-j", help="Worker threads.")
FormatOption = typer.Option("csv", "--format", "-f", help="Report format: csv or markdown.")
OutOption = typer.Option(None, "--out", "-o", help="Output path.")


def _load_config(path: Optional[Path], seed: Optional[int], jobs: Optional[int]) -> RunConfig:
    cfg = load_run_config(path) if path else RunConfig()
    if seed is not None:
        cfg = replace(cfg, seeds=(seed,), ransac=replace(cfg.ransac, seed=seed))
    if jobs is not None:
        cfg = replace(cfg, jobs=jobs)
    return cfg


def _report_path(cfg: RunConfig, out: Optional[Path], fmt: str, experiment: str) -> Path:
    if fmt not in REPORT_FORMATS:
        raise ConfigError(f"Unsupported report format: {fmt}. Use 'csv' or 'markdown'.")
    path = out or Path(cfg.output_dir) / f"{experiment}.{'csv' if fmt == 'csv' else 'md'}"
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _emit(report: EvalReport, fmt: str, path: Path) -> None:
    if report.rows:
        console.print(format_report(report))
    else:
        console.print(create_info_panel("No results: the configuration selects no combinations."))
    write_report(report, fmt, path)
    console.print(create_success_panel(f"Wrote {len(report.rows)} row(s) to {path}"))


def _guarded(action):
    """Run action, turning configuration and data errors into exit codes 2 and 3."""
    try:
        return action()
    except (ConfigError, DegenerateGeometryError) as e:
        console.print(create_error_panel(str(e), title="Configuration error"))
        raise typer.Exit(EXIT_CONFIG)
    except DataError as e:
        console.print(create_error_panel(str(e), title="Data error"))
        raise typer.Exit(EXIT_DATA)


# =============================================================================
# Commands
# =============================================================================

@app.command("synth-gen")
def synth_gen(
    config: Optional[Path] = ConfigOption,
    out: Optional[Path] = OutOption,
    seed: Optional[int] = SeedOption,
):
    """
    Write fixture textures, their transformed test images and pairs.tsv.

    Examples:
        groundloc synth-gen --out fixtures/
    """
    _show_banner_if_enabled()

    def action():
        from src.bench.runner import generate_fixtures

        cfg = _load_config(config, seed, None)
        out_dir = out or Path(cfg.output_dir) / "fixtures"
        with _spinner("Generating fixtures..."):
            manifest = generate_fixtures(cfg, out_dir)
        files = len({r.ref_path for r in manifest.rows}) + len(manifest.rows)
        console.print(format_manifest_summary(len(manifest), str(out_dir), files))

    _guarded(action)


@app.command("eval-detect")
def eval_detect(
    config: Optional[Path] = ConfigOption,
    out: Optional[Path] = OutOption,
    fmt: str = FormatOption,
    seed: Optional[int] = SeedOption,
    jobs: Optional[int] = JobsOption,
):
    """
    Evaluate keypoint detectors: repeatability, ambiguity, below-N share.

    Examples:
        groundloc eval-detect --config configs/smoke.conf
    """
    _show_banner_if_enabled()

    def action():
        from src.bench.runner import run_detector_eval

        cfg = _load_config(config, seed, jobs)
        path = _report_path(cfg, out, fmt, "detect")
        console.print(create_run_panel("eval-detect", cfg.config_hash(), len(cfg.detectors), 0, cfg.jobs))
        with _spinner("Detecting keypoints..."):
            report = run_detector_eval(cfg)
        _emit(report, fmt, path)

    _guarded(action)


@app.command("eval-match")
def eval_match(
    config: Optional[Path] = ConfigOption,
    out: Optional[Path] = OutOption,
    fmt: str = FormatOption,
    seed: Optional[int] = SeedOption,
    jobs: Optional[int] = JobsOption,
):
    """
    Evaluate detector/descriptor pairings: correct matches and precision.

    Examples:
        groundloc eval-match --config configs/smoke.conf --format markdown
    """
    _show_banner_if_enabled()

    def action():
        from src.bench.runner import run_matching_eval

        cfg = _load_config(config, seed, jobs)
        path = _report_path(cfg, out, fmt, "match")
        console.print(create_run_panel(
            "eval-match", cfg.config_hash(), len(cfg.detectors), len(cfg.descriptors), cfg.jobs
        ))
        with _spinner("Matching features..."):
            report = run_matching_eval(cfg)
        _emit(report, fmt, path)

    _guarded(action)


@app.command("eval-pose")
def eval_pose(
    config: Optional[Path] = ConfigOption,
    manifest: Optional[Path] = typer.Option(
        None, "--manifest", "-m", help="Pair manifest; synthetic pairs are used when omitted."
    ),
    out: Optional[Path] = OutOption,
    fmt: str = FormatOption,
    seed: Optional[int] = SeedOption,
    jobs: Optional[int] = JobsOption,
):
    """
    Evaluate pose estimation success rate.

    Examples:
        groundloc eval-pose --manifest fixtures/pairs.tsv
    """
    _show_banner_if_enabled()

    def action():
        from src.bench.runner import run_pose_eval

        cfg = _load_config(config, seed, jobs)
        path = _report_path(cfg, out, fmt, "pose")
        pairs = load_manifest(manifest) if manifest else None
        console.print(create_run_panel(
            "eval-pose", cfg.config_hash(), len(cfg.detectors), len(cfg.descriptors), cfg.jobs
        ))
        with _spinner("Estimating poses..."):
            report = run_pose_eval(cfg, pairs)
        _emit(report, fmt, path)

    _guarded(action)


@app.command("extract")
def extract(
    config: Optional[Path] = ConfigOption,
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Cache directory."),
    seed: Optional[int] = SeedOption,
    jobs: Optional[int] = JobsOption,
):
    """
    Populate the feature cache for all configured images and pipelines.

    Examples:
        groundloc extract --config configs/default.conf --out cache/
    """
    _show_banner_if_enabled()

    def action():
        from src.bench.runner import extract_features

        cfg = _load_config(config, seed, jobs)
        with _spinner("Extracting features..."):
            count = extract_features(cfg, out)
        console.print(create_success_panel(f"Cached {count} feature set(s)"))

    _guarded(action)


# =============================================================================
# Helpers
# =============================================================================

def _show_banner_if_enabled():
    if get_config().show_banner:
        console.print(create_header_panel())


def _spinner(message: str):
    """Create a progress spinner context manager."""
    return Progress(
        SpinnerColumn(),
        TextColumn(f"[cyan]{message}[/cyan]"),
        transient=True,
        console=console,
    )


def cli():
    """Entry point for the CLI."""
    app()


if __name__ == "__main__":
    cli()
