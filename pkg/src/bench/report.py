"""
Evaluation reports and their CSV / markdown renderings.

Metric values print with two decimals and missing values as "NA".
"""

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from src.errors import ConfigError
from src.utils import atomic_write_text

logger = logging.getLogger(__name__)

KEY_COLUMNS = ("detector", "selector", "descriptor", "group")

# Metric columns per experiment, in report order.
EXPERIMENT_COLUMNS = {
    "detect": ("below_n", "repeatability", "ambiguity"),
    "match": ("n_correct", "precision"),
    "pose": ("ref_budget", "n_pairs", "success_rate"),
}
TIMING_COLUMN = "detect_time_s"
# Columns that hold counts and print without decimals.
INTEGER_COLUMNS = frozenset({"ref_budget", "n_pairs"})
# Cell shown in markdown pivot tables.
PRIMARY_METRIC = {"detect": "repeatability", "match": "precision", "pose": "success_rate"}


@dataclass
class ReportRow:
    detector: str
    selector: str
    descriptor: str
    group: str
    values: dict[str, Optional[float]] = field(default_factory=dict)

    def key(self) -> tuple[str, str, str, str]:
        return (self.detector, self.selector, self.descriptor, self.group)


@dataclass
class EvalReport:
    """Rows keyed by (detector, selector, descriptor, group)."""

    experiment: str
    metric_columns: tuple[str, ...]
    rows: list[ReportRow] = field(default_factory=list)

    @classmethod
    def empty(cls, experiment: str, timing: bool = False) -> "EvalReport":
        if experiment not in EXPERIMENT_COLUMNS:
            raise ConfigError(f"Unknown experiment: {experiment}")
        columns = EXPERIMENT_COLUMNS[experiment] + ((TIMING_COLUMN,) if timing else ())
        return cls(experiment, columns)

    @property
    def columns(self) -> tuple[str, ...]:
        return KEY_COLUMNS + self.metric_columns

    def add(self, detector: str, selector: str, descriptor: str, group: str, **values) -> ReportRow:
        row = ReportRow(detector, selector, descriptor, group, {c: values.get(c) for c in self.metric_columns})
        self.rows.append(row)
        return row

    def find(self, detector: str, selector: str = "nms", descriptor: str = "-", group: str = "all") -> Optional[ReportRow]:
        for row in self.rows:
            if row.key() == (detector, selector, descriptor, group):
                return row
        return None


def format_value(value, column: str = "") -> str:
    if value is None:
        return "NA"
    if column in INTEGER_COLUMNS:
        return str(int(value))
    return f"{float(value):.2f}"


def _cells(report: EvalReport, row: ReportRow) -> list[str]:
    return [row.detector, row.selector, row.descriptor, row.group] + [
        format_value(row.values.get(c), c) for c in report.metric_columns
    ]


def render_csv(report: EvalReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(report.columns)
    for row in report.rows:
        writer.writerow(_cells(report, row))
    return buffer.getvalue()


def _markdown_table(header: list[str], body: list[list[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines.extend("| " + " | ".join(cells) + " |" for cells in body)
    return lines


def render_markdown(report: EvalReport) -> str:
    """
    Flat table for detector experiments; for descriptor experiments one
    pivot table (detector rows, descriptor columns) per selector and group,
    followed by the flat table.
    """
    lines = [f"## {report.experiment}", ""]
    descriptors = list(dict.fromkeys(r.descriptor for r in report.rows if r.descriptor != "-"))
    if report.experiment != "detect" and descriptors:
        metric = PRIMARY_METRIC[report.experiment]
        sections = list(dict.fromkeys(
            (r.selector, r.group, r.values.get("ref_budget")) for r in report.rows
        ))
        for selector, group, budget in sections:
            title = f"### {metric}: selector {selector}, {group}"
            if budget is not None:
                title += f", reference budget {int(budget)}"
            lines += [title, ""]
            detectors = list(dict.fromkeys(r.detector for r in report.rows))
            body = []
            for det in detectors:
                cells = [det]
                for desc in descriptors:
                    match = next((
                        r for r in report.rows
                        if r.key() == (det, selector, desc, group) and r.values.get("ref_budget") == budget
                    ), None)
                    cells.append(format_value(match.values.get(metric) if match else None, metric))
                body.append(cells)
            lines += _markdown_table(["detector"] + descriptors, body) + [""]
    lines += _markdown_table(list(report.columns), [_cells(report, r) for r in report.rows])
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, fmt: str, path: Union[str, Path]) -> None:
    """Write report as "csv" or "markdown" to path (atomically)."""
    if fmt == "csv":
        text = render_csv(report)
    elif fmt == "markdown":
        text = render_markdown(report)
    else:
        raise ConfigError(f"Unsupported report format: {fmt}. Use 'csv' or 'markdown'.")
    atomic_write_text(path, text)
    logger.info("wrote %s report with %d rows to %s", fmt, len(report.rows), path)
