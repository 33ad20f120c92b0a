"""
Rich table formatters for groundloc CLI output.
"""

from rich.table import Table
from rich.text import Text

from src.bench.report import EvalReport, format_value

from ..config import get_theme

# Columns where larger is better and the value is a fraction.
_FRACTION_COLUMNS = frozenset({"repeatability", "precision", "success_rate"})


def _score_style(column: str, value) -> str:
    theme = get_theme()
    if value is None:
        return theme.missing
    if column in _FRACTION_COLUMNS:
        if value >= 0.8:
            return theme.score_good
        if value >= 0.5:
            return theme.score_mid
        return theme.score_poor
    return ""


def format_report(report: EvalReport) -> Table:
    """
    Format an evaluation report as a rich table.

    Args:
        report: Report produced by one of the run_* experiments.

    Returns:
        Rich Table with one row per report row.
    """
    theme = get_theme()
    table = Table(
        title=f"{report.experiment} results",
        show_header=True,
        header_style=theme.table_header,
        border_style=theme.table_border,
        title_style=theme.table_title,
        expand=True,
    )
    table.add_column("Detector", style=theme.primary, no_wrap=True)
    table.add_column("Selector", no_wrap=True)
    table.add_column("Descriptor", style=theme.accent, no_wrap=True)
    table.add_column("Group", no_wrap=True)
    for column in report.metric_columns:
        table.add_column(column.replace("_", " ").title(), justify="right")

    for row in report.rows:
        cells = [row.detector, row.selector, row.descriptor, row.group]
        metrics = [
            Text(format_value(row.values.get(c), c), style=_score_style(c, row.values.get(c)))
            for c in report.metric_columns
        ]
        table.add_row(*cells, *metrics)
    return table


def format_manifest_summary(n_pairs: int, out_dir: str, files: int) -> Table:
    theme = get_theme()
    table = Table(show_header=False, border_style=theme.table_border, title="Fixtures", title_style=theme.table_title)
    table.add_column("Field", style="bold")
    table.add_column("Value")
    table.add_row("Directory", out_dir)
    table.add_row("PGM files", str(files))
    table.add_row("Pairs", str(n_pairs))
    return table
