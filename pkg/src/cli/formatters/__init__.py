"""Rich output formatters for the groundloc CLI."""

from .panels import create_error_panel, create_header_panel, create_run_panel, create_success_panel
from .tables import format_manifest_summary, format_report

__all__ = [
    "create_error_panel",
    "create_header_panel",
    "create_run_panel",
    "create_success_panel",
    "format_manifest_summary",
    "format_report",
]
