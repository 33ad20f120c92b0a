"""
Rich panel formatters for the groundloc CLI.

Provides styled panels, headers, and status displays.
"""

from rich.panel import Panel
from rich.text import Text

from ..config import get_theme


def create_header_panel() -> Panel:
    """
    Create a branded header panel for the CLI.

    Returns:
        Rich Panel with groundloc branding.
    """
    theme = get_theme()
    header_text = Text()
    header_text.append("groundloc", style=f"bold {theme.primary}")
    header_text.append(" - ", style="dim")
    header_text.append("Ground-texture feature benchmark", style=f"italic {theme.accent}")
    return Panel(header_text, border_style=theme.table_border, expand=True)


def _status_panel(message: str, title: str, style: str) -> Panel:
    return Panel(Text(message, style=style), title=title, title_align="left", border_style=style or "none", expand=True)


def create_error_panel(message: str, title: str = "Error") -> Panel:
    """
    Panel for configuration and data errors.

    Args:
        message: Error message to display.
        title: Panel title.
    """
    return _status_panel(message, f"❌ {title}", get_theme().error)


def create_success_panel(message: str, title: str = "Success") -> Panel:
    return _status_panel(message, f"✅ {title}", get_theme().success)


def create_info_panel(message: str, title: str = "Info") -> Panel:
    return _status_panel(message, f"ℹ️  {title}", get_theme().info)


def create_run_panel(experiment: str, config_hash: str, n_detectors: int, n_descriptors: int, jobs: int) -> Panel:
    """Summary of the run about to start."""
    theme = get_theme()
    text = Text()
    text.append(f"{experiment}\n", style=f"bold {theme.primary}")
    text.append("detectors: ", style="dim")
    text.append(f"{n_detectors}   ")
    text.append("descriptors: ", style="dim")
    text.append(f"{n_descriptors}   ")
    text.append("jobs: ", style="dim")
    text.append(f"{jobs}\n")
    text.append("config ", style="dim")
    text.append(config_hash[:12], style=theme.accent)
    return Panel(text, title="Run", title_align="left", border_style=theme.table_border, expand=True)
