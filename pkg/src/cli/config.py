"""
Presentation settings for the groundloc CLI: colour themes and the
process-wide banner/verbosity switches set by the app callback.
"""

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class CLITheme:
    """Rich styles used by panels and report tables."""

    primary: str = "cyan"
    accent: str = "green"

    success: str = "green"
    error: str = "red"
    info: str = "blue"

    # Report cells by score band; NA cells use `missing`.
    score_good: str = "green bold"
    score_mid: str = "yellow"
    score_poor: str = "red"
    missing: str = "dim"

    table_header: str = "bold magenta"
    table_border: str = "bright_blue"
    table_title: str = "bold cyan"


THEMES = {
    "default": CLITheme(),
    "professional": CLITheme(
        primary="blue",
        accent="cyan",
        table_header="bold blue",
        table_border="blue",
    ),
    # No colour on scores; useful when piping to a log.
    "minimal": CLITheme(
        primary="white",
        accent="cyan",
        success="bold",
        error="bold",
        info="",
        score_good="bold",
        score_mid="",
        score_poor="",
        table_header="bold",
        table_border="dim",
        table_title="bold",
    ),
}


@dataclass
class CLIConfig:
    theme_name: str = "default"
    show_banner: bool = True
    verbose: bool = False

    @property
    def theme(self) -> CLITheme:
        return THEMES.get(self.theme_name, THEMES["default"])


_config: Optional[CLIConfig] = None


def get_config() -> CLIConfig:
    """Return the process-wide CLI settings, creating them on first use."""
    global _config
    if _config is None:
        _config = CLIConfig()
    return _config


def set_theme(theme_name: str) -> None:
    """Switch theme; unknown names keep the current one."""
    if theme_name in THEMES:
        get_config().theme_name = theme_name


def get_theme() -> CLITheme:
    return get_config().theme
