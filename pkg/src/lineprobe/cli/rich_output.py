"""Rich-based renderers for CLI human-readable output.

Rich is a hard requirement of the CLI; there is no plain-text fallback.
Files written by the verbs are the library formats; this module only
renders what is shown on the terminal.
"""

import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from typing import Any, cast

from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

_logger = logging.getLogger(__name__)


def _cell(value: Any) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "-"
        return f"{value:.4g}"
    if isinstance(value, (list, tuple)):
        return ", ".join(_cell(v) for v in value)
    return str(value)


class OutputFormatter:
    """Rich output formatter for CLI human-readable output.

    Rich is mandatory; this formatter always renders with Rich.
    """

    def __init__(self) -> None:
        """Initialize the formatter."""
        self.console = Console()

    def print_error(
        self,
        message: str,
        title: str = "Error",
        details: list[str] | None = None,
    ) -> None:
        """Print an error message.

        Args:
            message: Main error message (one line)
            title: Panel title
            details: Optional list of detail lines
        """
        content = f"{title}\n\n{message}"
        if details:
            content += "\n\nDetails:"
            for detail in details:
                content += f"\n  • {detail}"
        panel = cast(Any, Panel)(content, border_style="red", padding=(1, 2))
        self.console.print(panel)

    def print_success(self, message: str) -> None:
        self.console.print(cast(Any, Text)(f"✓ {message}", style="green"))

    def print_key_values(self, title: str, values: Mapping[str, Any]) -> None:
        """Two-column table of labels and values."""
        table = cast(Any, Table)(title=title, show_header=False)
        for key, value in values.items():
            table.add_row(
                cast(Any, Text)(key, style="magenta"),
                cast(Any, Text)(_cell(value), style="green"),
            )
        self.console.print(table)

    def print_table(
        self,
        title: str,
        fieldnames: Sequence[str],
        rows: Iterable[Mapping[str, Any]],
    ) -> None:
        """Table with one column per field."""
        table = cast(Any, Table)(title=title)
        for name in fieldnames:
            table.add_column(name, justify="right")
        for row in rows:
            table.add_row(*(_cell(row.get(name, "")) for name in fieldnames))
        self.console.print(table)

    def print_verdict(self, passed: bool, label: str) -> None:
        """PASS/FAIL banner."""
        style = "bold green" if passed else "bold red"
        word = "PASS" if passed else "FAIL"
        self.console.print(cast(Any, Text)(f"{label}: {word}", style=style))


_formatter: OutputFormatter | None = None


def get_formatter() -> OutputFormatter:
    """Get the global formatter instance."""
    global _formatter
    if _formatter is None:
        _formatter = OutputFormatter()
    return _formatter
