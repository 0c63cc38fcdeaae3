"""
Terminal output for analysis runs: rich when available, plain print otherwise
"""

from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

try:
    from rich.console import Console
    from rich.panel import Panel
    from rich.table import Table
    from rich.tree import Tree
    RICH_AVAILABLE = True
except ImportError:
    RICH_AVAILABLE = False
    Console = None

console = Console() if RICH_AVAILABLE else None


class TaskStatus:
    """Icons for the stages of a long command"""
    PENDING = "⏳"
    IN_PROGRESS = "🔄"
    COMPLETED = "✅"
    FAILED = "❌"
    WARNING = "⚠️"


STATUS_STYLES = {
    TaskStatus.IN_PROGRESS: "bold cyan",
    TaskStatus.COMPLETED: "green",
    TaskStatus.FAILED: "red",
    TaskStatus.WARNING: "yellow",
}


@dataclass
class Stage:
    key: str
    description: str
    status: str = TaskStatus.PENDING
    notes: List[str] = field(default_factory=list)


def format_cell(value: object) -> str:
    return f"{value:.6g}" if isinstance(value, float) else str(value)


class FancyUI:
    """Stage tracker, tables and messages for one command"""

    def __init__(self, use_rich: bool = True):
        self.use_rich = use_rich and RICH_AVAILABLE
        self.console = console if self.use_rich else None
        self.stages: List[Stage] = []

    # Stages

    def add_task(self, task_id: str, description: str, status: str = TaskStatus.PENDING):
        self.stages.append(Stage(task_id, description, status))

    def update_task(self, task_id: str, status: Optional[str] = None, details: Optional[str] = None):
        stage = next((s for s in self.stages if s.key == task_id), None)
        if stage is None:
            return
        if status:
            stage.status = status
        if details:
            stage.notes.append(details)

    def print_status(self, force_simple: bool = False):
        if not self.use_rich or force_simple:
            for stage in self.stages:
                print(f"{stage.status} {stage.description}")
                for note in stage.notes:
                    print(f"    {note}")
            return
        grid = Table(show_header=False, box=None, padding=(0, 1))
        grid.add_column("Status", width=3)
        grid.add_column("Stage")
        for stage in self.stages:
            style = STATUS_STYLES.get(stage.status)
            grid.add_row(stage.status, f"[{style}]{stage.description}[/{style}]" if style else stage.description)
            for note in stage.notes:
                grid.add_row("", f"  [dim]{note}[/dim]")
        self.console.print(grid)

    @contextmanager
    def spinner(self, text: str):
        """Spinner around a long computation"""
        if self.use_rich:
            with self.console.status(f"[bold cyan]{text}[/bold cyan]", spinner="dots") as status:
                yield status
        else:
            print(f"🔄 {text}...")
            yield None

    # Messages

    def _message(self, icon: str, style: str, text: str):
        if self.use_rich:
            self.console.print(f"[{style}]{icon} {text}[/{style}]")
        else:
            print(f"{icon} {text}")

    def success(self, message: str):
        self._message("✅", "bold green", message)

    def error(self, message: str):
        self._message("❌", "bold red", message)

    def warning(self, message: str):
        self._message("⚠️", "bold yellow", message)

    def info(self, message: str):
        self._message("ℹ️", "bold blue", message)

    # Blocks

    def panel(self, content: str, title: Optional[str] = None):
        if self.use_rich:
            self.console.print(Panel(content, title=title, border_style="blue"))
            return
        rule = "=" * 60
        print(rule)
        if title:
            print(f" {title}")
            print(rule)
        print(content)
        print(rule)

    def table(self, headers: Sequence[str], rows: Sequence[Sequence[object]], title: Optional[str] = None):
        """Rows of numbers under column headers, right-aligned"""
        cells = [[format_cell(value) for value in row] for row in rows]
        if self.use_rich:
            table = Table(title=title)
            for header in headers:
                table.add_column(header, justify="right")
            for row in cells:
                table.add_row(*row)
            self.console.print(table)
            return
        if title:
            print(f"\n{title}")
        widths = [max([len(str(h))] + [len(row[i]) for row in cells]) for i, h in enumerate(headers)]
        print("  ".join(str(h).rjust(w) for h, w in zip(headers, widths)))
        for row in cells:
            print("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))

    def details_section(self, title: str, items: List[str]):
        if self.use_rich:
            tree = Tree(f"[bold]{title}[/bold]")
            for item in items:
                tree.add(item)
            self.console.print(tree)
        else:
            print(f"\n{title}:")
            for item in items:
                print(f"   • {item}")
