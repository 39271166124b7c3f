"""Console rendering shared by the commands, and logging setup for --verbose."""

import logging
from contextlib import contextmanager
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence, Tuple

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from robusthedge.utils.config import RunConfig, flatten
from robusthedge.utils.errors import (
    ConfigError,
    DualityInconsistencyError,
    ExitCode,
    MissingArtifactError,
    SolverStallError,
    SolverStateError,
    StaticArbitrageError,
)
from robusthedge.utils.lp import Number


def setup_logging(verbose: bool) -> None:
    """DEBUG with a RichHandler on stderr when verbose, WARNING otherwise."""
    handler = RichHandler(
        console=Console(stderr=True),
        show_time=False,
        show_path=False,
        markup=False,
    )
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(name)s: %(message)s",
        handlers=[handler],
        force=True,
    )


def fmt(value: Optional[Number]) -> str:
    """Exact values as ``p/q (decimal)``, floats with 12 significant digits."""
    if value is None:
        return "-"
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value} ({float(value):.12g})"
    if isinstance(value, int):
        return str(value)
    return f"{float(value):.12g}"


def config_table(config: RunConfig) -> Table:
    table = Table(title="Run configuration", show_header=True, header_style="bold")
    table.add_column("Field", style="cyan")
    table.add_column("Value")
    for key, value in flatten(config):
        table.add_row(key, value)
    return table


def summary_table(title: str, rows: Iterable[Tuple[str, str]]) -> Table:
    table = Table(title=title, show_header=False)
    table.add_column("Item", style="cyan")
    table.add_column("Value")
    for key, value in rows:
        table.add_row(key, value)
    return table


def list_preview(items: Sequence[str], limit: int = 10) -> str:
    if not items:
        return "none"
    shown = ", ".join(items[:limit])
    if len(items) > limit:
        shown += f" ... ({len(items) - limit} more)"
    return shown


@contextmanager
def command_errors(console: Console) -> Iterator[None]:
    """Map library exceptions to the exit-code contract, printing a red Error line."""
    try:
        yield
    except ConfigError as e:
        where = f" ({e.source})" if e.source else ""
        console.print(f"[bold red]Error:[/bold red] invalid configuration{where}")
        for message in e.messages:
            console.print(f"  • {message}")
        raise typer.Exit(code=ExitCode.CONFIG)
    except StaticArbitrageError as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        raise typer.Exit(code=ExitCode.ARBITRAGE)
    except MissingArtifactError as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        console.print("Run 'robusthedge price' first or pass --portfolio <path>.")
        raise typer.Exit(code=ExitCode.MISSING_ARTIFACT)
    except (DualityInconsistencyError, SolverStallError, SolverStateError) as e:
        console.print(f"[bold red]Error:[/bold red] internal inconsistency: {e}")
        raise typer.Exit(code=ExitCode.INCONSISTENT)
    except (ValueError, KeyError, FileNotFoundError) as e:
        # grid, pricing, payoff, cell and size validation all land here
        message = e.args[0] if isinstance(e, KeyError) and e.args else e
        console.print(f"[bold red]Error:[/bold red] {message}")
        raise typer.Exit(code=ExitCode.CONFIG)
