"""Main CLI entry point for robusthedge."""

import sys
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console

from robusthedge import __version__
from robusthedge.commands.ftap import ftap_command
from robusthedge.commands.penalty import penalty_command
from robusthedge.commands.price import price_command
from robusthedge.commands.sweep import sweep_command
from robusthedge.commands.verify import verify_command
from robusthedge.utils.config import CliState
from robusthedge.utils.lp import get_known_solver_modes
from robusthedge.utils.reports import setup_logging

app = typer.Typer(
    name="robusthedge",
    help="robusthedge - model-free super-replication prices, dual measures and arbitrage certificates",
    add_completion=False,
)

console = Console()


def version_callback(value: bool) -> None:
    """Display version information."""
    if value:
        console.print(f"[bold green]robusthedge[/bold green] version [cyan]{__version__}[/cyan]")
        console.print(f"Python version: [cyan]{sys.version.split()[0]}[/cyan]")
        console.print(f"Solver modes: [cyan]{', '.join(get_known_solver_modes())}[/cyan]")
        raise typer.Exit()


@app.callback()
def global_options(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(
        None,
        "--config",
        "-c",
        help="Run configuration (YAML or JSON)",
    ),
    exact: bool = typer.Option(
        False,
        "--exact",
        help="Solve in exact rational arithmetic",
    ),
    dump_lp: Optional[Path] = typer.Option(
        None,
        "--dump-lp",
        help="Write the primal LP (and a .dual.lp sibling) as LP text",
    ),
    seed: Optional[int] = typer.Option(
        None,
        "--seed",
        help="Random seed (overrides solver.seed)",
    ),
    out: Optional[Path] = typer.Option(
        None,
        "--out",
        help="Output directory (overrides output.directory)",
    ),
    verbose: bool = typer.Option(
        False,
        "--verbose",
        help="Log solver progress to stderr",
    ),
    version: Optional[bool] = typer.Option(
        None,
        "--version",
        "-v",
        callback=version_callback,
        is_eager=True,
        help="Show version information",
    ),
) -> None:
    """robusthedge - super-replication under proportional transaction costs."""
    setup_logging(verbose)
    ctx.obj = CliState(
        config_path=config,
        exact=exact,
        dump_lp=dump_lp,
        seed=seed,
        out=out,
        verbose=verbose,
    )


# Register commands
app.command(name="price")(price_command)
app.command(name="penalty")(penalty_command)
app.command(name="ftap")(ftap_command)
app.command(name="verify")(verify_command)
app.command(name="sweep")(sweep_command)


def main() -> None:
    """CLI entry point."""
    app()
