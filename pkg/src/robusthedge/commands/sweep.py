"""Sweep command: primal/dual values and lifting budgets along one parameter axis."""

import typer
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from robusthedge.utils.config import CliState
from robusthedge.utils.errors import ExitCode
from robusthedge.utils.reports import command_errors, config_table, fmt
from robusthedge.utils.sweep import convergence_sweep, parse_axis_value, write_sweep_csv

console = Console()


def sweep_command(
    ctx: typer.Context,
    axis: str = typer.Option(..., "--axis", help="Axis to sweep: kappa, M, n or J"),
    values: str = typer.Option(
        ...,
        "--values",
        help="Comma-separated axis values, e.g. '0,0.05,0.1' or '1,5,unbounded'",
    ),
) -> None:
    """Solve at every axis value; exit 0 only if every point and monotonicity check passes."""
    state: CliState = ctx.obj
    with command_errors(console):
        raw = [v.strip() for v in values.split(",") if v.strip()]
        if not raw:
            raise ValueError("--values needs at least one value")
        for v in raw:
            parse_axis_value(axis, v)
        config, base_dir = state.load()
        console.print(Panel.fit(f"[bold cyan]Sweep over {axis}[/bold cyan]"))
        console.print(config_table(config))
        report = convergence_sweep(
            config.grid_spec(),
            config.payoff_spec(base_dir),
            config.pricing_operator(),
            axis,
            raw,
            mode=config.solver.mode,
            solver_options=config.solver_options(),
            workers=config.solver.workers,
            path_cap=config.solver.path_cap,
        )
        path = write_sweep_csv(report, config.out_path(f"sweep_{axis}.csv"))

        table = Table(title=f"Sweep over {axis}")
        for column in ("value", "primal", "dual", "gap", "status", "budget", "bound", "running min"):
            table.add_column(column)
        for p in report.points:
            status = p.status if p.error is None else f"[red]{p.error}[/red]"
            table.add_row(
                "unbounded" if p.axis_value is None else fmt(p.axis_value),
                fmt(p.primal),
                fmt(p.dual),
                fmt(p.gap),
                status,
                fmt(p.budget),
                fmt(p.bound),
                fmt(p.running_min),
            )
        console.print(table)
        console.print(f"[green]✓[/green] Sweep written to [cyan]{path}[/cyan]")
        if report.monotone is not None:
            mark = "[green]✓[/green]" if report.monotone else "[red]✗[/red]"
            console.print(f"{mark} monotonicity: {report.monotone_detail}")
        if not report.passed:
            console.print(Panel.fit(
                f"[bold red]Sweep failed[/bold red]\n\n{len(report.failures)} failing point(s).",
                border_style="red",
            ))
            raise typer.Exit(code=ExitCode.ASSERTION_FAILED)
        console.print(Panel.fit("[bold green]✓ Sweep passed[/bold green]", border_style="green"))
