"""Penalty command: bounded-increment hedging price against the penalized transport dual."""

from pathlib import Path

import typer
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from robusthedge.commands.price import dual_dump_path
from robusthedge.utils.config import CliState
from robusthedge.utils.dual import build_penalty_dual_lp, penalty_value, solve_penalty_dual
from robusthedge.utils.errors import ConfigError, ExitCode
from robusthedge.utils.lp import write_lp_text
from robusthedge.utils.market import enumerate_paths, payoff_bound
from robusthedge.utils.primal import build_constrained_lp, solve_constrained
from robusthedge.utils.reports import command_errors, config_table, fmt, summary_table
from robusthedge.utils.sweep import penalty_stabilization

console = Console()

FLOAT_TOLERANCE = 1e-7


def penalty_command(
    ctx: typer.Context,
    stabilize: bool = typer.Option(
        False,
        "--stabilize",
        help="Also double M until the value matches the unbounded-M price",
    ),
) -> None:
    """Compare the M-bounded hedging price with the penalty dual at the configured M."""
    state: CliState = ctx.obj
    with command_errors(console):
        config, base_dir = state.load()
        grid = config.grid_spec()
        if grid.M is None:
            raise ConfigError(["grid.M: the penalty command needs a finite M"], str(state.config_path))
        console.print(Panel.fit("[bold cyan]Bounded-increment hedging and penalty duality[/bold cyan]"))
        console.print(config_table(config))
        payoff = config.payoff_spec(base_dir)
        solver = config.build_solver()
        cap = config.solver.path_cap

        if config.output.dump_lp:
            target = Path(config.output.dump_lp)
            write_lp_text(build_constrained_lp(grid, payoff, grid.M, path_cap=cap), target)
            write_lp_text(build_penalty_dual_lp(grid, payoff, grid.M, path_cap=cap), dual_dump_path(target))

        primal = solve_constrained(grid, payoff, grid.M, solver=solver, path_cap=cap)
        dual = solve_penalty_dual(grid, payoff, grid.M, solver=solver, path_cap=cap)
        if not (primal.is_optimal and dual.is_optimal):
            console.print(
                f"[bold red]Error:[/bold red] internal inconsistency: primal {primal.status}, dual {dual.status}"
            )
            raise typer.Exit(code=ExitCode.INCONSISTENT)

        gap = primal.value - dual.value
        recomputed = penalty_value(dual.measure, payoff, grid.M, grid, dual.program.tree)
        tol = 0 if solver.exact else FLOAT_TOLERANCE
        rows = [
            ("constrained primal", fmt(primal.value)),
            ("penalty dual", fmt(dual.value)),
            ("gap", fmt(gap)),
            ("penalty recomputed", fmt(recomputed)),
            ("penalized nodes", str(len(dual.band_violations))),
        ]
        if grid.M == 0:
            rows.append(("max payoff", fmt(payoff_bound(payoff, enumerate_paths(grid, cap)))))
        console.print(summary_table("Penalty report", rows))

        failed = abs(gap) > tol or abs(recomputed - dual.value) > tol
        if stabilize:
            report = penalty_stabilization(
                grid,
                payoff,
                start_M=config.analysis.stabilize_start,
                max_doublings=config.analysis.max_doublings,
                solver=solver,
                path_cap=cap,
            )
            table = Table(title=f"Doubling M toward the unbounded value {fmt(report.target)}")
            table.add_column("M", style="cyan")
            table.add_column("value")
            for M, value in report.trail:
                table.add_row(fmt(M), fmt(value))
            console.print(table)
            if report.stabilized:
                console.print(f"[green]✓[/green] value stabilizes from M = {fmt(report.threshold)}")
            else:
                console.print(f"[yellow]⚠[/yellow]  no stabilization within {config.analysis.max_doublings} doublings")

        if failed:
            console.print("[bold red]Error:[/bold red] internal inconsistency: penalty duality does not close")
            raise typer.Exit(code=ExitCode.INCONSISTENT)
        console.print(Panel.fit("[bold green]✓ Penalty duality certified[/bold green]", border_style="green"))
