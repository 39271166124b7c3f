"""Price command: semi-static super-replication price with its dual path measure."""

from pathlib import Path

import typer
from rich.console import Console
from rich.panel import Panel

from robusthedge.utils.analysis import GapReport, duality_gap
from robusthedge.utils.config import CliState, RunConfig
from robusthedge.utils.dual import build_dual_lp, write_farkas_text, write_measure_csv
from robusthedge.utils.errors import DualityInconsistencyError, ExitCode
from robusthedge.utils.lp import write_lp_text
from robusthedge.utils.primal import build_semistatic_lp, write_portfolio_csv
from robusthedge.utils.reports import command_errors, config_table, fmt, list_preview, summary_table

console = Console()


def dual_dump_path(path: Path) -> Path:
    """``run.lp`` -> ``run.dual.lp``."""
    return path.with_name(f"{path.stem}.dual{path.suffix or '.lp'}")


def price_command(ctx: typer.Context) -> None:
    """Solve the hedging LP and its dual, certify the gap and export both optimizers."""
    state: CliState = ctx.obj
    with command_errors(console):
        config, base_dir = state.load()
        console.print(Panel.fit("[bold cyan]Super-replication price[/bold cyan]"))
        console.print(config_table(config))
        grid = config.grid_spec()
        payoff = config.payoff_spec(base_dir)
        pricing = config.pricing_operator()
        solver = config.build_solver()
        cap = config.solver.path_cap

        if config.output.dump_lp:
            target = Path(config.output.dump_lp)
            write_lp_text(build_semistatic_lp(grid, payoff, pricing, path_cap=cap), target)
            write_lp_text(build_dual_lp(grid, payoff, pricing, path_cap=cap), dual_dump_path(target))
            console.print(f"[green]✓[/green] LP text written to [cyan]{target}[/cyan] and [cyan]{dual_dump_path(target)}[/cyan]")

        try:
            report = duality_gap(grid, payoff, pricing, solver=solver, path_cap=cap)
        except DualityInconsistencyError as e:
            if e.report is not None:
                _write_artifacts(e.report, config)
            console.print(f"[bold red]Error:[/bold red] internal inconsistency: {e}")
            console.print(f"Certificates dumped to [cyan]{config.output.directory}[/cyan]")
            raise typer.Exit(code=ExitCode.INCONSISTENT)

        _write_artifacts(report, config)
        if report.status == "optimal":
            _print_optimal(report, pricing.epsilon)
            return
        _print_arbitrage(report, config)
        raise typer.Exit(code=ExitCode.ARBITRAGE)


def _write_artifacts(report: GapReport, config: RunConfig) -> None:
    if report.primal.portfolio is not None:
        path = write_portfolio_csv(report.primal.portfolio, config.out_path(config.output.portfolio))
        console.print(f"[green]✓[/green] Portfolio written to [cyan]{path}[/cyan]")
    if report.dual.measure is not None:
        path = write_measure_csv(report.dual.measure, config.out_path(config.output.measure))
        console.print(f"[green]✓[/green] Dual measure written to [cyan]{path}[/cyan]")
    if report.dual.solution.farkas is not None:
        path = write_farkas_text(report.dual.program.lp, report.dual.solution.farkas, config.out_path(config.output.farkas))
        console.print(f"[green]✓[/green] Farkas certificate written to [cyan]{path}[/cyan]")


def _print_optimal(report: GapReport, epsilon) -> None:
    dual = report.dual
    rows = [
        ("primal value", fmt(report.primal_value)),
        ("dual value", fmt(report.dual_value)),
        ("gap", fmt(report.gap)),
        ("arithmetic", "exact" if report.exact else "float"),
        ("binding hedge paths", str(len(report.primal.binding_paths()))),
        ("binding dual rows", list_preview(dual.binding)),
    ]
    if dual.program.penalty:
        status = "in the consistent-price band" if dual.certified else f"penalized at {len(dual.band_violations)} node(s)"
        rows.append(("dual optimizer", status))
    console.print(summary_table("Price report", rows))
    if epsilon:
        console.print(
            f"[yellow]⚠[/yellow]  epsilon = {epsilon} widens every marginal constraint by a scalar; "
            "this is a surrogate for the relaxed measure set, not the set itself."
        )
    console.print(Panel.fit("[bold green]✓ Strong duality certified[/bold green]", border_style="green"))


def _print_arbitrage(report: GapReport, config: RunConfig) -> None:
    ray = report.primal.solution.ray
    farkas = report.dual.solution.farkas or []
    rows = [
        ("primal", "unbounded (improving ray verified)"),
        ("dual", "infeasible (Farkas certificate verified)"),
        ("ray support", str(sum(1 for d in ray.direction if d)) if ray else "-"),
        ("Farkas rows", str(sum(1 for y in farkas if y))),
        ("ray margin", fmt(report.primal.ray_check.margin) if report.primal.ray_check else "-"),
    ]
    console.print(summary_table("Arbitrage report", rows))
    console.print(Panel.fit(
        "[bold red]Model-independent arbitrage[/bold red]\n\n"
        f"See {config.out_path(config.output.farkas)} for the certificate.",
        border_style="red",
    ))
