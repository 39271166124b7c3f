"""FTAP command: no-arbitrage verdict, witness law, and the optional local arbitrage check on a cell."""

from fractions import Fraction
from typing import Dict, Optional

import typer
from rich.console import Console
from rich.panel import Panel

from robusthedge.utils.config import CliState
from robusthedge.utils.dual import ftap_feasibility, local_arbitrage_probe, write_farkas_text, write_measure_csv
from robusthedge.utils.errors import CellSelectionError, ExitCode
from robusthedge.utils.market import enumerate_paths, format_path, select_cell
from robusthedge.utils.reports import command_errors, config_table, fmt, summary_table

console = Console()


def parse_cell(text: str) -> Dict[int, Fraction]:
    """``"1=2,2=1/2"`` -> {1: 2, 2: 1/2}: conditions s_k = value."""
    conditions: Dict[int, Fraction] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise CellSelectionError(f"cell condition {part!r} is not of the form k=value")
        k, value = part.split("=", 1)
        try:
            conditions[int(k.strip())] = Fraction(value.strip())
        except ValueError:
            raise CellSelectionError(f"cell condition {part!r} is not of the form k=value") from None
    if not conditions:
        raise CellSelectionError("cell specification is empty")
    return conditions


def ftap_command(
    ctx: typer.Context,
    cell: Optional[str] = typer.Option(
        None,
        "--cell",
        help="Maximal mass of the cell {s_k = value}, e.g. '1=2' or '1=1,2=3/2'",
    ),
) -> None:
    """Decide whether consistent approximate-martingale laws exist."""
    state: CliState = ctx.obj
    with command_errors(console):
        config, _ = state.load()
        console.print(Panel.fit("[bold cyan]No-arbitrage check[/bold cyan]"))
        console.print(config_table(config))
        grid = config.grid_spec()
        pricing = config.pricing_operator()
        solver = config.build_solver()
        cap = config.solver.path_cap
        conditions = parse_cell(cell) if cell is not None else config.analysis.cell
        if conditions is not None and not conditions:
            raise CellSelectionError("cell specification is empty")

        verdict = ftap_feasibility(grid, pricing, solver=solver, path_cap=cap)
        if not verdict.feasible:
            path = write_farkas_text(verdict.result.program.lp, verdict.farkas, config.out_path(config.output.farkas))
            check = verdict.result.farkas_check
            console.print(summary_table("FTAP report", [
                ("consistent laws", "none"),
                ("Farkas certificate", "verified" if check and check.valid else "FAILED verification"),
                ("certificate file", str(path)),
            ]))
            console.print(Panel.fit("[bold red]Model-independent arbitrage[/bold red]", border_style="red"))
            raise typer.Exit(code=ExitCode.ARBITRAGE)

        path = write_measure_csv(verdict.witness, config.out_path(config.output.witness))
        rows = [("consistent laws", "exist"), ("witness file", str(path))]
        if conditions:
            paths = enumerate_paths(grid, cap)
            members = select_cell(paths, conditions)
            cell_mass = local_arbitrage_probe(grid, pricing, members, solver=solver, path_cap=cap)
            rows.append(("cell", ", ".join(format_path(paths[i]) for i in members[:5]) + (" ..." if len(members) > 5 else "")))
            rows.append(("max Q(cell)", fmt(cell_mass.value)))
            if cell_mass.local_arbitrage:
                rows.append(("verdict", "null under every consistent law"))
        console.print(summary_table("FTAP report", rows))
        console.print(Panel.fit("[bold green]✓ No model-independent arbitrage[/bold green]", border_style="green"))
