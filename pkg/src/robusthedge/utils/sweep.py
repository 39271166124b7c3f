"""Parameter sweeps over kappa, M, n or J, and the doubling search for the bound M past which
the constrained value stops moving."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from robusthedge.protocols import LinearSolver, PricingOperator
from robusthedge.utils.analysis import FLOAT_GAP_TOLERANCE, duality_gap
from robusthedge.utils.errors import GridSpecError
from robusthedge.utils.lp import Number, get_solver, to_fraction
from robusthedge.utils.market import DEFAULT_PATH_CAP, GridSpec, PayoffSpec, format_value
from robusthedge.utils.pricing import regrid
from robusthedge.utils.primal import lift_budget, solve_constrained

logger = logging.getLogger(__name__)

SWEEP_AXES = ("kappa", "M", "n", "J")
SWEEP_HEADER = ["axis_value", "primal", "dual", "gap", "status", "budget", "bound", "running_min"]
UNBOUNDED_LABELS = ("unbounded", "inf", "none")


def parse_axis_value(axis: str, raw: Any) -> Any:
    """Convert a CLI/config value for ``axis``; M accepts ``unbounded``."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"Unknown sweep axis: {axis}. Available: {', '.join(SWEEP_AXES)}")
    if axis == "M" and (raw is None or str(raw).strip().lower() in UNBOUNDED_LABELS):
        return None
    if axis in ("n", "J"):
        value = to_fraction(raw)
        if value.denominator != 1:
            raise ValueError(f"{axis} values must be integers, got {raw}")
        return int(value)
    return to_fraction(raw)


def grid_for(base: GridSpec, axis: str, value: Any) -> GridSpec:
    if axis == "kappa":
        return base.with_changes(kappa=value)
    if axis == "M":
        return base.with_changes(M=value)
    if axis == "n":
        # ceiling Jh stays fixed
        if (base.J * value) % base.n:
            raise GridSpecError(f"n={value} cannot keep the ceiling {base.ceiling} on an integer J")
        return base.with_changes(n=value, J=base.J * value // base.n)
    return base.with_changes(J=value)


@dataclass
class SweepPoint:
    axis_value: Any
    status: str
    primal: Optional[Number] = None
    dual: Optional[Number] = None
    gap: Optional[Number] = None
    budget: Optional[Number] = None
    bound: Optional[Number] = None
    running_min: Optional[Number] = None
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class SweepReport:
    axis: str
    values: List[Any]
    points: List[SweepPoint] = field(default_factory=list)
    monotone: Optional[bool] = None
    monotone_detail: str = ""

    @property
    def failures(self) -> List[SweepPoint]:
        return [p for p in self.points if p.failed]

    @property
    def passed(self) -> bool:
        return not self.failures and self.monotone is not False


@dataclass(frozen=True)
class _SweepTask:
    axis: str
    value: Any
    grid: GridSpec
    payoff: PayoffSpec
    pricing: PricingOperator
    base: GridSpec
    mode: str
    options: Tuple[Tuple[str, Any], ...]
    path_cap: int


def _run_point(task: _SweepTask) -> SweepPoint:
    point = SweepPoint(axis_value=task.value, status="error")
    try:
        grid = grid_for(task.grid, task.axis, task.value)
        pricing = regrid(task.pricing, task.base, grid) if task.axis in ("n", "J") else task.pricing
        solver = get_solver(task.mode, **dict(task.options))
        report = duality_gap(grid, task.payoff, pricing, solver=solver, path_cap=task.path_cap)
    except Exception as exc:  # recorded per point, the sweep continues
        point.error = f"{type(exc).__name__}: {exc}"
        return point
    point.status = report.status
    point.primal = report.primal_value
    point.dual = report.dual_value
    point.gap = report.gap
    if grid.M is not None and task.payoff.modulus_slope is not None:
        point.budget = lift_budget(task.payoff, grid)
        if point.primal is not None:
            point.bound = point.primal + point.budget
    return point


def _order_key(value: Any) -> float:
    if value is None:
        return math.inf
    return float(value)


def _check_monotone(report: SweepReport, exact: bool) -> None:
    if report.axis not in ("kappa", "M"):
        return
    tol = 0 if exact else FLOAT_GAP_TOLERANCE
    ordered = sorted(
        (p for p in report.points if p.status == "optimal"),
        key=lambda p: _order_key(p.axis_value),
    )
    report.monotone = True
    for before, after in zip(ordered, ordered[1:]):
        if report.axis == "kappa" and after.dual < before.dual - tol:
            report.monotone = False
            report.monotone_detail = (
                f"dual value drops from {before.dual} at kappa={before.axis_value} "
                f"to {after.dual} at kappa={after.axis_value}"
            )
            return
        if report.axis == "M" and after.primal > before.primal + tol:
            report.monotone = False
            report.monotone_detail = (
                f"primal value rises from {before.primal} at M={before.axis_value} "
                f"to {after.primal} at M={after.axis_value}"
            )
            return
    report.monotone_detail = "dual nondecreasing in kappa" if report.axis == "kappa" else "primal nonincreasing in M"


def convergence_sweep(
    grid: GridSpec,
    payoff: PayoffSpec,
    pricing: PricingOperator,
    axis: str,
    values: Sequence[Any],
    mode: str = "float",
    solver_options: Optional[Dict[str, Any]] = None,
    workers: int = 1,
    path_cap: int = DEFAULT_PATH_CAP,
) -> SweepReport:
    """Primal, dual, gap and lifting budget at each axis value; points run independently."""
    parsed = [parse_axis_value(axis, v) for v in values]
    options = tuple(sorted((solver_options or {}).items()))
    tasks = [_SweepTask(axis, v, grid, payoff, pricing, grid, mode, options, path_cap) for v in parsed]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_run_point, tasks))
    else:
        points = [_run_point(t) for t in tasks]
    running: Optional[Number] = None
    for point in points:
        if point.bound is not None:
            running = point.bound if running is None else min(running, point.bound)
        point.running_min = running
        logger.info("sweep %s=%s: %s", axis, point.axis_value, point.error or point.status)
    report = SweepReport(axis=axis, values=parsed, points=points)
    _check_monotone(report, mode == "exact")
    return report


def _cell(value: Optional[Number]) -> str:
    return "" if value is None else format_value(value)


def write_sweep_csv(report: SweepReport, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = []
    for p in report.points:
        rows.append([
            "unbounded" if p.axis_value is None else format_value(p.axis_value),
            _cell(p.primal),
            _cell(p.dual),
            _cell(p.gap),
            p.status if p.error is None else f"error: {p.error}",
            _cell(p.budget),
            _cell(p.bound),
            _cell(p.running_min),
        ])
    pd.DataFrame(rows, columns=SWEEP_HEADER, dtype=str).to_csv(path, index=False, lineterminator="\n")
    return path


@dataclass
class StabilizationReport:
    target: Number
    threshold: Optional[Fraction]
    trail: List[Tuple[Fraction, Number]] = field(default_factory=list)

    @property
    def stabilized(self) -> bool:
        return self.threshold is not None


def penalty_stabilization(
    grid: GridSpec,
    payoff: PayoffSpec,
    start_M: Number = Fraction(1),
    max_doublings: int = 20,
    solver: Optional[LinearSolver] = None,
    path_cap: int = DEFAULT_PATH_CAP,
) -> StabilizationReport:
    """Double M from ``start_M`` until the constrained value equals the unbounded-M value."""
    solver = solver or get_solver("float")
    target = solve_constrained(grid, payoff, None, solver=solver, path_cap=path_cap).value
    tol = 0 if solver.exact else FLOAT_GAP_TOLERANCE * max(1.0, abs(float(target)))
    report = StabilizationReport(target=target, threshold=None)
    M = to_fraction(start_M)
    if M <= 0:
        raise ValueError(f"start_M must be positive, got {start_M}")
    for _ in range(max_doublings + 1):
        value = solve_constrained(grid, payoff, M, solver=solver, path_cap=path_cap).value
        report.trail.append((M, value))
        if abs(value - target) <= tol:
            report.threshold = M
            break
        M = 2 * M
    return report
