"""Dual problems over path measures: approximate-martingale transport with marginal constraints,
its penalized form for bounded trading, FTAP feasibility and local arbitrage checks on cells."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd

from robusthedge.protocols import LinearSolver, PricingOperator
from robusthedge.utils.errors import CellSelectionError, SolverStateError
from robusthedge.utils.lp import (
    CertificateCheck,
    LinearProgram,
    Number,
    Solution,
    get_solver,
    verify_farkas,
)
from robusthedge.utils.market import (
    DEFAULT_PATH_CAP,
    GridSpec,
    PathTree,
    PayoffSpec,
    PricePath,
    build_tree,
    enumerate_paths,
    eval_payoff,
    format_path,
    format_prefix,
    format_value,
)
from robusthedge.utils.pricing import marginal_constraints

logger = logging.getLogger(__name__)

# cell masses at or below this count as zero in float mode
NULL_MASS_TOLERANCE = 1e-9


@dataclass
class PathMeasure:
    """Weights q(w) on the enumerated paths."""

    paths: List[PricePath]
    weights: List[Number]

    @property
    def mass(self) -> Number:
        return sum(self.weights, 0)

    def is_probability(self, tolerance: Number = 0) -> bool:
        return all(q >= -tolerance for q in self.weights) and abs(self.mass - 1) <= tolerance

    def expectation(self, values: Sequence[Number]) -> Number:
        return sum((q * v for q, v in zip(self.weights, values) if q), 0)

    def node_mass(self, tree: PathTree, index: int) -> Number:
        return sum((self.weights[p] for p in tree.nodes[index].paths), 0)

    def node_drift(self, tree: PathTree, index: int) -> Number:
        """m(v) = sum over paths through v of q(w) (s_N(w) - s_k(v))."""
        node = tree.nodes[index]
        return sum((self.weights[p] * (self.paths[p][-1] - node.spot) for p in node.paths), 0)

    def terminal_marginal(self, grid: GridSpec) -> List[Number]:
        rho: List[Number] = [0] * (grid.J + 1)
        for path, q in zip(self.paths, self.weights):
            rho[grid.index_of(path[-1])] += q
        return rho

    def band_violations(self, tree: PathTree, kappa: Number, tolerance: Number = 0) -> List[str]:
        """Nodes where |m(v)| > kappa * s_k(v) * mu(v), the mass-multiplied consistent-price band."""
        bad = []
        for node in tree.trading_nodes():
            drift = self.node_drift(tree, node.index)
            width = kappa * node.spot * self.node_mass(tree, node.index)
            if abs(drift) > width + tolerance:
                bad.append(format_prefix(node.prefix))
        return bad

    def normalized(self) -> "PathMeasure":
        mass = self.mass
        return PathMeasure(self.paths, [q / mass for q in self.weights])


def conditional_expectation(q: PathMeasure, tree: PathTree, k: int) -> Dict[tuple, Optional[Number]]:
    """E_q[S_N | F_k] per depth-k node; zero-mass nodes map to None (vacuous)."""
    result: Dict[tuple, Optional[Number]] = {}
    for node in tree.nodes_at(k):
        mass = q.node_mass(tree, node.index)
        if mass == 0:
            result[node.prefix] = None
            continue
        total = sum((q.weights[p] * q.paths[p][-1] for p in node.paths), 0)
        result[node.prefix] = total / mass
    return result


def penalty_value(
    q: PathMeasure,
    payoff: PayoffSpec,
    M: Number,
    grid: GridSpec,
    tree: Optional[PathTree] = None,
) -> Number:
    """E_q[F] - M * sum_k E_q[(|S~_k - S_k| - kappa S_k)^+], computed from conditional expectations."""
    tree = tree or build_tree(q.paths)
    gain = q.expectation([eval_payoff(payoff, p) for p in q.paths])
    return gain - M * band_penalty(q, tree, grid.kappa)


def band_penalty(q: PathMeasure, tree: PathTree, kappa: Number) -> Number:
    total: Number = 0
    for k in range(tree.horizon):
        shadow = conditional_expectation(q, tree, k)
        for node in tree.nodes_at(k):
            s_tilde = shadow[node.prefix]
            if s_tilde is None:
                continue
            excess = abs(s_tilde - node.spot) - kappa * node.spot
            if excess > 0:
                total = total + q.node_mass(tree, node.index) * excess
    return total


@dataclass
class DualProgram:
    lp: LinearProgram
    grid: GridSpec
    paths: List[PricePath]
    tree: PathTree
    q: List[int]
    penalty: Dict[tuple, int] = field(default_factory=dict)
    band_rows: List[str] = field(default_factory=list)
    marginal_rows: List[str] = field(default_factory=list)

    def measure(self, x: Sequence[Number]) -> PathMeasure:
        return PathMeasure(self.paths, [x[j] for j in self.q])


def _dual_program(
    grid: GridSpec,
    objective: Sequence[Number],
    P: Optional[PricingOperator],
    penalty_weight: Optional[Number],
    paths: List[PricePath],
    name: str,
) -> DualProgram:
    tree = build_tree(paths)
    lp = LinearProgram(name, sense="max")
    q = [lp.add_variable(f"q[{format_path(p)}]", objective=c) for p, c in zip(paths, objective)]
    lp.add_constraint("mass", {j: 1 for j in q}, "==", 1)
    program = DualProgram(lp, grid, paths, tree, q)
    kappa = grid.kappa
    for node in tree.trading_nodes():
        label = format_prefix(node.prefix)
        upper: Dict[int, Number] = {}
        lower: Dict[int, Number] = {}
        for p in node.paths:
            drift = paths[p][-1] - node.spot
            band = kappa * node.spot
            if drift - band:
                upper[q[p]] = drift - band
            if drift + band:
                lower[q[p]] = drift + band
        if penalty_weight is None:
            lp.add_constraint(f"band_hi[{label}]", upper, "<=", 0)
            lp.add_constraint(f"band_lo[{label}]", lower, ">=", 0)
            program.band_rows.extend([f"band_hi[{label}]", f"band_lo[{label}]"])
        else:
            t = lp.add_variable(f"pen[{label}]", objective=-penalty_weight)
            program.penalty[node.prefix] = t
            upper[t] = -1
            lower[t] = 1
            lp.add_constraint(f"pen_hi[{label}]", upper, "<=", 0)
            lp.add_constraint(f"pen_lo[{label}]", lower, ">=", 0)
            program.band_rows.extend([f"pen_hi[{label}]", f"pen_lo[{label}]"])
    if P is not None:
        family = marginal_constraints(P, grid)
        marginal: List[Dict[int, Number]] = [{} for _ in grid.values]
        for j, path in zip(q, paths):
            marginal[grid.index_of(path[-1])][j] = 1
        program.marginal_rows = family.apply(lp, marginal)
    return program


def build_dual_program(
    grid: GridSpec,
    payoff: PayoffSpec,
    P: PricingOperator,
    paths: Optional[List[PricePath]] = None,
    path_cap: int = DEFAULT_PATH_CAP,
) -> DualProgram:
    paths = paths if paths is not None else enumerate_paths(grid, path_cap)
    values = [eval_payoff(payoff, p) for p in paths]
    return _dual_program(grid, values, P, grid.M, paths, "approximate_martingale_transport")


def build_dual_lp(grid: GridSpec, payoff: PayoffSpec, P: PricingOperator, path_cap: int = DEFAULT_PATH_CAP) -> LinearProgram:
    """max E_q[G] over path measures with terminal marginal consistent with P.

    Unbounded M gives the hard consistent-price band at every node. A finite M replaces the
    band by its penalty with weight M, which is the exact dual of the M-admissible hedge.
    """
    return build_dual_program(grid, payoff, P, path_cap=path_cap).lp


def build_penalty_dual_program(
    grid: GridSpec,
    payoff: PayoffSpec,
    M: Optional[Number],
    paths: Optional[List[PricePath]] = None,
    path_cap: int = DEFAULT_PATH_CAP,
) -> DualProgram:
    grid = grid.with_changes(M=M)
    paths = paths if paths is not None else enumerate_paths(grid, path_cap)
    values = [eval_payoff(payoff, p) for p in paths]
    return _dual_program(grid, values, None, grid.M, paths, "penalty_transport")


def build_penalty_dual_lp(grid: GridSpec, payoff: PayoffSpec, M: Optional[Number], path_cap: int = DEFAULT_PATH_CAP) -> LinearProgram:
    """max E_q[F] - M sum_v t(v), t(v) >= |m(v)| - kappa c(v), t >= 0; no marginal constraints."""
    return build_penalty_dual_program(grid, payoff, M, path_cap=path_cap).lp


@dataclass
class DualResult:
    status: str
    value: Optional[Number]
    measure: Optional[PathMeasure]
    program: DualProgram
    solution: Solution
    recomputed: Optional[Number] = None
    penalty: Optional[Number] = None
    binding: List[str] = field(default_factory=list)
    band_violations: List[str] = field(default_factory=list)
    farkas_check: Optional[CertificateCheck] = None

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"

    @property
    def certified(self) -> bool:
        """Optimizer lies in the approximate-martingale set itself (no active penalty)."""
        return self.is_optimal and not self.band_violations


def solve_dual_program(
    program: DualProgram,
    payoff: Optional[PayoffSpec],
    solver: Optional[LinearSolver] = None,
) -> DualResult:
    solver = solver or get_solver("float")
    sol = solver.solve(program.lp)
    logger.debug("%s: %s after %d pivots", program.lp.name, sol.status, sol.pivots)
    if sol.status != "optimal":
        check = verify_farkas(program.lp, sol.farkas, exact=solver.exact) if sol.farkas is not None else None
        return DualResult(sol.status, None, None, program, sol, farkas_check=check)
    measure = program.measure(sol.x)
    tol = 0 if solver.exact else 1e-9
    weight = program.grid.M if program.penalty else None
    penalty = band_penalty(measure, program.tree, program.grid.kappa)
    if payoff is not None:
        gain = measure.expectation([eval_payoff(payoff, p) for p in program.paths])
        recomputed = gain - weight * penalty if weight is not None else gain
    else:
        recomputed = None
    binding = []
    for i, row in enumerate(program.lp.constraints):
        if row.sense != "==" and sol.duals[i] != 0 and abs(program.lp.row_activity(i, sol.x) - row.rhs) <= tol:
            binding.append(row.name)
    return DualResult(
        "optimal",
        sol.objective,
        measure,
        program,
        sol,
        recomputed=recomputed,
        penalty=penalty,
        binding=binding,
        band_violations=measure.band_violations(program.tree, program.grid.kappa, tol),
    )


def solve_dual(
    grid: GridSpec,
    payoff: PayoffSpec,
    P: PricingOperator,
    solver: Optional[LinearSolver] = None,
    path_cap: int = DEFAULT_PATH_CAP,
) -> DualResult:
    """Optimal path measure; infeasible status carries a checked Farkas certificate (empty dual set)."""
    return solve_dual_program(build_dual_program(grid, payoff, P, path_cap=path_cap), payoff, solver)


def solve_penalty_dual(
    grid: GridSpec,
    payoff: PayoffSpec,
    M: Optional[Number],
    solver: Optional[LinearSolver] = None,
    path_cap: int = DEFAULT_PATH_CAP,
) -> DualResult:
    return solve_dual_program(build_penalty_dual_program(grid, payoff, M, path_cap=path_cap), payoff, solver)


@dataclass
class FeasibilityVerdict:
    feasible: bool
    witness: Optional[PathMeasure]
    result: DualResult

    @property
    def farkas(self) -> Optional[List[Number]]:
        return self.result.solution.farkas


def ftap_feasibility(
    grid: GridSpec,
    P: PricingOperator,
    solver: Optional[LinearSolver] = None,
    path_cap: int = DEFAULT_PATH_CAP,
) -> FeasibilityVerdict:
    """Is the set of approximate-martingale laws consistent with P nonempty?"""
    paths = enumerate_paths(grid, path_cap)
    program = _dual_program(grid, [0] * len(paths), P, None, paths, "ftap_feasibility")
    result = solve_dual_program(program, None, solver)
    return FeasibilityVerdict(result.is_optimal, result.measure, result)


@dataclass
class CellMassResult:
    status: str
    value: Optional[Number]
    cell: List[int]
    result: DualResult

    @property
    def local_arbitrage(self) -> bool:
        if self.status != "optimal":
            return False
        if self.result.solution.mode == "exact":
            return self.value == 0
        return self.value <= NULL_MASS_TOLERANCE


def local_arbitrage_probe(
    grid: GridSpec,
    P: PricingOperator,
    cell: Sequence[int],
    solver: Optional[LinearSolver] = None,
    path_cap: int = DEFAULT_PATH_CAP,
) -> CellMassResult:
    """max Q(cell) over approximate-martingale laws consistent with P."""
    paths = enumerate_paths(grid, path_cap)
    if not cell:
        raise CellSelectionError("cell must select at least one path")
    members = set(cell)
    objective = [1 if i in members else 0 for i in range(len(paths))]
    program = _dual_program(grid, objective, P, None, paths, "local_arbitrage_probe")
    result = solve_dual_program(program, None, solver)
    return CellMassResult(result.status, result.value, list(cell), result)


def dual_of_primal(hedge_result, P: PricingOperator) -> PathMeasure:
    """Hedge-row duals of an optimal primal solve, normalized by mass, as a path measure."""
    if not hedge_result.is_optimal:
        raise SolverStateError(f"dual extraction needs an optimal primal, status is {hedge_result.status}")
    program = hedge_result.program
    duals = dict(zip(hedge_result.solution.row_names, hedge_result.solution.duals))
    measure = PathMeasure(program.paths, [duals[label] for label in program.hedge_rows])
    return measure.normalized()


def write_measure_csv(measure: PathMeasure, path: Path) -> Path:
    """Rows ``s_1,...,s_N,weight`` for every path with nonzero weight."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    horizon = len(measure.paths[0]) - 1 if measure.paths else 0
    columns = [f"s_{k}" for k in range(1, horizon + 1)] + ["weight"]
    rows = [
        [format_value(s) for s in p[1:]] + [format_value(q)]
        for p, q in zip(measure.paths, measure.weights)
        if q != 0
    ]
    pd.DataFrame(rows, columns=columns, dtype=str).to_csv(path, index=False, lineterminator="\n")
    return path


def write_farkas_text(lp: LinearProgram, multipliers: Sequence[Number], path: Path) -> Path:
    """One ``label multiplier`` line per row with a nonzero multiplier."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# Farkas combination for {lp.name}: rows with nonzero multipliers"]
    for row, y in zip(lp.constraints, multipliers):
        if y != 0:
            lines.append(f"{row.name} {format_value(y)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
