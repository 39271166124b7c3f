"""Super-replication programs: semi-static hedging with P-priced statics, and the statics-free
variant with initial capital and bounded trading increments."""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from robusthedge.protocols import LinearSolver, PricingOperator
from robusthedge.utils.errors import MissingArtifactError
from robusthedge.utils.lp import (
    CertificateCheck,
    LinearProgram,
    Number,
    Solution,
    get_solver,
    to_fraction,
    verify_ray,
)
from robusthedge.utils.market import (
    DEFAULT_PATH_CAP,
    GridSpec,
    PathTree,
    PayoffSpec,
    Prefix,
    PricePath,
    build_tree,
    enumerate_paths,
    eval_payoff,
    format_path,
    format_prefix,
    format_value,
    interpolate,
    sample_continuum_path,
)
from robusthedge.utils.pricing import StaticBlock, add_cost_block

logger = logging.getLogger(__name__)


@dataclass
class Portfolio:
    """Static leg (terminal function or initial capital) plus positions per tree node.

    ``u`` and ``w`` split each position change: gamma(v) - gamma(parent) = u(v) - w(v).
    """

    gamma: Dict[Prefix, Number]
    u: Dict[Prefix, Number]
    w: Dict[Prefix, Number]
    static: Optional[Dict[Fraction, Number]] = None
    capital: Optional[Number] = None
    holdings: Dict[str, Number] = field(default_factory=dict)

    def normalize(self) -> "Portfolio":
        """Remove min(u, w) at every node; increments are unchanged and trading costs do not grow."""
        u: Dict[Prefix, Number] = {}
        w: Dict[Prefix, Number] = {}
        for prefix in self.gamma:
            m = min(self.u.get(prefix, 0), self.w.get(prefix, 0))
            u[prefix] = self.u.get(prefix, 0) - m
            w[prefix] = self.w.get(prefix, 0) - m
        return Portfolio(dict(self.gamma), u, w, self.static, self.capital, dict(self.holdings))

    def positions_along(self, path: Sequence[Number]) -> List[Number]:
        return [self.gamma[tuple(path[: k + 1])] for k in range(len(path) - 1)]

    def static_values(self, points: Sequence[Fraction]) -> List[Number]:
        if self.static is None:
            return [self.capital] * len(points)
        return [self.static[x] for x in points]

    def terminal_static(self, x: Number) -> Number:
        if self.static is None:
            return self.capital
        return self.static[to_fraction(x)]


def strategy_value(static_value: Number, positions: Sequence[Number], path: Sequence[Number], kappa: Number) -> Number:
    """Terminal value: static payoff plus trading gains minus proportional costs, with gamma(-1) = 0."""
    value = static_value
    previous = 0
    for k, position in enumerate(positions):
        value = value + position * (path[k + 1] - path[k]) - kappa * path[k] * abs(position - previous)
        previous = position
    return value


def portfolio_value(portfolio: Portfolio, path: Sequence[Number], grid: GridSpec) -> Number:
    return strategy_value(
        portfolio.terminal_static(path[-1]),
        portfolio.positions_along(path),
        path,
        grid.kappa,
    )


@dataclass
class HedgingProgram:
    """A hedging LP plus the column maps needed to read a Portfolio back out of a solution."""

    lp: LinearProgram
    grid: GridSpec
    paths: List[PricePath]
    tree: PathTree
    payoff_values: List[Number]
    gamma: Dict[Prefix, int]
    u: Dict[Prefix, int]
    w: Dict[Prefix, int]
    static: Optional[StaticBlock] = None
    capital: Optional[int] = None
    hedge_rows: List[str] = field(default_factory=list)

    def decode(self, x: Sequence[Number]) -> Portfolio:
        gamma = {p: x[j] for p, j in self.gamma.items()}
        u = {p: x[j] for p, j in self.u.items()}
        w = {p: x[j] for p, j in self.w.items()}
        if self.static is None:
            return Portfolio(gamma, u, w, capital=x[self.capital])
        static = {}
        for point, terms in zip(self.grid.values, self.static.terms):
            static[point] = sum((a * x[j] for j, a in terms.items()), 0)
        holdings = {name: x[j] for name, j in self.static.columns.items()}
        return Portfolio(gamma, u, w, static=static, holdings=holdings)


def _add_dynamic_leg(lp: LinearProgram, tree: PathTree, M: Optional[Fraction]):
    gamma: Dict[Prefix, int] = {}
    u: Dict[Prefix, int] = {}
    w: Dict[Prefix, int] = {}
    for node in tree.trading_nodes():
        label = format_prefix(node.prefix)
        gamma[node.prefix] = lp.add_variable(f"gamma[{label}]", lower=None)
        u[node.prefix] = lp.add_variable(f"u[{label}]")
        w[node.prefix] = lp.add_variable(f"w[{label}]")
    for node in tree.trading_nodes():
        label = format_prefix(node.prefix)
        coeffs = {gamma[node.prefix]: 1, u[node.prefix]: -1, w[node.prefix]: 1}
        if node.parent is not None:
            coeffs[gamma[tree.nodes[node.parent].prefix]] = -1
        lp.add_constraint(f"inc[{label}]", coeffs, "==", 0)
        if M is not None:
            lp.add_constraint(f"adm[{label}]", {u[node.prefix]: 1, w[node.prefix]: 1}, "<=", M)
    return gamma, u, w


def _add_hedge_rows(
    lp: LinearProgram,
    grid: GridSpec,
    paths: Sequence[PricePath],
    payoff_values: Sequence[Number],
    static_terms,
    gamma: Dict[Prefix, int],
    u: Dict[Prefix, int],
    w: Dict[Prefix, int],
) -> List[str]:
    labels = []
    for path, g in zip(paths, payoff_values):
        coeffs: Dict[int, Number] = dict(static_terms(path[-1]))
        for k in range(grid.N):
            prefix = tuple(path[: k + 1])
            move = path[k + 1] - path[k]
            if move:
                coeffs[gamma[prefix]] = move
            cost = grid.kappa * path[k]
            if cost:
                coeffs[u[prefix]] = -cost
                coeffs[w[prefix]] = -cost
        label = f"hedge[{format_path(path)}]"
        lp.add_constraint(label, coeffs, ">=", g)
        labels.append(label)
    return labels


def build_semistatic_program(
    grid: GridSpec,
    payoff: PayoffSpec,
    P: PricingOperator,
    paths: Optional[List[PricePath]] = None,
    path_cap: int = DEFAULT_PATH_CAP,
) -> HedgingProgram:
    paths = paths if paths is not None else enumerate_paths(grid, path_cap)
    tree = build_tree(paths)
    values = [eval_payoff(payoff, p) for p in paths]
    lp = LinearProgram("semistatic_hedge", sense="min")
    points = grid.values
    static = add_cost_block(lp, P, points)
    gamma, u, w = _add_dynamic_leg(lp, tree, grid.M)
    rows = _add_hedge_rows(
        lp, grid, paths, values, lambda s: static.expression(grid.index_of(s)), gamma, u, w
    )
    return HedgingProgram(lp, grid, paths, tree, values, gamma, u, w, static=static, hedge_rows=rows)


def build_semistatic_lp(grid: GridSpec, payoff: PayoffSpec, P: PricingOperator, path_cap: int = DEFAULT_PATH_CAP) -> LinearProgram:
    """Minimal P-cost of a semi-static portfolio dominating the payoff on every enumerated path."""
    return build_semistatic_program(grid, payoff, P, path_cap=path_cap).lp


def build_constrained_program(
    grid: GridSpec,
    payoff: PayoffSpec,
    M: Optional[Number],
    paths: Optional[List[PricePath]] = None,
    path_cap: int = DEFAULT_PATH_CAP,
) -> HedgingProgram:
    grid = grid.with_changes(M=M)
    paths = paths if paths is not None else enumerate_paths(grid, path_cap)
    tree = build_tree(paths)
    values = [eval_payoff(payoff, p) for p in paths]
    lp = LinearProgram("constrained_hedge", sense="min")
    capital = lp.add_variable("capital", lower=None, objective=1)
    gamma, u, w = _add_dynamic_leg(lp, tree, grid.M)
    rows = _add_hedge_rows(lp, grid, paths, values, lambda s: {capital: 1}, gamma, u, w)
    return HedgingProgram(lp, grid, paths, tree, values, gamma, u, w, capital=capital, hedge_rows=rows)


def build_constrained_lp(grid: GridSpec, payoff: PayoffSpec, M: Optional[Number], path_cap: int = DEFAULT_PATH_CAP) -> LinearProgram:
    """Minimal initial capital without statics, with |increments| bounded by M (None: unbounded)."""
    return build_constrained_program(grid, payoff, M, path_cap=path_cap).lp


@dataclass
class HedgeResult:
    status: str
    value: Optional[Number]
    portfolio: Optional[Portfolio]
    slacks: List[Number]
    program: HedgingProgram
    solution: Solution
    ray_portfolio: Optional[Portfolio] = None
    ray_check: Optional[CertificateCheck] = None

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"

    @property
    def min_slack(self) -> Optional[Number]:
        return min(self.slacks) if self.slacks else None

    def binding_paths(self) -> List[PricePath]:
        return [p for p, s in zip(self.program.paths, self.slacks) if s == 0]


def solve_program(program: HedgingProgram, solver: Optional[LinearSolver] = None) -> HedgeResult:
    solver = solver or get_solver("float")
    sol = solver.solve(program.lp)
    logger.debug("%s: %s after %d pivots", program.lp.name, sol.status, sol.pivots)
    if sol.status == "optimal":
        portfolio = program.decode(sol.x).normalize()
        slacks = [
            portfolio_value(portfolio, path, program.grid) - g
            for path, g in zip(program.paths, program.payoff_values)
        ]
        return HedgeResult("optimal", sol.objective, portfolio, slacks, program, sol)
    if sol.status == "unbounded":
        check = verify_ray(program.lp, sol.ray, exact=solver.exact)
        ray_portfolio = program.decode(sol.ray.direction)
        return HedgeResult("arbitrage", None, None, [], program, sol, ray_portfolio, check)
    return HedgeResult("infeasible", None, None, [], program, sol)


def solve_primal(
    grid: GridSpec,
    payoff: PayoffSpec,
    P: PricingOperator,
    solver: Optional[LinearSolver] = None,
    path_cap: int = DEFAULT_PATH_CAP,
) -> HedgeResult:
    """Super-replication price V^{n,M}; on arbitrage the result carries a verified improving ray."""
    return solve_program(build_semistatic_program(grid, payoff, P, path_cap=path_cap), solver)


def solve_constrained(
    grid: GridSpec,
    payoff: PayoffSpec,
    M: Optional[Number],
    solver: Optional[LinearSolver] = None,
    path_cap: int = DEFAULT_PATH_CAP,
) -> HedgeResult:
    return solve_program(build_constrained_program(grid, payoff, M, path_cap=path_cap), solver)


def hedge_cost(portfolio: Portfolio, P: PricingOperator, grid: GridSpec, solver: Optional[LinearSolver] = None) -> Number:
    """P-cost of the static leg, including the epsilon widening of the operator."""
    if portfolio.static is None:
        return portfolio.capital
    if P.kind == "calls":
        total = portfolio.holdings.get("cash", 0)
        for q in P.quotes:
            total = total + portfolio.holdings.get(f"buy[{q.strike}]", 0) * (q.ask + P.epsilon)
            total = total - portfolio.holdings.get(f"sell[{q.strike}]", 0) * (q.bid - P.epsilon)
        return total
    f = [portfolio.holdings.get(f"f[{x}]", 0) for x in grid.values]
    return portfolio.holdings.get("cash", 0) + P.price(f, grid.values, solver=solver, epsilon=P.epsilon)


@dataclass
class LiftResult:
    value: float
    out_of_model: bool = False
    warnings: List[str] = field(default_factory=list)


def lift_portfolio(portfolio: Portfolio, omega: Sequence[float], grid: GridSpec) -> LiftResult:
    """Evaluate the grid strategy on a continuum path: positions read at floored prefixes,
    static leg linearly interpolated at the terminal value."""
    n = grid.n
    h = float(grid.h)
    ceiling = float(grid.ceiling)
    warnings: List[str] = []
    if max(omega) > ceiling * (1 + 1 / n):
        warnings.append(f"path exceeds the grid ceiling {ceiling * (1 + 1 / n):g}; positions clamped")
    floored: List[Fraction] = [Fraction(1)]
    for value in omega[1:-1]:
        index = min(math.floor(n * value), grid.J)
        floored.append(index * grid.h)
    positions = [float(portfolio.gamma[tuple(floored[: k + 1])]) for k in range(grid.N)]
    statics = [float(v) for v in portfolio.static_values(grid.values)]
    static_value = interpolate(statics, float(omega[-1]), n)
    value = strategy_value(static_value, positions, [float(s) for s in omega], float(grid.kappa))
    logger.debug("lifted value %.12g on %s (h=%g)", value, omega, h)
    return LiftResult(value=float(value), out_of_model=bool(warnings), warnings=warnings)


def lift_budget(payoff: PayoffSpec, grid: GridSpec) -> Fraction:
    """Discretization budget m(h) + (N + 2 kappa) M N h."""
    if grid.M is None:
        raise ValueError("the lifting budget needs a finite trading bound M")
    if payoff.modulus_slope is None:
        raise ValueError(f"payoff {payoff.label} declares no modulus; lifting bounds are unavailable")
    h = grid.h
    return payoff.modulus_slope * h + (grid.N + 2 * grid.kappa) * grid.M * grid.N * h


@dataclass
class LiftReport:
    samples: int
    budget: Fraction
    violations: List[Dict[str, object]] = field(default_factory=list)
    min_margin: Optional[float] = None
    out_of_model: int = 0

    @property
    def passed(self) -> bool:
        return not self.violations


def check_lifting(
    portfolio: Portfolio,
    payoff: PayoffSpec,
    grid: GridSpec,
    samples: int,
    rng: np.random.Generator,
    tolerance: float = 1e-9,
) -> LiftReport:
    """Sample continuum paths and test lifted value >= G - budget on each."""
    if payoff.kind == "table":
        raise ValueError("lifting needs a payoff defined off the grid; table payoffs are grid-only")
    budget = lift_budget(payoff, grid)
    report = LiftReport(samples=samples, budget=budget)
    for _ in range(samples):
        omega = sample_continuum_path(grid, rng)
        lifted = lift_portfolio(portfolio, omega, grid)
        target = float(eval_payoff(payoff, omega)) - float(budget)
        margin = lifted.value - target
        report.out_of_model += int(lifted.out_of_model)
        report.min_margin = margin if report.min_margin is None else min(report.min_margin, margin)
        if margin < -tolerance * max(1.0, abs(target)):
            report.violations.append({"path": omega, "lifted": lifted.value, "target": target})
    return report


PORTFOLIO_HEADER = ["record", "depth", "prefix", "gamma", "u", "w", "value"]


def write_portfolio_csv(portfolio: Portfolio, path: Path) -> Path:
    """``node`` rows carry depth, prefix, gamma, u and w; ``terminal`` rows carry s_N as prefix
    and f(s_N) as value; a statics-free portfolio has one ``capital`` row instead."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records = []
    for prefix in sorted(portfolio.gamma, key=lambda p: (len(p), p)):
        records.append({
            "record": "node",
            "depth": str(len(prefix) - 1),
            "prefix": " ".join(format_value(s) for s in prefix),
            "gamma": format_value(portfolio.gamma[prefix]),
            "u": format_value(portfolio.u.get(prefix, 0)),
            "w": format_value(portfolio.w.get(prefix, 0)),
        })
    if portfolio.static is None:
        records.append({"record": "capital", "value": format_value(portfolio.capital)})
    else:
        for x in sorted(portfolio.static):
            records.append({"record": "terminal", "prefix": format_value(x), "value": format_value(portfolio.static[x])})
    frame = pd.DataFrame.from_records(records, columns=PORTFOLIO_HEADER).fillna("")
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def read_portfolio_csv(path: Path) -> Portfolio:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"portfolio artifact not found: {path}")
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = [c for c in PORTFOLIO_HEADER if c not in frame.columns]
    if missing:
        raise ValueError(f"{path}: portfolio artifact lacks columns {missing}")
    gamma: Dict[Prefix, Number] = {}
    u: Dict[Prefix, Number] = {}
    w: Dict[Prefix, Number] = {}
    static: Dict[Fraction, Number] = {}
    capital: Optional[Number] = None
    for row in frame.itertuples(index=False):
        if row.record == "node":
            prefix = tuple(to_fraction(s) for s in row.prefix.split())
            gamma[prefix] = to_fraction(row.gamma)
            u[prefix] = to_fraction(row.u)
            w[prefix] = to_fraction(row.w)
        elif row.record == "terminal":
            static[to_fraction(row.prefix)] = to_fraction(row.value)
        elif row.record == "capital":
            capital = to_fraction(row.value)
        else:
            raise ValueError(f"{path}: unknown record type {row.record!r}")
    return Portfolio(gamma, u, w, static=static or None, capital=capital)
