"""Explicit constructions and certificate harnesses: the Doob-type tail strategy, tail-option
bounds, primal/dual gap reports and randomized feasible instances."""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from robusthedge.protocols import LinearSolver, PricingOperator
from robusthedge.utils.dual import DualResult, solve_dual
from robusthedge.utils.errors import DoobParameterError, DualityInconsistencyError
from robusthedge.utils.lp import Number, get_solver, to_fraction
from robusthedge.utils.market import (
    DEFAULT_PATH_CAP,
    GridSpec,
    PayoffSpec,
    PricePath,
    format_path,
)
from robusthedge.utils.pricing import CallQuotePricing, MeasureSetPricing, price_static
from robusthedge.utils.primal import HedgeResult, solve_primal, strategy_value

logger = logging.getLogger(__name__)

FLOAT_GAP_TOLERANCE = 1e-7
DOOB_RELATIVE_TOLERANCE = 1e-9


def _power(x: Number, r: Fraction) -> Number:
    if r.denominator == 1 and isinstance(x, (int, Fraction)):
        return Fraction(x) ** int(r)
    return float(x) ** float(r)


@dataclass(frozen=True)
class DoobParams:
    """Exponent r in (2, p) for the tail strategy; c_r = r/(r-1) and lambda = kappa * r * c_r."""

    kappa: Fraction
    r: Fraction = Fraction(3)
    p: Optional[Fraction] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kappa", to_fraction(self.kappa))
        object.__setattr__(self, "r", to_fraction(self.r))
        if self.p is not None:
            object.__setattr__(self, "p", to_fraction(self.p))
        if self.r <= 2:
            raise DoobParameterError(f"r must exceed 2, got {self.r}")
        if self.p is not None and self.r >= self.p:
            raise DoobParameterError(f"r={self.r} must lie below the growth exponent p={self.p}")
        if self.lam >= 1:
            raise DoobParameterError(
                f"kappa * r * c_r = {float(self.lam):.6g} violates kappa * r * c_r < 1; "
                "choose a larger r or a smaller kappa"
            )

    @property
    def c_r(self) -> Fraction:
        return self.r / (self.r - 1)

    @property
    def lam(self) -> Fraction:
        return self.kappa * self.r * self.c_r


@dataclass(frozen=True)
class DoobStrategy:
    params: DoobParams

    def static(self, x: Number) -> Number:
        """f(x) = (c_r x)^r - c_r."""
        c = self.params.c_r
        return _power(c * x, self.params.r) - c

    def position(self, k: int, path: Sequence[Number]) -> Number:
        """gamma_k = -r c_r (S*_k)^(r-1), S*_k the running maximum up to k."""
        running = max(path[: k + 1])
        return -self.params.r * self.params.c_r * _power(running, self.params.r - 1)

    def positions(self, path: Sequence[Number]) -> List[Number]:
        return [self.position(k, path) for k in range(len(path) - 1)]

    def terminal_value(self, path: Sequence[Number], kappa: Number) -> Number:
        return strategy_value(self.static(path[-1]), self.positions(path), path, kappa)


def doob_strategy(params: DoobParams) -> DoobStrategy:
    return DoobStrategy(params)


@dataclass
class DoobReport:
    checked: int = 0
    min_slack: Optional[float] = None
    worst_path: Optional[PricePath] = None
    violations: List[Tuple[PricePath, float, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def verify_doob(params: DoobParams, paths: Sequence[PricePath], grid: GridSpec) -> DoobReport:
    """Check Y(S) >= (1 - lambda) ||S||^r on every given path, in floating point."""
    strategy = doob_strategy(params)
    report = DoobReport()
    kappa = float(grid.kappa)
    r = float(params.r)
    floor = 1.0 - float(params.lam)
    for path in paths:
        values = [float(s) for s in path]
        wealth = float(strategy.terminal_value(values, kappa))
        bound = floor * max(values) ** r
        slack = wealth - bound
        report.checked += 1
        if report.min_slack is None or slack < report.min_slack:
            report.min_slack = slack
            report.worst_path = tuple(path)
        if slack < -DOOB_RELATIVE_TOLERANCE * max(1.0, abs(bound)):
            report.violations.append((tuple(path), wealth, bound))
    logger.debug("doob check on %d paths, min slack %s", report.checked, report.min_slack)
    return report


@dataclass
class TailBoundRow:
    threshold: Fraction
    status: str
    primal: Optional[Number]
    bound: Number

    @property
    def holds(self) -> bool:
        # an arbitrage instance has primal value -infinity
        if self.primal is None:
            return self.status == "arbitrage"
        return self.primal <= self.bound + (0 if isinstance(self.primal, Fraction) else 1e-9)


@dataclass
class TailBoundReport:
    static_cost: Number
    rows: List[TailBoundRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(row.holds for row in self.rows)


def tail_bound_check(
    grid: GridSpec,
    P: PricingOperator,
    params: DoobParams,
    thresholds: Sequence[Number],
    solver: Optional[LinearSolver] = None,
    path_cap: int = DEFAULT_PATH_CAP,
) -> TailBoundReport:
    """Compare the LP price of ||S||^2 1{||S|| >= M0} with P(f) / ((1 - lambda) M0^(r-2))."""
    solver = solver or get_solver("float")
    unbounded = grid.with_changes(M=None)
    strategy = doob_strategy(params)
    f = [strategy.static(x) for x in grid.values]
    static_cost = price_static(P, f, grid.values, solver=solver, epsilon=P.epsilon)
    report = TailBoundReport(static_cost=static_cost)
    for m0 in thresholds:
        m0 = to_fraction(m0)
        bound = static_cost / ((1 - params.lam) * _power(m0, params.r - 2))
        result = solve_primal(unbounded, PayoffSpec.tail(m0), P, solver=solver, path_cap=path_cap)
        report.rows.append(TailBoundRow(m0, result.status, result.value, bound))
    return report


@dataclass
class GapReport:
    status: str
    primal: HedgeResult
    dual: DualResult
    gap: Optional[Number]
    exact: bool

    @property
    def primal_value(self) -> Optional[Number]:
        return self.primal.value

    @property
    def dual_value(self) -> Optional[Number]:
        return self.dual.value


def duality_gap(
    grid: GridSpec,
    payoff: PayoffSpec,
    P: PricingOperator,
    solver: Optional[LinearSolver] = None,
    path_cap: int = DEFAULT_PATH_CAP,
) -> GapReport:
    """Solve both sides and certify strong duality or the arbitrage pairing.

    Any mismatch (status pairing, certificate check, gap above tolerance) raises
    DualityInconsistencyError carrying the report.
    """
    solver = solver or get_solver("float")
    primal = solve_primal(grid, payoff, P, solver=solver, path_cap=path_cap)
    dual = solve_dual(grid, payoff, P, solver=solver, path_cap=path_cap)
    if primal.is_optimal and dual.is_optimal:
        report = GapReport("optimal", primal, dual, primal.value - dual.value, solver.exact)
        limit = 0 if solver.exact else FLOAT_GAP_TOLERANCE * max(1.0, abs(float(primal.value)))
        if abs(report.gap) > limit:
            _inconsistent(report, f"duality gap {report.gap} exceeds tolerance {limit}")
        return report
    report = GapReport("arbitrage", primal, dual, None, solver.exact)
    if primal.status == "arbitrage" and dual.status == "infeasible":
        if not primal.ray_check.valid:
            _inconsistent(report, "improving ray failed verification: " + "; ".join(primal.ray_check.problems))
        if dual.farkas_check is None or not dual.farkas_check.valid:
            problems = dual.farkas_check.problems if dual.farkas_check else ["no certificate"]
            _inconsistent(report, "Farkas certificate failed verification: " + "; ".join(problems))
        return report
    _inconsistent(report, f"primal status {primal.status} does not pair with dual status {dual.status}")


def _inconsistent(report: GapReport, message: str) -> None:
    raise DualityInconsistencyError(message, report)


@dataclass
class RandomInstance:
    grid: GridSpec
    payoff: PayoffSpec
    pricing: PricingOperator

    @property
    def label(self) -> str:
        g = self.grid.describe()
        return (
            f"n={g['n']} J={g['J']} N={g['N']} kappa={g['kappa']} M={g['M']} "
            f"{self.payoff.label} {self.pricing.kind}"
        )


def mean_one_marginal(grid: GridSpec, rng: np.random.Generator) -> List[Fraction]:
    """Random probability vector on the grid with mean exactly 1.

    A random integer-weighted vector is mixed with the point mass at 0 (mean too high) or at
    Jh (mean too low) so the mixture has mean 1.
    """
    raw = [Fraction(int(a)) for a in rng.integers(0, 5, size=grid.J + 1)]
    if not any(raw):
        raw[grid.index_of(1)] = Fraction(1)
    total = sum(raw)
    mu = [w / total for w in raw]
    mean = sum((w * x for w, x in zip(mu, grid.values)), Fraction(0))
    if mean > 1:
        alpha = 1 / mean
        mu = [alpha * w for w in mu]
        mu[0] += 1 - alpha
    elif mean < 1:
        top = grid.ceiling
        if top == 1:
            mu = [Fraction(0)] * (grid.J + 1)
            mu[grid.index_of(1)] = Fraction(1)
            return mu
        alpha = (top - 1) / (top - mean)
        mu = [alpha * w for w in mu]
        mu[-1] += 1 - alpha
    return mu


def random_instance(
    rng: np.random.Generator,
    horizons: Sequence[int] = (1, 2, 3),
    scales: Sequence[int] = (1, 2),
    max_J: int = 3,
    kappas: Sequence[Number] = (0, Fraction(1, 20), Fraction(1, 10), Fraction(1, 5)),
    bounds: Sequence[Optional[Number]] = (1, 5, None),
    kinds: Sequence[str] = ("measures", "calls"),
) -> RandomInstance:
    """Feasible instance: measures or call quotes built around a mean-one marginal."""
    n = int(rng.choice(scales))
    J = int(rng.integers(n, max(n, max_J) + 1))
    N = int(rng.choice(horizons))
    kappa = kappas[int(rng.integers(len(kappas)))]
    M = bounds[int(rng.integers(len(bounds)))]
    grid = GridSpec(n=n, J=J, N=N, kappa=kappa, M=M)
    mu = mean_one_marginal(grid, rng)
    kind = kinds[int(rng.integers(len(kinds)))]
    if kind == "measures":
        measures = [mu]
        if rng.random() < 0.5:
            measures.append(mean_one_marginal(grid, rng))
        pricing: PricingOperator = MeasureSetPricing(measures)
    else:
        quotes = []
        for strike in grid.values[1:]:
            if rng.random() < 0.6:
                mid = sum((w * max(x - strike, 0) for w, x in zip(mu, grid.values)), Fraction(0))
                spread = Fraction(int(rng.integers(0, 3)), 20)
                quotes.append((strike, max(mid - spread, Fraction(0)), mid + spread))
        pricing = CallQuotePricing(quotes)
    strike = grid.values[int(rng.integers(0, grid.J + 1))]
    choice = int(rng.integers(0, 4))
    payoff = [PayoffSpec.call(strike), PayoffSpec.put(strike), PayoffSpec.asian(strike), PayoffSpec.lookback()][choice]
    return RandomInstance(grid, payoff, pricing)


def format_violation(path: PricePath, wealth: float, bound: float) -> str:
    return f"{format_path(path)}: wealth {wealth!r} < bound {bound!r}"
