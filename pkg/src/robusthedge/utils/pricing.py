"""Static pricing operators (measure sets and call quotes) and their marginal constraint families."""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from robusthedge.protocols import LinearSolver, PricingOperator
from robusthedge.utils.errors import PricingError, StaticArbitrageError
from robusthedge.utils.lp import LinearProgram, Number, get_solver, to_fraction
from robusthedge.utils.market import GridSpec

logger = logging.getLogger(__name__)

# sum-to-one tolerance for measure vectors
MASS_TOLERANCE = Fraction(1, 10**12)


class MeasureSetPricing:
    """P(f) = max_j E_{mu_j}[f] over finitely many probability vectors on the terminal grid."""

    kind = "measures"

    def __init__(self, measures: Sequence[Sequence[Number]], epsilon: Number = 0, strict: bool = True) -> None:
        if not measures:
            raise PricingError("measure set is empty")
        self.measures: Tuple[Tuple[Fraction, ...], ...] = tuple(
            tuple(to_fraction(w) for w in mu) for mu in measures
        )
        self.epsilon = to_fraction(epsilon)
        if self.epsilon < 0:
            raise PricingError(f"epsilon must be nonnegative, got {self.epsilon}")
        widths = {len(mu) for mu in self.measures}
        if len(widths) != 1:
            raise PricingError(f"measures have different lengths {sorted(widths)}")
        self.strict = strict
        if strict:
            for j, mu in enumerate(self.measures):
                if any(w < 0 for w in mu):
                    raise PricingError(f"measure {j} has a negative weight")
                if abs(sum(mu) - 1) > MASS_TOLERANCE:
                    raise PricingError(f"measure {j} sums to {float(sum(mu))}, not 1")

    @property
    def width(self) -> int:
        return len(self.measures[0])

    def means(self, points: Sequence[Number]) -> List[Number]:
        return [sum((w * x for w, x in zip(mu, points)), Fraction(0)) for mu in self.measures]

    def price(
        self,
        f: Sequence[Number],
        points: Sequence[Number],
        solver: Optional[LinearSolver] = None,
        epsilon: Number = 0,
    ) -> Number:
        _check_width(f, points, self.width)
        best = max(sum((w * v for w, v in zip(mu, f)), Fraction(0)) for mu in self.measures)
        if epsilon:
            best = best + to_fraction(epsilon) * sum((abs(v) for v in f), Fraction(0))
        return best

    def describe(self) -> Dict[str, Any]:
        return {
            "measures": [[str(w) for w in mu] for mu in self.measures],
            "epsilon": str(self.epsilon),
        }


@dataclass(frozen=True)
class CallQuote:
    strike: Fraction
    bid: Fraction
    ask: Fraction

    def payoff(self, x: Number) -> Number:
        return max(x - self.strike, 0)


class CallQuotePricing:
    """Super-replication cost with bid/ask call quotes plus unit cash at price 1."""

    kind = "calls"

    def __init__(self, quotes: Sequence[Tuple[Number, Number, Number]], epsilon: Number = 0) -> None:
        self.quotes: Tuple[CallQuote, ...] = tuple(
            CallQuote(to_fraction(k), to_fraction(bid), to_fraction(ask)) for k, bid, ask in quotes
        )
        self.epsilon = to_fraction(epsilon)
        if self.epsilon < 0:
            raise PricingError(f"epsilon must be nonnegative, got {self.epsilon}")
        strikes = [q.strike for q in self.quotes]
        if len(set(strikes)) != len(strikes):
            raise PricingError("call strikes must be distinct")
        for q in self.quotes:
            if q.ask < q.bid:
                raise PricingError(f"quote at strike {q.strike} has ask {q.ask} below bid {q.bid}")

    def price(
        self,
        f: Sequence[Number],
        points: Sequence[Number],
        solver: Optional[LinearSolver] = None,
        epsilon: Number = 0,
    ) -> Number:
        lp = LinearProgram("static_replication", sense="min")
        static = add_cost_block(lp, self, points, epsilon=epsilon)
        for i, x in enumerate(points):
            lp.add_constraint(f"static[{x}]", static.expression(i), ">=", f[i])
        solution = (solver or get_solver("float")).solve(lp)
        if solution.status == "unbounded":
            raise StaticArbitrageError("call quotes are unbounded below: static arbitrage among the quotes")
        return solution.objective

    def describe(self) -> Dict[str, Any]:
        return {
            "calls": [{"strike": str(q.strike), "bid": str(q.bid), "ask": str(q.ask)} for q in self.quotes],
            "epsilon": str(self.epsilon),
        }


def _check_width(f: Sequence[Number], points: Sequence[Number], width: int) -> None:
    if len(f) != len(points) or len(points) != width:
        raise PricingError(
            f"grid function has {len(f)} values on {len(points)} points; operator expects {width}"
        )


def price_static(
    P: PricingOperator,
    f: Sequence[Number],
    points: Sequence[Number],
    solver: Optional[LinearSolver] = None,
    epsilon: Number = 0,
) -> Number:
    """Time-zero cost P(f) of a static payoff given on the terminal grid points."""
    return P.price(f, points, solver=solver, epsilon=epsilon)


@dataclass
class StaticBlock:
    """Variables a hedging program uses for the static leg.

    ``terms[i]`` is the linear expression of the static payoff at terminal point i, including
    the cash column; its cost already sits in the program objective.
    """

    cash: int
    terms: List[Dict[int, Number]]
    columns: Dict[str, int] = field(default_factory=dict)

    def expression(self, i: int) -> Dict[int, Number]:
        return dict(self.terms[i])


def add_cost_block(
    lp: LinearProgram, P: PricingOperator, points: Sequence[Number], epsilon: Optional[Number] = None
) -> StaticBlock:
    """Add the static leg and its P-cost to a minimization.

    For a measure set: free static values f(x), an epigraph t >= E_{mu_j}[f] and, when epsilon > 0,
    epsilon * sum |f(x)|. For call quotes: buy/sell amounts priced at ask + epsilon and bid - epsilon.
    """
    eps = to_fraction(P.epsilon if epsilon is None else epsilon)
    cash = lp.add_variable("cash", lower=None, objective=1)
    terms: List[Dict[int, Number]] = [{cash: 1} for _ in points]
    columns: Dict[str, int] = {"cash": cash}
    if P.kind == "measures":
        _check_width(points, points, P.width)
        t = lp.add_variable("static_cost", lower=None, objective=1)
        columns["static_cost"] = t
        f_cols = []
        for i, x in enumerate(points):
            col = lp.add_variable(f"f[{x}]", lower=None)
            f_cols.append(col)
            columns[f"f[{x}]"] = col
            terms[i][col] = 1
        for j, mu in enumerate(P.measures):
            coeffs: Dict[int, Number] = {t: 1}
            for col, w in zip(f_cols, mu):
                if w:
                    coeffs[col] = -w
            lp.add_constraint(f"cost[{j}]", coeffs, ">=", 0)
        if eps:
            for x, col in zip(points, f_cols):
                a = lp.add_variable(f"abs_f[{x}]", objective=eps)
                columns[f"abs_f[{x}]"] = a
                lp.add_constraint(f"abs_hi[{x}]", {a: 1, col: -1}, ">=", 0)
                lp.add_constraint(f"abs_lo[{x}]", {a: 1, col: 1}, ">=", 0)
    else:
        for q in P.quotes:
            buy = lp.add_variable(f"buy[{q.strike}]", objective=q.ask + eps)
            sell = lp.add_variable(f"sell[{q.strike}]", objective=-(q.bid - eps))
            columns[f"buy[{q.strike}]"] = buy
            columns[f"sell[{q.strike}]"] = sell
            for i, x in enumerate(points):
                c = q.payoff(to_fraction(x))
                if c:
                    terms[i][buy] = c
                    terms[i][sell] = -c
    return StaticBlock(cash=cash, terms=terms, columns=columns)


@dataclass
class MarginalConstraintFamily:
    """Linear constraints on a terminal marginal rho (one weight per terminal grid point)."""

    P: PricingOperator
    points: Tuple[Fraction, ...]
    epsilon: Fraction

    def apply(self, lp: LinearProgram, marginal: Sequence[Dict[int, Number]]) -> List[str]:
        """Add the family to ``lp``; ``marginal[i]`` is the expression of rho at point i.

        Total mass is left to the caller. Returns the labels of the rows added.
        """
        labels: List[str] = []
        eps = self.epsilon
        if self.P.kind == "measures":
            mix = [lp.add_variable(f"mix[{j}]") for j in range(len(self.P.measures))]
            lp.add_constraint("mix_total", {c: 1 for c in mix}, "==", 1)
            labels.append("mix_total")
            for i, x in enumerate(self.points):
                coeffs = dict(marginal[i])
                for col, mu in zip(mix, self.P.measures):
                    if mu[i]:
                        coeffs[col] = coeffs.get(col, 0) - mu[i]
                if eps:
                    lp.add_constraint(f"marg_hi[{x}]", coeffs, "<=", eps)
                    lp.add_constraint(f"marg_lo[{x}]", coeffs, ">=", -eps)
                    labels.extend([f"marg_hi[{x}]", f"marg_lo[{x}]"])
                else:
                    lp.add_constraint(f"marg[{x}]", coeffs, "==", 0)
                    labels.append(f"marg[{x}]")
        else:
            for q in self.P.quotes:
                coeffs: Dict[int, Number] = {}
                for i, x in enumerate(self.points):
                    c = q.payoff(x)
                    if c:
                        for col, a in marginal[i].items():
                            coeffs[col] = coeffs.get(col, 0) + c * a
                lp.add_constraint(f"call_hi[{q.strike}]", coeffs, "<=", q.ask + eps)
                lp.add_constraint(f"call_lo[{q.strike}]", coeffs, ">=", q.bid - eps)
                labels.extend([f"call_hi[{q.strike}]", f"call_lo[{q.strike}]"])
        return labels

    def contains(self, rho: Sequence[Number], solver: Optional[LinearSolver] = None) -> bool:
        """Feasibility of a marginal under the family, by one LP call."""
        if len(rho) != len(self.points):
            raise PricingError(f"marginal has {len(rho)} weights for {len(self.points)} points")
        exact = all(isinstance(r, (int, Fraction)) for r in rho)
        tol = 0 if exact else 1e-9
        if any(r < -tol for r in rho) or abs(sum(rho) - 1) > (tol or 0):
            return False
        lp = LinearProgram("marginal_membership", sense="min")
        cols = [lp.add_variable(f"rho[{x}]", lower=r, upper=r) for x, r in zip(self.points, rho)]
        self.apply(lp, [{c: 1} for c in cols])
        if solver is None:
            solver = get_solver("exact" if exact else "float")
        return solver.solve(lp).status == "optimal"


def marginal_constraints(
    P: PricingOperator, grid: GridSpec, epsilon: Optional[Number] = None
) -> MarginalConstraintFamily:
    """Constraints on terminal marginals consistent with P, widened by epsilon."""
    points = grid.values
    if P.kind == "measures" and P.width != len(points):
        raise PricingError(
            f"measures have {P.width} weights but the terminal grid has {len(points)} points"
        )
    eps = to_fraction(P.epsilon if epsilon is None else epsilon)
    return MarginalConstraintFamily(P=P, points=points, epsilon=eps)


def regrid(P: PricingOperator, old: GridSpec, new: GridSpec) -> PricingOperator:
    """Carry a measure set onto another grid that contains every old grid point."""
    if P.kind != "measures":
        return P
    index = [new.index_of(x) for x in old.values]
    measures = []
    for mu in P.measures:
        lifted = [Fraction(0)] * (new.J + 1)
        for i, w in zip(index, mu):
            lifted[i] += w
        measures.append(lifted)
    return MeasureSetPricing(measures, epsilon=P.epsilon, strict=P.strict)


@dataclass
class AxiomViolation:
    axiom: str
    witness: str
    lhs: Number
    rhs: Number


@dataclass
class AxiomReport:
    trials: int
    checks: Dict[str, int] = field(default_factory=dict)
    violations: List[AxiomViolation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def record(self, axiom: str, ok: bool, witness: str, lhs: Number, rhs: Number) -> None:
        self.checks[axiom] = self.checks.get(axiom, 0) + 1
        if not ok:
            self.violations.append(AxiomViolation(axiom, witness, lhs, rhs))


def check_axioms(
    P: PricingOperator,
    points: Sequence[Number],
    trials: int,
    rng: np.random.Generator,
    solver: Optional[LinearSolver] = None,
) -> AxiomReport:
    """Randomized audit of sublinearity, homogeneity, constant preservation and monotonicity."""
    report = AxiomReport(trials=trials)
    width = len(points)

    def price(f: Sequence[float]) -> float:
        return float(P.price(list(f), points, solver=solver))

    constants = [1.0] + [float(a) for a in rng.uniform(-10.0, 10.0, size=max(trials - 1, 0))]
    for a in constants[: max(trials, 1)]:
        value = price([a] * width)
        report.record("constant", abs(value - a) <= 1e-12 * max(1.0, abs(a)), f"a={a!r} -> {value!r}", value, a)

    for _ in range(trials):
        f = rng.normal(0.0, 1.0, size=width)
        g = rng.normal(0.0, 1.0, size=width)
        lam = float(rng.uniform(0.1, 10.0))
        pf, pg = price(f), price(g)
        pfg = price(f + g)
        report.record("subadditive", pfg <= pf + pg + 1e-9, f"f={list(f)!r}, g={list(g)!r}", pfg, pf + pg)
        plf = price(lam * f)
        report.record(
            "homogeneous",
            abs(plf - lam * pf) <= 1e-9 * max(1.0, abs(lam * pf)),
            f"lambda={lam!r}, f={list(f)!r}",
            plf,
            lam * pf,
        )
        upper = f + np.abs(g)
        pu = price(upper)
        report.record("monotone", pf <= pu + 1e-9, f"f={list(f)!r} <= {list(upper)!r}", pf, pu)
    logger.debug("axiom audit: %s checks, %d violations", report.checks, len(report.violations))
    return report
