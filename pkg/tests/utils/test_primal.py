"""Tests for the super-replication programs.

Covers:
  - semi-static price on a one-period instance with a hand-computed value
  - the statics-free program across trading bounds M
  - arbitrage detection with a verified improving ray
  - portfolio normalization, the normal-form re-solve, hedge cost and artifact I/O
  - monotonicity of the price in the cost rate
  - lifting grid strategies to continuum paths
"""
from fractions import Fraction

import numpy as np
import pytest

from robusthedge.utils.errors import MissingArtifactError
from robusthedge.utils.lp import get_solver
from robusthedge.utils.market import GridSpec, PayoffSpec
from robusthedge.utils.pricing import MeasureSetPricing
from robusthedge.utils.primal import (
    Portfolio,
    build_constrained_lp,
    build_semistatic_lp,
    build_semistatic_program,
    check_lifting,
    hedge_cost,
    lift_budget,
    lift_portfolio,
    portfolio_value,
    read_portfolio_csv,
    solve_constrained,
    solve_primal,
    solve_program,
    strategy_value,
    write_portfolio_csv,
)

F = Fraction
MU = (F(1, 4), F(1, 2), F(1, 4))


def one_period(kappa=F(1, 10), M=None) -> GridSpec:
    return GridSpec(n=1, J=2, N=1, kappa=kappa, M=M)


class TestStrategyValue:
    """Terminal wealth of a self-financing strategy with proportional costs."""

    def test_single_trade(self):
        assert strategy_value(1, [2], (F(1), F(3, 2)), F(1, 10)) == F(9, 5)

    def test_costs_charged_on_position_changes(self):
        # 0 -> 1 at s_0 = 1 and 1 -> -1 at s_1 = 2
        value = strategy_value(0, [1, -1], (F(1), F(2), F(2)), F(1, 10))
        assert value == 1 - F(1, 10) - F(4, 10)


class TestSemistaticPrice:
    """Minimal P-cost of a dominating semi-static portfolio."""

    @pytest.mark.parametrize("mode", ["float", "exact"])
    def test_one_period_call(self, mode):
        result = solve_primal(one_period(), PayoffSpec.call(1), MeasureSetPricing([MU]), solver=get_solver(mode))
        assert result.is_optimal
        assert result.value == pytest.approx(0.25, abs=1e-9)

    def test_portfolio_dominates_on_every_path(self):
        result = solve_primal(
            one_period(), PayoffSpec.call(1), MeasureSetPricing([MU]), solver=get_solver("exact")
        )
        assert result.min_slack >= 0
        assert result.binding_paths()

    def test_hedge_cost_matches_value(self):
        P = MeasureSetPricing([MU])
        result = solve_primal(one_period(), PayoffSpec.call(1), P, solver=get_solver("exact"))
        assert hedge_cost(result.portfolio, P, one_period()) == result.value

    def test_two_period_lookback_is_bounded_by_payoff_sup(self):
        grid = GridSpec(n=1, J=2, N=2, kappa=F(1, 10))
        result = solve_primal(grid, PayoffSpec.lookback(), MeasureSetPricing([MU]), solver=get_solver("exact"))
        assert result.is_optimal
        assert 0 <= result.value <= 2

    def test_arbitrage_returns_verified_ray(self):
        P = MeasureSetPricing([(F(1, 10), F(3, 5), F(3, 10))])
        result = solve_primal(one_period(), PayoffSpec.call(1), P, solver=get_solver("exact"))
        assert result.status == "arbitrage"
        assert result.value is None
        assert result.ray_check.valid, result.ray_check.problems

    def test_program_shape(self):
        lp = build_semistatic_lp(GridSpec(n=1, J=2, N=2, kappa=F(1, 10)), PayoffSpec.call(1), MeasureSetPricing([MU]))
        # one hedge row per path and one increment row per trading node
        assert sum(name.startswith("hedge[") for name in lp.row_names) == 9
        assert sum(name.startswith("inc[") for name in lp.row_names) == 4


class TestConstrainedPrice:
    """Initial capital without statics, with increments bounded by M."""

    @pytest.mark.parametrize(
        "M, expected",
        [
            (None, F(11, 20)),
            (0, F(1)),
            (F(1, 4), F(31, 40)),
            (F(1, 2), F(11, 20)),
            (3, F(11, 20)),
        ],
    )
    def test_values_across_bounds(self, M, expected):
        result = solve_constrained(one_period(), PayoffSpec.call(1), M, solver=get_solver("exact"))
        assert result.value == expected

    def test_float_matches_exact(self):
        result = solve_constrained(one_period(), PayoffSpec.call(1), F(1, 4))
        assert result.value == pytest.approx(0.775, abs=1e-9)

    def test_admissibility_rows_only_with_finite_M(self):
        grid = one_period()
        assert not any(n.startswith("adm[") for n in build_constrained_lp(grid, PayoffSpec.call(1), None).row_names)
        assert any(n.startswith("adm[") for n in build_constrained_lp(grid, PayoffSpec.call(1), 1).row_names)

    def test_trades_respect_bound(self):
        result = solve_constrained(one_period(), PayoffSpec.call(1), F(1, 4), solver=get_solver("exact"))
        for prefix in result.portfolio.gamma:
            assert result.portfolio.u[prefix] + result.portfolio.w[prefix] <= F(1, 4)


class TestPortfolio:
    """Normalization and artifact I/O."""

    def test_normalize_removes_offsetting_trades(self):
        root = (F(1),)
        portfolio = Portfolio(gamma={root: 1}, u={root: 3}, w={root: 2}, capital=0)
        normalized = portfolio.normalize()
        assert normalized.u[root] == 1
        assert normalized.w[root] == 0
        assert normalized.gamma == portfolio.gamma

    def test_csv_round_trip_of_a_solve(self, tmp_path):
        result = solve_primal(one_period(), PayoffSpec.call(1), MeasureSetPricing([MU]), solver=get_solver("exact"))
        path = write_portfolio_csv(result.portfolio, tmp_path / "portfolio.csv")
        loaded = read_portfolio_csv(path)
        assert loaded.gamma == result.portfolio.gamma
        assert loaded.static == result.portfolio.static
        for s in (0, 1, 2):
            path_ = (F(1), F(s))
            assert portfolio_value(loaded, path_, one_period()) == portfolio_value(result.portfolio, path_, one_period())

    def test_capital_record(self, tmp_path):
        result = solve_constrained(one_period(), PayoffSpec.call(1), 0, solver=get_solver("exact"))
        loaded = read_portfolio_csv(write_portfolio_csv(result.portfolio, tmp_path / "p.csv"))
        assert loaded.static is None
        assert loaded.capital == 1

    def test_missing_artifact(self, tmp_path):
        with pytest.raises(MissingArtifactError):
            read_portfolio_csv(tmp_path / "absent.csv")


class TestLifting:
    """Grid strategies evaluated on continuum paths."""

    def test_lift_reproduces_grid_values(self):
        grid = one_period(M=F(1, 2))
        result = solve_constrained(grid, PayoffSpec.call(1), F(1, 2), solver=get_solver("exact"))
        for s in (0, 1, 2):
            lifted = lift_portfolio(result.portfolio, (1.0, float(s)), grid)
            assert lifted.value == pytest.approx(float(portfolio_value(result.portfolio, (F(1), F(s)), grid)))

    def test_path_above_ceiling_is_flagged(self):
        grid = one_period(M=1)
        result = solve_constrained(grid, PayoffSpec.call(1), 1, solver=get_solver("exact"))
        assert lift_portfolio(result.portfolio, (1.0, 9.0), grid).out_of_model

    def test_budget(self):
        grid = GridSpec(n=2, J=4, N=2, kappa=F(1, 10), M=1)
        # m(h) + (N + 2 kappa) M N h with slope 1, h = 1/2
        assert lift_budget(PayoffSpec.call(1), grid) == F(1, 2) + F(11, 5)

    def test_budget_needs_finite_bound(self):
        with pytest.raises(ValueError, match="finite"):
            lift_budget(PayoffSpec.call(1), one_period())

    def test_lifting_check_passes(self):
        grid = GridSpec(n=2, J=4, N=1, kappa=F(1, 10), M=1)
        result = solve_constrained(grid, PayoffSpec.call(1), 1, solver=get_solver("exact"))
        report = check_lifting(result.portfolio, PayoffSpec.call(1), grid, 200, np.random.default_rng(11))
        assert report.passed, report.violations
        assert report.samples == 200

    def test_table_payoff_cannot_be_lifted(self):
        grid = one_period(M=1)
        result = solve_constrained(grid, PayoffSpec.call(1), 1, solver=get_solver("exact"))
        table = PayoffSpec.from_table({(0,): 0, (1,): 0, (2,): 1}, modulus_slope=1)
        with pytest.raises(ValueError, match="grid-only"):
            check_lifting(result.portfolio, table, grid, 10, np.random.default_rng(0))

    @pytest.mark.parametrize("payoff", [PayoffSpec.call(1), PayoffSpec.lookback()], ids=["call", "lookback"])
    def test_semistatic_lifting_over_two_periods(self, payoff):
        grid = GridSpec(n=2, J=4, N=2, kappa=F(1, 10), M=1)
        P = MeasureSetPricing([(F(1, 10), F(1, 5), F(2, 5), F(1, 5), F(1, 10))])
        result = solve_primal(grid, payoff, P, solver=get_solver("exact"))
        assert result.is_optimal
        report = check_lifting(result.portfolio, payoff, grid, 1000, np.random.default_rng(17))
        assert report.samples == 1000
        assert report.passed, report.violations[:3]


class TestNormalForm:
    """Offsetting trades removed from an optimum leave a feasible optimum behind."""

    def test_normalized_solution_keeps_rows_and_objective(self):
        grid = GridSpec(n=1, J=2, N=2, kappa=F(1, 20), M=1)
        program = build_semistatic_program(grid, PayoffSpec.lookback(), MeasureSetPricing([MU]))
        solver = get_solver("exact")
        result = solve_program(program, solver)
        assert result.is_optimal
        lp = program.lp
        raw = list(result.solution.x)
        # pad every node with an offsetting buy and sell, then strip it again
        padded = list(raw)
        for prefix in program.u:
            padded[program.u[prefix]] += F(1, 10)
            padded[program.w[prefix]] += F(1, 10)
        x = list(padded)
        for prefix in program.u:
            m = min(x[program.u[prefix]], x[program.w[prefix]])
            x[program.u[prefix]] -= m
            x[program.w[prefix]] -= m
            assert min(x[program.u[prefix]], x[program.w[prefix]]) == 0
            assert x[program.u[prefix]] - x[program.w[prefix]] == raw[program.u[prefix]] - raw[program.w[prefix]]
        for i, row in enumerate(lp.constraints):
            activity = lp.row_activity(i, x)
            if row.sense == "==":
                assert activity == row.rhs, row.name
            elif row.sense == ">=":
                assert activity >= row.rhs, row.name
                assert activity >= lp.row_activity(i, raw), row.name
            else:
                assert activity <= row.rhs, row.name
        assert lp.objective_value(x) == result.value

        for prefix in program.u:
            lp.add_constraint(f"fix_u[{len(prefix)}:{prefix}]", {program.u[prefix]: 1}, "==", x[program.u[prefix]])
            lp.add_constraint(f"fix_w[{len(prefix)}:{prefix}]", {program.w[prefix]: 1}, "==", x[program.w[prefix]])
        pinned = solver.solve(lp)
        assert pinned.status == "optimal"
        assert pinned.objective == result.value

    def test_decoded_portfolio_is_normal(self):
        grid = GridSpec(n=1, J=2, N=2, kappa=F(1, 20), M=1)
        result = solve_primal(grid, PayoffSpec.lookback(), MeasureSetPricing([MU]), solver=get_solver("exact"))
        for prefix in result.portfolio.gamma:
            u, w = result.portfolio.u[prefix], result.portfolio.w[prefix]
            assert min(u, w) == 0
            assert u + w <= 1
            parent = result.portfolio.gamma.get(prefix[:-1], 0)
            assert result.portfolio.gamma[prefix] - parent == u - w


class TestCostMonotonicity:
    """Higher proportional costs never make super-replication cheaper."""

    @pytest.mark.parametrize("payoff", [PayoffSpec.call(1), PayoffSpec.lookback()], ids=["call", "lookback"])
    def test_value_nondecreasing_in_kappa(self, payoff):
        values = []
        for kappa in (0, F(1, 20), F(1, 10), F(1, 5)):
            grid = GridSpec(n=1, J=2, N=2, kappa=kappa)
            result = solve_primal(grid, payoff, MeasureSetPricing([MU]), solver=get_solver("exact"))
            assert result.is_optimal, kappa
            values.append(result.value)
        assert values == sorted(values)
