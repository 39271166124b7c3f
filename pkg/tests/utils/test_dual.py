"""Tests for the measure-side programs.

Covers:
  - approximate-martingale transport values and band certification
  - the penalized dual for bounded trading and its closed-form recomputation
  - FTAP feasibility, Farkas certificates and local arbitrage on cells
  - primal hedge-row duals read back as a path measure
  - weak duality against dominating portfolios on random instances
  - an independent zero-cost martingale transport oracle
"""
import dataclasses
from fractions import Fraction

import numpy as np
import pytest

from robusthedge.utils.analysis import random_instance
from robusthedge.utils.dual import (
    PathMeasure,
    band_penalty,
    build_dual_lp,
    build_penalty_dual_lp,
    conditional_expectation,
    dual_of_primal,
    ftap_feasibility,
    local_arbitrage_probe,
    penalty_value,
    solve_dual,
    solve_penalty_dual,
    write_farkas_text,
    write_measure_csv,
)
from robusthedge.utils.errors import CellSelectionError, SolverStateError
from robusthedge.utils.lp import get_solver, verify_farkas
from robusthedge.utils.market import GridSpec, PayoffSpec, build_tree, enumerate_paths, eval_payoff, select_cell
from robusthedge.utils.pricing import MeasureSetPricing
from robusthedge.utils.primal import hedge_cost, solve_constrained, solve_primal

F = Fraction
MU = (F(1, 4), F(1, 2), F(1, 4))
DRIFTING = (F(1, 10), F(3, 5), F(3, 10))


def one_period(kappa=F(1, 10), M=None) -> GridSpec:
    return GridSpec(n=1, J=2, N=1, kappa=kappa, M=M)


class TestPathMeasure:
    """Conditional expectations and band penalties of explicit measures."""

    def test_conditional_expectation_and_vacuous_nodes(self):
        grid = GridSpec(n=1, J=2, N=2)
        paths = enumerate_paths(grid)
        weights = [0] * len(paths)
        weights[paths.index((1, 1, 2))] = F(1, 2)
        weights[paths.index((1, 1, 0))] = F(1, 2)
        q = PathMeasure(paths, weights)
        tree = build_tree(paths)
        depth_one = conditional_expectation(q, tree, 1)
        assert depth_one[(1, 1)] == 1
        assert depth_one[(1, 0)] is None
        assert band_penalty(q, tree, 0) == 0

    def test_penalty_of_a_point_mass(self):
        grid = GridSpec(n=1, J=2, N=2, kappa=F(1, 10))
        paths = enumerate_paths(grid)
        q = PathMeasure(paths, [1 if p == (1, 0, 0) else 0 for p in paths])
        # root: |0 - 1| - kappa * 1 = 9/10; the node (1, 0) has no drift
        assert band_penalty(q, build_tree(paths), grid.kappa) == F(9, 10)
        assert penalty_value(q, PayoffSpec.call(1), 1, grid) == F(-9, 10)

    def test_terminal_marginal(self):
        grid = one_period()
        q = PathMeasure(enumerate_paths(grid), list(MU))
        assert q.terminal_marginal(grid) == list(MU)
        assert q.is_probability()


class TestTransportDual:
    """max E_q[G] over approximate martingales consistent with P."""

    @pytest.mark.parametrize("mode", ["float", "exact"])
    def test_one_period_call(self, mode):
        result = solve_dual(one_period(), PayoffSpec.call(1), MeasureSetPricing([MU]), solver=get_solver(mode))
        assert result.is_optimal
        assert result.value == pytest.approx(0.25, abs=1e-9)
        assert result.certified

    def test_optimizer_is_the_measure_itself(self):
        result = solve_dual(one_period(), PayoffSpec.call(1), MeasureSetPricing([MU]), solver=get_solver("exact"))
        assert result.measure.weights == list(MU)
        assert result.recomputed == result.value

    def test_drifting_marginal_is_infeasible(self):
        result = solve_dual(one_period(), PayoffSpec.call(1), MeasureSetPricing([DRIFTING]), solver=get_solver("exact"))
        assert result.status == "infeasible"
        assert result.farkas_check.valid, result.farkas_check.problems

    def test_wider_band_admits_the_drift(self):
        result = solve_dual(
            one_period(kappa=F(1, 4)), PayoffSpec.call(1), MeasureSetPricing([DRIFTING]), solver=get_solver("exact")
        )
        assert result.is_optimal
        assert result.value == F(3, 10)

    def test_finite_M_uses_penalty_rows(self):
        lp = build_dual_lp(one_period(M=1), PayoffSpec.call(1), MeasureSetPricing([MU]))
        assert "pen_hi[1]" in lp.row_names
        assert "band_hi[1]" not in lp.row_names

    @pytest.mark.parametrize("M", [None, F(1, 4), 2])
    def test_matches_primal(self, M):
        grid = GridSpec(n=1, J=2, N=2, kappa=F(1, 20), M=M)
        P = MeasureSetPricing([MU, (F(1, 2), 0, F(1, 2))])
        solver = get_solver("exact")
        primal = solve_primal(grid, PayoffSpec.lookback(), P, solver=solver)
        dual = solve_dual(grid, PayoffSpec.lookback(), P, solver=solver)
        assert primal.value == dual.value
        assert dual.recomputed == dual.value


class TestPenaltyDual:
    """Penalized transport without marginal constraints."""

    @pytest.mark.parametrize("M, expected", [(0, F(1)), (F(1, 4), F(31, 40)), (F(1, 2), F(11, 20)), (None, F(11, 20))])
    def test_matches_constrained_primal(self, M, expected):
        result = solve_penalty_dual(one_period(), PayoffSpec.call(1), M, solver=get_solver("exact"))
        assert result.value == expected
        assert result.recomputed == expected
        primal = solve_constrained(one_period(), PayoffSpec.call(1), M, solver=get_solver("exact"))
        assert primal.value == expected

    def test_penalty_active_below_threshold(self):
        result = solve_penalty_dual(one_period(), PayoffSpec.call(1), F(1, 4), solver=get_solver("exact"))
        assert result.penalty > 0
        assert not result.certified

    def test_no_marginal_rows(self):
        lp = build_penalty_dual_lp(one_period(), PayoffSpec.call(1), 1)
        assert not any(name.startswith("marg") for name in lp.row_names)

    def test_penalty_value_of_optimizer(self):
        grid = one_period()
        result = solve_penalty_dual(grid, PayoffSpec.call(1), F(1, 4), solver=get_solver("exact"))
        assert penalty_value(result.measure, PayoffSpec.call(1), F(1, 4), grid) == result.value


class TestFeasibility:
    """Nonemptiness of the approximate-martingale set and maximal cell masses."""

    def test_feasible_witness(self):
        verdict = ftap_feasibility(one_period(), MeasureSetPricing([MU]), solver=get_solver("exact"))
        assert verdict.feasible
        assert verdict.witness.is_probability()
        assert verdict.witness.terminal_marginal(one_period()) == list(MU)
        assert not verdict.witness.band_violations(build_tree(verdict.witness.paths), F(1, 10))

    @pytest.mark.parametrize("mode", ["float", "exact"])
    def test_infeasible_has_checked_certificate(self, mode):
        solver = get_solver(mode)
        verdict = ftap_feasibility(one_period(), MeasureSetPricing([DRIFTING]), solver=solver)
        assert not verdict.feasible
        check = verify_farkas(verdict.result.program.lp, verdict.farkas, exact=solver.exact)
        assert check.valid, check.problems

    def test_farkas_text(self, tmp_path):
        verdict = ftap_feasibility(one_period(), MeasureSetPricing([DRIFTING]), solver=get_solver("exact"))
        path = write_farkas_text(verdict.result.program.lp, verdict.farkas, tmp_path / "farkas.txt")
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("# Farkas combination for ftap_feasibility")
        assert len(lines) > 1

    def test_cell_mass_value(self):
        paths = enumerate_paths(one_period())
        mass = local_arbitrage_probe(
            one_period(), MeasureSetPricing([MU]), select_cell(paths, {1: 2}), solver=get_solver("exact")
        )
        assert mass.value == F(1, 4)
        assert not mass.local_arbitrage

    def test_finds_null_cell(self):
        # with no mass at 0 at maturity, no martingale can sit at 0 after one step
        grid = GridSpec(n=1, J=2, N=2)
        paths = enumerate_paths(grid)
        mass = local_arbitrage_probe(
            grid, MeasureSetPricing([(0, 1, 0)]), select_cell(paths, {1: 0}), solver=get_solver("exact")
        )
        assert mass.value == 0
        assert mass.local_arbitrage

    def test_exact_verdict_needs_zero_mass(self):
        paths = enumerate_paths(one_period())
        cell = select_cell(paths, {1: 2})
        exact = local_arbitrage_probe(one_period(), MeasureSetPricing([MU]), cell, solver=get_solver("exact"))
        assert exact.result.solution.mode == "exact"
        # a tiny positive rational mass is not a null cell
        assert not dataclasses.replace(exact, value=F(1, 10**12)).local_arbitrage
        assert dataclasses.replace(exact, value=F(0)).local_arbitrage
        rounded = local_arbitrage_probe(one_period(), MeasureSetPricing([MU]), cell, solver=get_solver("float"))
        assert rounded.result.solution.mode == "float"
        assert dataclasses.replace(rounded, value=1e-12).local_arbitrage

    def test_empty_cell(self):
        with pytest.raises(CellSelectionError):
            local_arbitrage_probe(one_period(), MeasureSetPricing([MU]), [])


class TestPrimalDuals:
    """Hedge-row duals of the primal form an optimal measure."""

    def test_dual_of_primal(self):
        P = MeasureSetPricing([MU])
        primal = solve_primal(one_period(), PayoffSpec.call(1), P, solver=get_solver("exact"))
        measure = dual_of_primal(primal, P)
        assert measure.weights == list(MU)

    def test_needs_optimal_primal(self):
        P = MeasureSetPricing([DRIFTING])
        primal = solve_primal(one_period(), PayoffSpec.call(1), P, solver=get_solver("exact"))
        with pytest.raises(SolverStateError):
            dual_of_primal(primal, P)

    def test_measure_csv_skips_zero_weights(self, tmp_path):
        grid = GridSpec(n=1, J=2, N=2)
        paths = enumerate_paths(grid)
        q = PathMeasure(paths, [F(1) if p == (1, 1, 1) else 0 for p in paths])
        text = write_measure_csv(q, tmp_path / "measure.csv").read_text(encoding="utf-8")
        assert text == "s_1,s_2,weight\n1,1,1\n"

class TestWeakDuality:
    """Any feasible law prices a payoff below any dominating portfolio's cost."""

    def test_random_instances(self):
        rng = np.random.default_rng(31)
        solver = get_solver("float")
        for _ in range(20):
            instance = random_instance(rng)
            verdict = ftap_feasibility(instance.grid, instance.pricing, solver=solver)
            assert verdict.feasible, instance.label
            primal = solve_primal(instance.grid, instance.payoff, instance.pricing, solver=solver)
            assert primal.is_optimal, instance.label
            q = verdict.witness
            lower = q.expectation([eval_payoff(instance.payoff, p) for p in q.paths])
            upper = hedge_cost(primal.portfolio, instance.pricing, instance.grid, solver=solver)
            assert float(lower) <= float(upper) + 1e-7, instance.label



class TestZeroCostOracle:
    """Without costs the transport dual is a martingale transport problem solvable by scipy."""

    def test_lookback_against_linprog(self):
        scipy_optimize = pytest.importorskip("scipy.optimize")
        grid = GridSpec(n=1, J=2, N=2)
        paths = enumerate_paths(grid)
        mu = [F(1, 5), F(3, 5), F(1, 5)]
        payoff = PayoffSpec.lookback()
        c = -np.array([float(eval_payoff(payoff, p)) for p in paths])
        rows, rhs = [], []
        rows.append([1.0] * len(paths))
        rhs.append(1.0)
        for i, x in enumerate(grid.values):
            rows.append([1.0 if p[-1] == x else 0.0 for p in paths])
            rhs.append(float(mu[i]))
        rows.append([float(p[-1] - 1) for p in paths])
        rhs.append(0.0)
        for s in grid.values:
            rows.append([float(p[-1] - s) if p[1] == s else 0.0 for p in paths])
            rhs.append(0.0)
        oracle = scipy_optimize.linprog(c, A_eq=np.array(rows), b_eq=np.array(rhs), bounds=(0, None), method="highs")
        assert oracle.status == 0
        result = solve_dual(grid, payoff, MeasureSetPricing([mu]), solver=get_solver("float"))
        assert result.value == pytest.approx(-oracle.fun, abs=1e-8)
        primal = solve_primal(grid, payoff, MeasureSetPricing([mu]))
        assert primal.value == pytest.approx(-oracle.fun, abs=1e-8)
