"""Tests for the robusthedge command line.

Covers:
  - price, penalty, ftap, verify and sweep on a one-period instance
  - the exit-code contract: 0 success, 1 failed check, 2 arbitrage, 64 bad input, 66 missing artifact
  - artifacts written under --out, LP dumps and byte-identical reruns
"""
from pathlib import Path

import pytest
from typer.testing import CliRunner

from robusthedge.cli import app
from robusthedge.commands.ftap import parse_cell
from robusthedge.commands.price import dual_dump_path
from robusthedge.utils.errors import CellSelectionError

runner = CliRunner()

INSTANCE = """\
grid:
  n: 1
  J: 2
  N: 1
  kappa: 1/10
  M: {M}
payoff:
  kind: call
  strike: 1
pricing:
  measures:
    - [{measure}]
analysis:
  axiom_trials: 20
  lift_samples: 50
"""

CENTERED = "1/4, 1/2, 1/4"
DRIFTING = "1/10, 3/5, 3/10"


def write_config(tmp_path: Path, M: str = "unbounded", measure: str = CENTERED) -> Path:
    path = tmp_path / "run.yaml"
    path.write_text(INSTANCE.format(M=M, measure=measure), encoding="utf-8")
    return path


def run(tmp_path: Path, config: Path, *args: str, exact: bool = True):
    options = ["--config", str(config), "--out", str(tmp_path / "out")]
    if exact:
        options.append("--exact")
    return runner.invoke(app, options + list(args))


class TestGlobalOptions:
    """Root callback and configuration errors."""

    def test_version(self):
        result = runner.invoke(app, ["--version"])
        assert result.exit_code == 0
        assert "robusthedge" in result.output

    def test_missing_config_option(self):
        result = runner.invoke(app, ["price"])
        assert result.exit_code == 64
        assert "--config" in result.output

    def test_config_file_not_found(self, tmp_path):
        result = runner.invoke(app, ["--config", str(tmp_path / "absent.yaml"), "price"])
        assert result.exit_code == 64

    def test_invalid_kappa_names_the_field(self, tmp_path):
        config = write_config(tmp_path)
        config.write_text(config.read_text(encoding="utf-8").replace("1/10", "1/2"), encoding="utf-8")
        result = run(tmp_path, config, "price")
        assert result.exit_code == 64
        assert "grid.kappa" in result.output


class TestPrice:
    """Super-replication price with certified duality."""

    def test_optimal_instance(self, tmp_path):
        result = run(tmp_path, write_config(tmp_path), "price")
        assert result.exit_code == 0, result.output
        assert "1/4" in result.output
        assert (tmp_path / "out" / "portfolio.csv").exists()
        measure = (tmp_path / "out" / "measure.csv").read_text(encoding="utf-8")
        assert measure.splitlines()[0] == "s_1,weight"

    def test_float_mode(self, tmp_path):
        result = run(tmp_path, write_config(tmp_path), "price", exact=False)
        assert result.exit_code == 0, result.output
        assert "Strong duality certified" in result.output

    def test_arbitrage_exits_two_with_certificate(self, tmp_path):
        result = run(tmp_path, write_config(tmp_path, measure=DRIFTING), "price")
        assert result.exit_code == 2, result.output
        assert (tmp_path / "out" / "farkas.txt").exists()
        assert not (tmp_path / "out" / "portfolio.csv").exists()

    def test_dump_lp(self, tmp_path):
        config = write_config(tmp_path)
        target = tmp_path / "dump" / "run.lp"
        result = runner.invoke(
            app, ["--config", str(config), "--out", str(tmp_path / "out"), "--dump-lp", str(target), "price"]
        )
        assert result.exit_code == 0, result.output
        assert "Subject To" in target.read_text(encoding="utf-8")
        assert (tmp_path / "dump" / "run.dual.lp").exists()

    def test_repeat_run_is_byte_identical(self, tmp_path):
        config = write_config(tmp_path, M="1")
        first = run(tmp_path, config, "price")
        artifacts = {name: (tmp_path / "out" / name).read_bytes() for name in ("portfolio.csv", "measure.csv")}
        second = run(tmp_path, config, "price")
        assert first.exit_code == second.exit_code == 0, first.output
        assert first.output == second.output
        for name, content in artifacts.items():
            assert (tmp_path / "out" / name).read_bytes() == content, name

    def test_dual_dump_path(self):
        assert dual_dump_path(Path("a/run.lp")) == Path("a/run.dual.lp")


class TestPenalty:
    """Bounded-increment price against the penalty dual."""

    def test_closes_at_finite_M(self, tmp_path):
        result = run(tmp_path, write_config(tmp_path, M="1/4"), "penalty")
        assert result.exit_code == 0, result.output
        assert "31/40" in result.output

    def test_stabilization_table(self, tmp_path):
        result = run(tmp_path, write_config(tmp_path, M="1/4"), "penalty", "--stabilize")
        assert result.exit_code == 0, result.output
        assert "stabilizes from M = 1/2" in result.output

    def test_needs_finite_M(self, tmp_path):
        result = run(tmp_path, write_config(tmp_path), "penalty")
        assert result.exit_code == 64
        assert "finite M" in result.output


class TestFtap:
    """No-arbitrage verdicts and cell masses."""

    def test_feasible_writes_witness(self, tmp_path):
        result = run(tmp_path, write_config(tmp_path), "ftap")
        assert result.exit_code == 0, result.output
        assert (tmp_path / "out" / "witness.csv").exists()

    def test_infeasible_exits_two(self, tmp_path):
        result = run(tmp_path, write_config(tmp_path, measure=DRIFTING), "ftap")
        assert result.exit_code == 2, result.output
        assert (tmp_path / "out" / "farkas.txt").read_text(encoding="utf-8").startswith("# Farkas")

    def test_cell_mass(self, tmp_path):
        result = run(tmp_path, write_config(tmp_path), "ftap", "--cell", "1=2")
        assert result.exit_code == 0, result.output
        assert "1/4" in result.output

    def test_malformed_cell(self, tmp_path):
        result = run(tmp_path, write_config(tmp_path), "ftap", "--cell", "1:2")
        assert result.exit_code == 64

    def test_parse_cell(self):
        assert parse_cell("1=2, 2=1/2") == {1: 2, 2: 0.5}
        with pytest.raises(CellSelectionError):
            parse_cell(",")


class TestVerify:
    """Randomized verifications exit 0 only without violations."""

    def test_doob(self, tmp_path):
        result = run(tmp_path, write_config(tmp_path), "verify", "doob")
        assert result.exit_code == 0, result.output
        assert "all 3 grid paths" in result.output

    def test_axioms(self, tmp_path):
        result = run(tmp_path, write_config(tmp_path), "verify", "axioms", exact=False)
        assert result.exit_code == 0, result.output

    def test_lift_after_price(self, tmp_path):
        config = write_config(tmp_path, M="1")
        assert run(tmp_path, config, "price").exit_code == 0
        result = run(tmp_path, config, "verify", "lift", "--samples", "40")
        assert result.exit_code == 0, result.output

    def test_lift_without_portfolio(self, tmp_path):
        result = run(tmp_path, write_config(tmp_path, M="1"), "verify", "lift")
        assert result.exit_code == 66
        assert "robusthedge price" in result.output

    def test_unknown_check(self, tmp_path):
        result = run(tmp_path, write_config(tmp_path), "verify", "martingale")
        assert result.exit_code == 64


class TestSweep:
    """Sweeps write a CSV and check monotonicity."""

    def test_M_axis(self, tmp_path):
        result = run(tmp_path, write_config(tmp_path), "sweep", "--axis", "M", "--values", "0,1/4,unbounded")
        assert result.exit_code == 0, result.output
        lines = (tmp_path / "out" / "sweep_M.csv").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 4

    def test_failing_point_exits_one(self, tmp_path):
        result = run(tmp_path, write_config(tmp_path), "sweep", "--axis", "kappa", "--values", "0,1/2")
        assert result.exit_code == 1, result.output

    def test_unknown_axis(self, tmp_path):
        result = run(tmp_path, write_config(tmp_path), "sweep", "--axis", "sigma", "--values", "1")
        assert result.exit_code == 64
