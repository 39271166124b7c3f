"""Tests for run configuration loading and validation."""
from fractions import Fraction

import pytest

from robusthedge.utils.config import CliState, flatten, load_config, parse_config
from robusthedge.utils.errors import ConfigError
from robusthedge.utils.market import PayoffSpec, eval_payoff

BASE = """\
grid:
  n: 1
  J: 2
  N: 1
  kappa: 0.1
payoff:
  kind: call
  strike: 1
pricing:
  measures:
    - [1/4, 1/2, 1/4]
"""


def write(tmp_path, text, name="run.yaml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def minimal(**blocks):
    data = {
        "grid": {"n": 1, "J": 2, "N": 1, "kappa": "1/10"},
        "payoff": {"kind": "call", "strike": 1},
        "pricing": {"measures": [["1/4", "1/2", "1/4"]]},
    }
    data.update(blocks)
    return data


class TestLoadConfig:
    """YAML files become validated RunConfig objects."""

    def test_numbers_become_exact_rationals(self, tmp_path):
        config = load_config(write(tmp_path, BASE))
        assert config.grid.kappa == Fraction(1, 10)
        assert config.pricing.measures == [[Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)]]
        assert config.grid.M is None

    def test_defaults(self, tmp_path):
        config = load_config(write(tmp_path, BASE))
        assert config.solver.mode == "float"
        assert config.output.directory == "out"
        assert config.analysis.r == 3
        assert config.analysis.tail_thresholds == [1, Fraction(3, 2), 2]

    def test_json_is_accepted(self, tmp_path):
        text = '{"grid": {"n": 1, "J": 2, "N": 1}, "payoff": {"kind": "lookback"}, "pricing": {"measures": [[0.25, 0.5, 0.25]]}}'
        config = load_config(write(tmp_path, text, "run.json"))
        assert config.payoff.kind == "lookback"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "absent.yaml")

    def test_broken_yaml(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write(tmp_path, "grid: [unclosed"))


class TestValidation:
    """Schema errors name the offending field."""

    def test_kappa_above_quarter(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config(minimal(grid={"n": 1, "J": 2, "N": 1, "kappa": 0.5}))
        assert any(m.startswith("grid.kappa") and "1/4" in m for m in excinfo.value.messages)

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config(minimal(grid={"n": 1, "J": 2, "N": 1, "sigma": 1}))
        assert any("grid.sigma" in m for m in excinfo.value.messages)

    def test_ceiling_below_one(self):
        with pytest.raises(ConfigError):
            parse_config(minimal(grid={"n": 2, "J": 1, "N": 1}))

    def test_strike_required_for_call(self):
        with pytest.raises(ConfigError, match="strike"):
            parse_config(minimal(payoff={"kind": "call"}))

    def test_unknown_payoff_kind(self):
        with pytest.raises(ConfigError):
            parse_config(minimal(payoff={"kind": "digital", "strike": 1}))

    def test_exactly_one_pricing_operator(self):
        with pytest.raises(ConfigError, match="exactly one"):
            parse_config(minimal(pricing={}))

    def test_measure_width_must_match_grid(self):
        with pytest.raises(ConfigError, match="3 points"):
            parse_config(minimal(pricing={"measures": [[1]]}))

    def test_bad_ratio(self):
        with pytest.raises(ConfigError):
            parse_config(minimal(grid={"n": 1, "J": 2, "N": 1, "kappa": "one tenth"}))

    def test_top_level_must_be_mapping(self):
        with pytest.raises(ConfigError):
            parse_config(["grid"])


class TestDomainObjects:
    """Config blocks build grids, payoffs, pricing operators and solvers."""

    def test_unbounded_M(self):
        config = parse_config(minimal(grid={"n": 1, "J": 2, "N": 1, "M": "unbounded"}))
        assert config.grid_spec().M is None

    def test_finite_M(self):
        config = parse_config(minimal(grid={"n": 1, "J": 2, "N": 1, "M": "1/2"}))
        assert config.grid_spec().M == Fraction(1, 2)

    def test_call_quotes(self):
        config = parse_config(minimal(pricing={"calls": [{"strike": 1, "bid": "1/4", "ask": "1/4"}]}))
        assert config.pricing_operator().kind == "calls"

    def test_table_payoff_relative_to_config(self, tmp_path):
        (tmp_path / "payoff.csv").write_text("s_1,value\n0,0\n1,0\n2,1\n", encoding="utf-8")
        config = parse_config(minimal(payoff={"kind": "table", "table": "payoff.csv", "modulus_slope": 1}))
        payoff = config.payoff_spec(tmp_path)
        assert payoff.modulus_slope == 1
        assert eval_payoff(payoff, (Fraction(1), Fraction(2))) == 1

    def test_modulus_override(self):
        config = parse_config(minimal(payoff={"kind": "call", "strike": 1, "modulus_slope": 3}))
        assert config.payoff_spec().modulus_slope == 3
        assert config.payoff_spec().kind == PayoffSpec.call(1).kind

    def test_overrides(self, tmp_path):
        config = parse_config(minimal()).with_overrides(exact=True, seed=9, out=tmp_path)
        assert config.solver.mode == "exact"
        assert config.solver.seed == 9
        assert config.out_path("measure.csv") == tmp_path / "measure.csv"
        assert config.build_solver().exact

    def test_flatten_lists_every_field(self):
        rows = dict(flatten(parse_config(minimal())))
        assert rows["grid.M"] == "unbounded"
        assert rows["grid.kappa"] == "1/10"
        assert "solver.path_cap" in rows
        assert "analysis.tail_thresholds" in rows


class TestCliState:
    """Global options resolved into a config."""

    def test_requires_config(self):
        with pytest.raises(ConfigError, match="--config"):
            CliState().load()

    def test_base_dir_is_config_directory(self, tmp_path):
        config, base_dir = CliState(config_path=write(tmp_path, BASE), exact=True).load()
        assert base_dir == tmp_path.resolve()
        assert config.solver.mode == "exact"
