"""Run configuration: YAML/JSON file schema, validation and conversion to domain objects."""

from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError, field_validator, model_validator

from robusthedge.protocols import LinearSolver, PricingOperator
from robusthedge.utils.errors import ConfigError
from robusthedge.utils.lp import get_solver, to_fraction
from robusthedge.utils.market import KAPPA_MAX, GridSpec, PayoffSpec, load_payoff_table
from robusthedge.utils.pricing import CallQuotePricing, MeasureSetPricing

DEFAULT_OUT_DIR = "out"


def _rational(value: Any) -> Fraction:
    if isinstance(value, bool):
        raise ValueError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float, Fraction)):
        return to_fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError:
            raise ValueError(f"expected a number or a ratio like 1/4, got {value!r}") from None
    raise ValueError(f"expected a number, got {value!r}")


def _bound(value: Any) -> Optional[Fraction]:
    if value is None or (isinstance(value, str) and value.strip().lower() in ("unbounded", "inf", "none")):
        return None
    return _rational(value)


Rational = Annotated[Fraction, BeforeValidator(_rational)]
Bound = Annotated[Optional[Fraction], BeforeValidator(_bound)]


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)


class GridConfig(_Block):
    n: int = Field(ge=1)
    J: int = Field(ge=1)
    N: int = Field(ge=1)
    kappa: Rational = Fraction(0)
    M: Bound = None

    @field_validator("kappa")
    @classmethod
    def _kappa_in_band(cls, v: Fraction) -> Fraction:
        if v < 0 or v > KAPPA_MAX:
            raise ValueError(f"kappa={float(v):g} violates the cost-rate bound 0 <= kappa <= 1/4")
        return v

    @field_validator("M")
    @classmethod
    def _nonnegative_bound(cls, v: Optional[Fraction]) -> Optional[Fraction]:
        if v is not None and v < 0:
            raise ValueError(f"M must be nonnegative or 'unbounded', got {v}")
        return v

    @model_validator(mode="after")
    def _ceiling_covers_one(self) -> "GridConfig":
        if self.J < self.n:
            raise ValueError(f"J={self.J} < n={self.n}: the grid ceiling J/n must be at least 1")
        return self


PayoffKind = Literal["call", "put", "asian", "lookback", "constant", "tail", "table"]


class PayoffConfig(_Block):
    kind: PayoffKind
    strike: Optional[Rational] = None
    value: Optional[Rational] = None
    threshold: Optional[Rational] = None
    table: Optional[str] = None
    modulus_slope: Optional[Rational] = None

    @model_validator(mode="after")
    def _parameters_for_kind(self) -> "PayoffConfig":
        needed = {"call": "strike", "put": "strike", "asian": "strike", "constant": "value", "tail": "threshold", "table": "table"}
        field_name = needed.get(self.kind)
        if field_name and getattr(self, field_name) is None:
            raise ValueError(f"payoff kind {self.kind!r} needs '{field_name}'")
        return self


class CallQuoteConfig(_Block):
    strike: Rational
    bid: Rational
    ask: Rational


class PricingConfig(_Block):
    measures: Optional[List[List[Rational]]] = None
    calls: Optional[List[CallQuoteConfig]] = None
    epsilon: Rational = Fraction(0)
    strict: bool = True

    @model_validator(mode="after")
    def _exactly_one_operator(self) -> "PricingConfig":
        if (self.measures is None) == (self.calls is None):
            raise ValueError("pricing needs exactly one of 'measures' or 'calls'")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")
        return self


class SolverConfig(_Block):
    mode: Literal["float", "exact"] = "float"
    tolerance: float = 1e-9
    seed: int = 0
    path_cap: int = Field(default=10**6, ge=1)
    exact_nonzero_cap: int = Field(default=2000, ge=1)
    iteration_cap: int = Field(default=10**6, ge=1)
    workers: int = Field(default=1, ge=1)


class OutputConfig(_Block):
    directory: str = DEFAULT_OUT_DIR
    portfolio: str = "portfolio.csv"
    measure: str = "measure.csv"
    farkas: str = "farkas.txt"
    witness: str = "witness.csv"
    dump_lp: Optional[str] = None


class AnalysisConfig(_Block):
    r: Rational = Fraction(3)
    p: Optional[Rational] = None
    doob_samples: int = Field(default=10**4, ge=1)
    lift_samples: int = Field(default=10**3, ge=1)
    axiom_trials: int = Field(default=10**3, ge=1)
    tail_thresholds: List[Rational] = Field(default_factory=lambda: [Fraction(1), Fraction(3, 2), Fraction(2)])
    cell: Optional[Dict[int, Rational]] = None
    stabilize_start: Rational = Fraction(1, 8)
    max_doublings: int = Field(default=20, ge=0)


class RunConfig(_Block):
    grid: GridConfig
    payoff: PayoffConfig
    pricing: PricingConfig
    solver: SolverConfig = Field(default_factory=SolverConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)

    @model_validator(mode="after")
    def _measures_fit_grid(self) -> "RunConfig":
        if self.pricing.measures is not None:
            width = self.grid.J + 1
            for j, mu in enumerate(self.pricing.measures):
                if len(mu) != width:
                    raise ValueError(f"pricing.measures[{j}] has {len(mu)} weights, the grid has {width} points")
        return self

    def grid_spec(self) -> GridSpec:
        g = self.grid
        return GridSpec(n=g.n, J=g.J, N=g.N, kappa=g.kappa, M=g.M)

    def payoff_spec(self, base_dir: Optional[Path] = None) -> PayoffSpec:
        p = self.payoff
        if p.kind == "table":
            path = Path(p.table)
            if not path.is_absolute() and base_dir is not None:
                path = base_dir / path
            return load_payoff_table(path, self.grid_spec(), p.modulus_slope)
        if p.kind == "lookback":
            spec = PayoffSpec.lookback()
        elif p.kind == "constant":
            spec = PayoffSpec.constant(p.value)
        elif p.kind == "tail":
            spec = PayoffSpec.tail(p.threshold)
        else:
            spec = getattr(PayoffSpec, p.kind)(p.strike)
        if p.modulus_slope is not None:
            spec = replace(spec, modulus_slope=p.modulus_slope)
        return spec

    def pricing_operator(self) -> PricingOperator:
        p = self.pricing
        if p.measures is not None:
            return MeasureSetPricing(p.measures, epsilon=p.epsilon, strict=p.strict)
        return CallQuotePricing([(q.strike, q.bid, q.ask) for q in p.calls], epsilon=p.epsilon)

    def solver_options(self) -> Dict[str, Any]:
        s = self.solver
        if s.mode == "exact":
            return {"nonzero_cap": s.exact_nonzero_cap, "iteration_cap": s.iteration_cap}
        return {"tolerance": s.tolerance, "iteration_cap": s.iteration_cap}

    def build_solver(self) -> LinearSolver:
        return get_solver(self.solver.mode, **self.solver_options())

    def with_overrides(
        self,
        exact: bool = False,
        seed: Optional[int] = None,
        out: Optional[Path] = None,
        dump_lp: Optional[Path] = None,
    ) -> "RunConfig":
        """Apply command-line flags on top of the file values."""
        solver = self.solver.model_copy(update={"mode": "exact"} if exact else {})
        if seed is not None:
            solver = solver.model_copy(update={"seed": seed})
        output = self.output
        if out is not None:
            output = output.model_copy(update={"directory": str(out)})
        if dump_lp is not None:
            output = output.model_copy(update={"dump_lp": str(dump_lp)})
        return self.model_copy(update={"solver": solver, "output": output})

    def out_path(self, name: str) -> Path:
        return Path(self.output.directory) / name


def _field_messages(error: ValidationError) -> List[str]:
    messages = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        messages.append(f"{location}: {item['msg']}")
    return messages


def parse_config(data: Any, source: Optional[str] = None) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError(["top level must be a mapping with grid, payoff and pricing blocks"], source)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_field_messages(e), source) from None


def load_config(path: Path) -> RunConfig:
    """Load a run config from YAML or JSON and validate it."""
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"config file not found: {path}"], str(path))
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError([f"not valid YAML/JSON: {e}"], str(path)) from None
    return parse_config(data, str(path))


def _render(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, list):
        return "[" + ", ".join(_render(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{k}: {_render(v)}" for k, v in value.items()) + "}"
    return str(value)


def flatten(config: RunConfig) -> List[Tuple[str, str]]:
    """Every field, defaulted or not, as ``(block.field, value)`` for the report header."""
    rows: List[Tuple[str, str]] = []
    for block, values in config.model_dump().items():
        for name, value in values.items():
            if block == "grid" and name == "M" and value is None:
                rows.append(("grid.M", "unbounded"))
                continue
            rows.append((f"{block}.{name}", _render(value)))
    return rows


@dataclass
class CliState:
    """Global options collected by the root callback and shared with every command."""

    config_path: Optional[Path] = None
    exact: bool = False
    dump_lp: Optional[Path] = None
    seed: Optional[int] = None
    out: Optional[Path] = None
    verbose: bool = False

    def load(self) -> Tuple[RunConfig, Path]:
        if self.config_path is None:
            raise ConfigError(["no config given; pass --config <path>"])
        config = load_config(self.config_path).with_overrides(
            exact=self.exact, seed=self.seed, out=self.out, dump_lp=self.dump_lp
        )
        return config, Path(self.config_path).resolve().parent
