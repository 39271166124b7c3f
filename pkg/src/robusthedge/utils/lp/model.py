"""Linear program and solution containers."""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from robusthedge.utils.errors import LinearProgramError

Number = Union[int, float, Fraction]

SENSES = ("<=", "==", ">=")


def to_fraction(value: Number) -> Fraction:
    """Exact rational for a number; floats go through their shortest decimal text (0.1 -> 1/10)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(str(value))


def _check_finite(value: Number, what: str) -> None:
    if isinstance(value, float) and not math.isfinite(value):
        raise LinearProgramError(f"{what} is not finite: {value!r}")


@dataclass
class Variable:
    name: str
    lower: Optional[Number] = 0
    upper: Optional[Number] = None
    objective: Number = 0

    @property
    def is_free(self) -> bool:
        return self.lower is None and self.upper is None


@dataclass
class Constraint:
    name: str
    coeffs: Dict[int, Number]
    sense: str
    rhs: Number = 0


class LinearProgram:
    """A labeled LP: bounded variables, sparse rows with <=, == or >=, min or max objective."""

    def __init__(self, name: str = "lp", sense: str = "min") -> None:
        if sense not in ("min", "max"):
            raise LinearProgramError(f"objective sense must be 'min' or 'max', got {sense!r}")
        self.name = name
        self.sense = sense
        self.variables: List[Variable] = []
        self.constraints: List[Constraint] = []
        self._var_index: Dict[str, int] = {}
        self._row_index: Dict[str, int] = {}

    def add_variable(
        self,
        name: str,
        lower: Optional[Number] = 0,
        upper: Optional[Number] = None,
        objective: Number = 0,
    ) -> int:
        """Add a column and return its index. ``None`` bounds mean unbounded on that side."""
        if name in self._var_index:
            raise LinearProgramError(f"duplicate variable label {name!r}")
        for value, what in ((lower, "lower bound"), (upper, "upper bound"), (objective, "objective")):
            if value is not None:
                _check_finite(value, f"{what} of {name}")
        if lower is not None and upper is not None and upper < lower:
            raise LinearProgramError(f"variable {name!r} has upper bound below lower bound")
        self.variables.append(Variable(name, lower, upper, objective))
        self._var_index[name] = len(self.variables) - 1
        return len(self.variables) - 1

    def add_constraint(
        self,
        name: str,
        coeffs: Mapping[int, Number],
        sense: str,
        rhs: Number = 0,
    ) -> int:
        """Add a row ``sum coeffs[j] * x_j <sense> rhs`` and return its index."""
        if name in self._row_index:
            raise LinearProgramError(f"duplicate constraint label {name!r}")
        if sense not in SENSES:
            raise LinearProgramError(f"row {name!r}: sense must be one of {SENSES}, got {sense!r}")
        _check_finite(rhs, f"rhs of {name}")
        clean: Dict[int, Number] = {}
        for j, a in coeffs.items():
            if not 0 <= j < len(self.variables):
                raise LinearProgramError(f"row {name!r} references unknown column {j}")
            _check_finite(a, f"coefficient of {self.variables[j].name} in {name}")
            if a != 0:
                clean[j] = clean.get(j, 0) + a
        self.constraints.append(Constraint(name, clean, sense, rhs))
        self._row_index[name] = len(self.constraints) - 1
        return len(self.constraints) - 1

    def set_objective(self, j: int, value: Number) -> None:
        _check_finite(value, f"objective of column {j}")
        self.variables[j].objective = value

    def var_index(self, name: str) -> int:
        return self._var_index[name]

    def row_index(self, name: str) -> int:
        return self._row_index[name]

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    @property
    def nonzeros(self) -> int:
        return sum(len(row.coeffs) for row in self.constraints)

    @property
    def variable_names(self) -> Tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def row_names(self) -> Tuple[str, ...]:
        return tuple(r.name for r in self.constraints)

    def objective_value(self, x: Sequence[Number]) -> Number:
        return sum((v.objective * x[j] for j, v in enumerate(self.variables) if v.objective != 0), 0)

    def row_activity(self, i: int, x: Sequence[Number]) -> Number:
        return sum((a * x[j] for j, a in self.constraints[i].coeffs.items()), 0)

    def __repr__(self) -> str:
        return (
            f"LinearProgram({self.name!r}, {self.sense}, "
            f"{self.num_variables} vars, {self.num_constraints} rows, {self.nonzeros} nz)"
        )


@dataclass
class Ray:
    """Feasible point plus a recession direction along which the objective improves without bound."""

    point: List[Number]
    direction: List[Number]


@dataclass
class Solution:
    """Result of one simplex solve, expressed in the original variables and rows."""

    status: str
    mode: str
    variable_names: Tuple[str, ...]
    row_names: Tuple[str, ...]
    objective: Optional[Number] = None
    x: List[Number] = field(default_factory=list)
    duals: List[Number] = field(default_factory=list)
    reduced_costs: List[Number] = field(default_factory=list)
    dual_objective: Optional[Number] = None
    primal_residual: Number = 0
    dual_residual: Number = 0
    complementarity: Number = 0
    farkas: Optional[List[Number]] = None
    ray: Optional[Ray] = None
    pivots: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"

    def value(self, name: str) -> Number:
        return self.x[self.variable_names.index(name)]

    def values(self) -> Dict[str, Number]:
        return dict(zip(self.variable_names, self.x))
