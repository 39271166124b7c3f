"""Solver backends and their registry (one factory per arithmetic mode)."""

from typing import Callable, Dict, List, Mapping, Optional, Sequence

from robusthedge.protocols import LinearSolver
from robusthedge.utils.errors import ExactSizeError, SolverStateError
from robusthedge.utils.lp.model import LinearProgram, Number, Solution
from robusthedge.utils.lp.simplex import exact_arithmetic, float_arithmetic, simplex

DEFAULT_ITERATION_CAP = 10**6
DEFAULT_EXACT_NONZERO_CAP = 2000


class FloatSimplexSolver:
    """Double-precision simplex with absolute tolerance ``tolerance``."""

    id = "float"

    def __init__(self, tolerance: float = 1e-9, iteration_cap: int = DEFAULT_ITERATION_CAP, **_: object) -> None:
        self.tolerance = tolerance
        self.iteration_cap = iteration_cap

    @property
    def exact(self) -> bool:
        return False

    def solve(self, lp: LinearProgram) -> Solution:
        return simplex(lp, float_arithmetic(self.tolerance), self.iteration_cap)


class ExactSimplexSolver:
    """Rational simplex; refuses programs above ``nonzero_cap`` constraint nonzeros."""

    id = "exact"

    def __init__(
        self,
        nonzero_cap: int = DEFAULT_EXACT_NONZERO_CAP,
        iteration_cap: int = DEFAULT_ITERATION_CAP,
        **_: object,
    ) -> None:
        self.nonzero_cap = nonzero_cap
        self.iteration_cap = iteration_cap

    @property
    def exact(self) -> bool:
        return True

    def solve(self, lp: LinearProgram) -> Solution:
        if lp.nonzeros > self.nonzero_cap:
            raise ExactSizeError(lp.nonzeros, self.nonzero_cap)
        return simplex(lp, exact_arithmetic(), self.iteration_cap)


_REGISTRY: Dict[str, Callable[..., LinearSolver]] = {}


def register_solver(mode: str, factory: Callable[..., LinearSolver]) -> None:
    """Register a solver factory under a mode id."""
    _REGISTRY[mode] = factory


def get_known_solver_modes() -> List[str]:
    return list(_REGISTRY.keys())


def get_solver(mode: str = "float", **options: object) -> LinearSolver:
    """Build the solver for ``mode``; options not used by that backend are ignored."""
    factory = _REGISTRY.get(mode)
    if factory is None:
        raise ValueError(f"Unknown solver mode: {mode}. Available: {', '.join(get_known_solver_modes())}")
    return factory(**options)


register_solver("float", FloatSimplexSolver)
register_solver("exact", ExactSimplexSolver)


def solve_float(lp: LinearProgram, tolerance: float = 1e-9, iteration_cap: int = DEFAULT_ITERATION_CAP) -> Solution:
    return FloatSimplexSolver(tolerance, iteration_cap).solve(lp)


def solve_exact(
    lp: LinearProgram,
    nonzero_cap: int = DEFAULT_EXACT_NONZERO_CAP,
    iteration_cap: int = DEFAULT_ITERATION_CAP,
) -> Solution:
    return ExactSimplexSolver(nonzero_cap, iteration_cap).solve(lp)


def extract_duals(sol: Solution, labels: Optional[Sequence[str]] = None) -> Mapping[str, Number]:
    """Dual value per labeled row. In a maximization the dual of a <= row is >= 0."""
    if not sol.is_optimal:
        raise SolverStateError(f"duals need an optimal solution, status is {sol.status}")
    duals = dict(zip(sol.row_names, sol.duals))
    if labels is None:
        return duals
    return {label: duals[label] for label in labels}
