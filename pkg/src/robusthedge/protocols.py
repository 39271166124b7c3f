"""
Protocols (interfaces) for low coupling. Builders and commands depend on these, not on
concrete solver or pricing classes. See docs/tdrs/low-coupling-protocols.md.
"""

from __future__ import annotations

from fractions import Fraction
from typing import TYPE_CHECKING, Any, Dict, Optional, Protocol, Sequence, Union, runtime_checkable

if TYPE_CHECKING:
    from robusthedge.utils.lp.model import LinearProgram, Solution

Number = Union[int, float, Fraction]


@runtime_checkable
class LinearSolver(Protocol):
    """Contract for an LP backend. Implementations are registered by mode id."""

    @property
    def id(self) -> str:
        """Mode id, e.g. 'float' or 'exact'."""
        ...

    @property
    def exact(self) -> bool:
        """True when results are exact rationals and residuals must vanish."""
        ...

    def solve(self, lp: "LinearProgram") -> "Solution":
        """Solve and return status, primal/dual values and certificates."""
        ...


@runtime_checkable
class PricingOperator(Protocol):
    """Contract for a sublinear static pricing functional on terminal grid functions."""

    @property
    def kind(self) -> str:
        """'measures' or 'calls'."""
        ...

    @property
    def epsilon(self) -> Fraction:
        """Widening applied to every marginal inequality (0 for the operator itself)."""
        ...

    def price(
        self,
        f: Sequence[Number],
        points: Sequence[Number],
        solver: Optional[LinearSolver] = None,
        epsilon: Number = 0,
    ) -> Number:
        """Time-zero cost of the static payoff with values ``f`` at terminal ``points``."""
        ...

    def describe(self) -> Dict[str, Any]:
        """Plain-data rendering echoed into reports."""
        ...
