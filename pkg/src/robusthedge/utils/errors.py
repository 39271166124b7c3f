"""Exception types and process exit codes shared by the library and the CLI."""

from enum import IntEnum
from typing import List, Optional


class ExitCode(IntEnum):
    """Stable exit-code contract of the command line."""

    OK = 0
    ASSERTION_FAILED = 1
    ARBITRAGE = 2
    INCONSISTENT = 3
    CONFIG = 64
    MISSING_ARTIFACT = 66


class GridSpecError(ValueError):
    """Grid parameters violate a structural requirement."""


class PathSpaceTooLarge(ValueError):
    """Path enumeration would exceed the configured cap."""

    def __init__(self, count: int, cap: int, base: int, horizon: int) -> None:
        self.count = count
        self.cap = cap
        super().__init__(
            f"path space has (J+1)^N = {base}^{horizon} = {count} paths, above the cap of {cap}"
        )


class PayoffLookupError(KeyError):
    """A table payoff has no entry for the requested path."""


class InterpolationDomainError(ValueError):
    """Interpolation was asked for a negative argument."""


class CellSelectionError(ValueError):
    """A cell specification selects no enumerated path."""


class PricingError(ValueError):
    """Pricing operator data is malformed."""


class StaticArbitrageError(PricingError):
    """Call quotes admit arbitrage among the static instruments alone."""


class LinearProgramError(ValueError):
    """A linear program is malformed (duplicate labels, non-finite data, unknown variable)."""


class SolverStallError(RuntimeError):
    """The simplex iteration cap was hit."""

    def __init__(self, cap: int) -> None:
        self.cap = cap
        super().__init__(f"simplex exceeded the iteration cap of {cap} pivots")


class ExactSizeError(ValueError):
    """A program is too large for exact rational solving."""

    def __init__(self, nonzeros: int, cap: int) -> None:
        self.nonzeros = nonzeros
        self.cap = cap
        super().__init__(
            f"program has {nonzeros} nonzeros, above the exact-mode cap of {cap}; "
            "rerun without --exact (float mode)"
        )


class SolverStateError(RuntimeError):
    """An operation needs an optimal solution but got another status."""


class DualityInconsistencyError(RuntimeError):
    """Primal and dual solves disagree; ``report`` holds both sides for dumping."""

    def __init__(self, message: str, report: Optional[object] = None) -> None:
        self.report = report
        super().__init__(message)


class DoobParameterError(ValueError):
    """Doob strategy parameters break the kappa * r * c_r < 1 requirement."""


class MissingArtifactError(FileNotFoundError):
    """An input artifact from a previous run is absent."""


class ConfigError(ValueError):
    """Run configuration failed schema validation."""

    def __init__(self, messages: List[str], source: Optional[str] = None) -> None:
        self.messages = messages
        self.source = source
        where = f" in {source}" if source else ""
        super().__init__(f"invalid configuration{where}: " + "; ".join(messages))
