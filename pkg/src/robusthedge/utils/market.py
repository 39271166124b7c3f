"""Discrete market: grid, path enumeration, filtration tree, payoffs and grid interpolation."""

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from robusthedge.utils.errors import (
    CellSelectionError,
    GridSpecError,
    InterpolationDomainError,
    PathSpaceTooLarge,
    PayoffLookupError,
)
from robusthedge.utils.lp.model import Number, to_fraction

DEFAULT_PATH_CAP = 10**6
KAPPA_MAX = Fraction(1, 4)

PricePath = Tuple[Number, ...]
Prefix = Tuple[Fraction, ...]


@dataclass(frozen=True)
class GridSpec:
    """Grid {0, h, ..., Jh} with h = 1/n, N trading periods, cost rate kappa and increment bound M.

    ``M=None`` means unbounded trading increments.
    """

    n: int
    J: int
    N: int
    kappa: Fraction = Fraction(0)
    M: Optional[Fraction] = None

    def __post_init__(self) -> None:
        for name in ("n", "J", "N"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise GridSpecError(f"{name} must be a positive integer, got {value!r}")
        if self.J < self.n:
            raise GridSpecError(
                f"J*h = {self.J}/{self.n} < 1: the initial price 1 must lie inside the truncated grid"
            )
        object.__setattr__(self, "kappa", to_fraction(self.kappa))
        if not 0 <= self.kappa <= KAPPA_MAX:
            raise GridSpecError(f"kappa={float(self.kappa)} violates the cost-rate bound 0 <= kappa <= 1/4")
        if self.M is not None:
            object.__setattr__(self, "M", to_fraction(self.M))
            if self.M < 0:
                raise GridSpecError(f"M must be nonnegative or unbounded, got {self.M}")

    @property
    def h(self) -> Fraction:
        return Fraction(1, self.n)

    @property
    def values(self) -> Tuple[Fraction, ...]:
        return tuple(i * self.h for i in range(self.J + 1))

    @property
    def ceiling(self) -> Fraction:
        return self.J * self.h

    @property
    def path_count(self) -> int:
        return (self.J + 1) ** self.N

    def index_of(self, value: Number) -> int:
        """Grid index of an on-grid value."""
        scaled = to_fraction(value) * self.n
        if scaled.denominator != 1 or not 0 <= scaled <= self.J:
            raise GridSpecError(f"{value} is not a point of the grid with h=1/{self.n}, J={self.J}")
        return int(scaled)

    def with_changes(self, **changes) -> "GridSpec":
        return replace(self, **changes)

    def describe(self) -> Dict[str, str]:
        return {
            "n": str(self.n),
            "J": str(self.J),
            "N": str(self.N),
            "kappa": str(self.kappa),
            "M": "unbounded" if self.M is None else str(self.M),
        }


def enumerate_paths(grid: GridSpec, cap: int = DEFAULT_PATH_CAP) -> List[PricePath]:
    """All paths (1, s_1, ..., s_N) on the grid in lexicographic order."""
    count = grid.path_count
    if count > cap:
        raise PathSpaceTooLarge(count, cap, grid.J + 1, grid.N)
    values = grid.values
    one = Fraction(1)
    return [(one,) + tuple(values[i] for i in idx) for idx in itertools.product(range(grid.J + 1), repeat=grid.N)]


@dataclass
class TreeNode:
    index: int
    depth: int
    prefix: Prefix
    parent: Optional[int]
    children: List[int] = field(default_factory=list)
    paths: List[int] = field(default_factory=list)

    @property
    def spot(self) -> Fraction:
        return self.prefix[-1]


class PathTree:
    """Prefix tree of enumerated paths; node v at depth k is an F_k atom."""

    def __init__(self, paths: Sequence[PricePath]) -> None:
        self.paths = list(paths)
        self.horizon = len(self.paths[0]) - 1 if self.paths else 0
        self.nodes: List[TreeNode] = []
        self.by_prefix: Dict[Prefix, int] = {}
        for depth in range(self.horizon + 1):
            for p, path in enumerate(self.paths):
                prefix = tuple(path[: depth + 1])
                index = self.by_prefix.get(prefix)
                if index is None:
                    parent = self.by_prefix[prefix[:-1]] if depth else None
                    index = len(self.nodes)
                    self.nodes.append(TreeNode(index, depth, prefix, parent))
                    self.by_prefix[prefix] = index
                    if parent is not None:
                        self.nodes[parent].children.append(index)
                self.nodes[index].paths.append(p)

    def node(self, prefix: Sequence[Number]) -> TreeNode:
        return self.nodes[self.by_prefix[tuple(prefix)]]

    def nodes_at(self, depth: int) -> List[TreeNode]:
        return [v for v in self.nodes if v.depth == depth]

    def trading_nodes(self) -> List[TreeNode]:
        """Nodes of depth 0..N-1, where positions are chosen."""
        return [v for v in self.nodes if v.depth < self.horizon]

    def leaves(self) -> List[TreeNode]:
        return self.nodes_at(self.horizon)

    def __len__(self) -> int:
        return len(self.nodes)


def build_tree(paths: Sequence[PricePath]) -> PathTree:
    return PathTree(paths)


@dataclass(frozen=True)
class PayoffSpec:
    """A claim on the path. ``modulus_slope`` L declares |G(w) - G(w')| <= L * ||w - w'||."""

    kind: str
    strike: Optional[Fraction] = None
    value: Optional[Fraction] = None
    threshold: Optional[Fraction] = None
    table: Optional[Mapping[Prefix, Fraction]] = None
    modulus_slope: Optional[Fraction] = None

    KINDS = ("call", "put", "asian", "lookback", "constant", "tail", "table")

    @classmethod
    def call(cls, strike: Number) -> "PayoffSpec":
        return cls("call", strike=to_fraction(strike), modulus_slope=Fraction(1))

    @classmethod
    def put(cls, strike: Number) -> "PayoffSpec":
        return cls("put", strike=to_fraction(strike), modulus_slope=Fraction(1))

    @classmethod
    def asian(cls, strike: Number) -> "PayoffSpec":
        return cls("asian", strike=to_fraction(strike), modulus_slope=Fraction(1))

    @classmethod
    def lookback(cls) -> "PayoffSpec":
        # the running max and the terminal value each move by at most ||w - w'||
        return cls("lookback", modulus_slope=Fraction(2))

    @classmethod
    def constant(cls, value: Number) -> "PayoffSpec":
        return cls("constant", value=to_fraction(value), modulus_slope=Fraction(0))

    @classmethod
    def tail(cls, threshold: Number) -> "PayoffSpec":
        return cls("tail", threshold=to_fraction(threshold))

    @classmethod
    def from_table(cls, table: Mapping[Sequence[Number], Number], modulus_slope: Optional[Number] = None) -> "PayoffSpec":
        clean = {tuple(to_fraction(s) for s in key): to_fraction(v) for key, v in table.items()}
        slope = None if modulus_slope is None else to_fraction(modulus_slope)
        return cls("table", table=clean, modulus_slope=slope)

    @property
    def label(self) -> str:
        if self.kind in ("call", "put", "asian"):
            return f"{self.kind}({self.strike})"
        if self.kind == "constant":
            return f"constant({self.value})"
        if self.kind == "tail":
            return f"tail({self.threshold})"
        if self.kind == "table":
            return f"table({len(self.table or {})} paths)"
        return self.kind

    @property
    def is_path_dependent(self) -> bool:
        return self.kind in ("asian", "lookback", "tail", "table")


def path_max(path: Sequence[Number]) -> Number:
    """Running maximum over s_0..s_N, which is also the sup norm of a nonnegative path."""
    return max(path)


def eval_payoff(payoff: PayoffSpec, path: Sequence[Number]) -> Number:
    kind = payoff.kind
    terminal = path[-1]
    if kind == "call":
        return max(terminal - payoff.strike, 0)
    if kind == "put":
        return max(payoff.strike - terminal, 0)
    if kind == "asian":
        mean = sum(path[1:], Fraction(0)) / (len(path) - 1)
        return max(mean - payoff.strike, 0)
    if kind == "lookback":
        return path_max(path) - terminal
    if kind == "constant":
        return payoff.value
    if kind == "tail":
        norm = path_max(path)
        return norm * norm if norm >= payoff.threshold else Fraction(0)
    if kind == "table":
        key = tuple(to_fraction(s) for s in path[1:])
        try:
            return payoff.table[key]
        except KeyError:
            raise PayoffLookupError(f"table payoff has no value for path {format_path(path)}") from None
    raise ValueError(f"Unknown payoff kind: {kind}")


def payoff_bound(payoff: PayoffSpec, paths: Iterable[PricePath]) -> Number:
    """K = sup of the payoff over the enumerated paths."""
    return max(eval_payoff(payoff, p) for p in paths)


def interpolate(g: Sequence[Number], x: Number, n: int) -> Number:
    """Piecewise-linear extension of a grid function, constant beyond the last grid point."""
    if x < 0:
        raise InterpolationDomainError(f"interpolation is defined on x >= 0, got {x}")
    scaled = n * x
    i = math.floor(scaled)
    last = len(g) - 1
    if i >= last:
        return g[last]
    alpha = scaled - i
    if alpha == 0:
        return g[i]
    return (1 - alpha) * g[i] + alpha * g[i + 1]


def sup_distance(a: Sequence[Number], b: Sequence[Number]) -> Number:
    return max(abs(x - y) for x, y in zip(a, b))


def sample_grid_path(grid: GridSpec, rng: np.random.Generator) -> PricePath:
    """Path with i.i.d. uniform grid coordinates s_1..s_N."""
    values = grid.values
    return (Fraction(1),) + tuple(values[int(i)] for i in rng.integers(0, grid.J + 1, size=grid.N))


def sample_continuum_path(grid: GridSpec, rng: np.random.Generator) -> Tuple[float, ...]:
    """Path with i.i.d. uniform coordinates on [0, Jh]."""
    return (1.0,) + tuple(float(v) for v in rng.uniform(0.0, float(grid.ceiling), size=grid.N))


def check_modulus(
    payoff: PayoffSpec, grid: GridSpec, pairs: int, rng: np.random.Generator
) -> List[Tuple[PricePath, PricePath, Number, Number]]:
    """Spot-check the declared modulus on random grid path pairs; returns violating pairs."""
    if payoff.modulus_slope is None:
        raise ValueError(f"payoff {payoff.label} declares no modulus of continuity")
    violations = []
    for _ in range(pairs):
        a = sample_grid_path(grid, rng)
        b = sample_grid_path(grid, rng)
        lhs = abs(eval_payoff(payoff, a) - eval_payoff(payoff, b))
        rhs = payoff.modulus_slope * sup_distance(a, b)
        if lhs > rhs:
            violations.append((a, b, lhs, rhs))
    return violations


def select_cell(paths: Sequence[PricePath], conditions: Mapping[int, Number]) -> List[int]:
    """Indices of paths with s_k equal to the given value for every (k, value) condition."""
    wanted = {int(k): to_fraction(v) for k, v in conditions.items()}
    if not wanted:
        raise CellSelectionError("cell specification is empty")
    horizon = len(paths[0]) - 1 if paths else 0
    for k in wanted:
        if not 1 <= k <= horizon:
            raise CellSelectionError(f"cell condition on s_{k} is outside 1..{horizon}")
    cell = [i for i, p in enumerate(paths) if all(p[k] == v for k, v in wanted.items())]
    if not cell:
        spec = ", ".join(f"s_{k}={v}" for k, v in sorted(wanted.items()))
        raise CellSelectionError(f"cell {{{spec}}} selects no enumerated path")
    return cell


def format_value(value: Number) -> str:
    return str(value) if isinstance(value, (int, Fraction)) else repr(float(value))


def format_path(path: Sequence[Number]) -> str:
    return "(" + ",".join(format_value(v) for v in path) + ")"


def format_prefix(prefix: Sequence[Number]) -> str:
    return ",".join(format_value(v) for v in prefix)


def load_payoff_table(path: Path, grid: GridSpec, modulus_slope: Optional[Number] = None) -> PayoffSpec:
    """Read CSV rows ``s_1,...,s_N,value`` (grid coordinates) into a table payoff.

    A non-numeric first row is taken as a header; ``#`` starts a comment.
    """
    try:
        frame = pd.read_csv(
            path, header=None, dtype=str, comment="#", keep_default_na=False, skipinitialspace=True
        )
    except pd.errors.EmptyDataError:
        raise ValueError(f"{path}: payoff table is empty") from None
    except pd.errors.ParserError as e:
        raise ValueError(f"{path}: malformed payoff table: {e}") from None
    table: Dict[Prefix, Fraction] = {}
    for rowno, row in enumerate(frame.itertuples(index=False, name=None), start=1):
        row = [c.strip() for c in row if isinstance(c, str) and c.strip()]
        if not row:
            continue
        try:
            cells = [to_fraction(c) for c in row]
        except ValueError:
            if rowno == 1:
                continue  # header
            raise ValueError(f"{path}: row {rowno}: non-numeric entry in {row}") from None
        if len(cells) != grid.N + 1:
            raise ValueError(f"{path}: row {rowno}: expected {grid.N + 1} columns, got {len(cells)}")
        for s in cells[:-1]:
            grid.index_of(s)
        table[tuple(cells[:-1])] = cells[-1]
    return PayoffSpec.from_table(table, modulus_slope)

