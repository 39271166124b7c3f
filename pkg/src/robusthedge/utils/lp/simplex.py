"""Two-phase dense tableau simplex over float64 or exact rationals.

The program is first rewritten in standard form ``A y = b, y >= 0, b >= 0``:
lower-bounded columns are shifted, upper-only columns reflected, free columns split,
finite upper bounds become extra rows, inequality rows get slack columns and rows with
a negative right-hand side are negated. Every row then receives an artificial column;
the artificial block stays in the tableau for the whole solve so row duals can be read
from its reduced costs.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from robusthedge.utils.errors import SolverStallError
from robusthedge.utils.lp.model import LinearProgram, Number, Ray, Solution, to_fraction

logger = logging.getLogger(__name__)

# consecutive degenerate pivots before switching to Bland's rule
BLAND_STREAK = 50


@dataclass(frozen=True)
class Arithmetic:
    mode: str
    convert: Callable[[Number], Number]
    tolerance: Number
    tie: Number
    dtype: object
    zero: Number
    one: Number


def float_arithmetic(tolerance: float = 1e-9) -> Arithmetic:
    return Arithmetic("float", float, tolerance, 1e-12, np.float64, 0.0, 1.0)


def exact_arithmetic() -> Arithmetic:
    return Arithmetic("exact", to_fraction, Fraction(0), Fraction(0), object, Fraction(0), Fraction(1))


@dataclass
class StandardForm:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    n_struct: int
    columns: List[List[Tuple[int, int]]]
    offsets: List[Number]
    row_sign: List[int]
    row_origin: List[int]
    obj_sign: int


def standardize(lp: LinearProgram, ar: Arithmetic) -> StandardForm:
    conv = ar.convert
    obj_sign = 1 if lp.sense == "min" else -1
    columns: List[List[Tuple[int, int]]] = []
    offsets: List[Number] = []
    costs: List[Number] = []
    bound_rows: List[Tuple[int, Number]] = []
    ncol = 0
    for var in lp.variables:
        cost = conv(var.objective) * obj_sign
        lower = None if var.lower is None else conv(var.lower)
        upper = None if var.upper is None else conv(var.upper)
        if lower is not None:
            columns.append([(ncol, 1)])
            offsets.append(lower)
            costs.append(cost)
            if upper is not None:
                bound_rows.append((ncol, upper - lower))
            ncol += 1
        elif upper is not None:
            columns.append([(ncol, -1)])
            offsets.append(upper)
            costs.append(-cost)
            ncol += 1
        else:
            columns.append([(ncol, 1), (ncol + 1, -1)])
            offsets.append(ar.zero)
            costs.extend([cost, -cost])
            ncol += 2
    n_struct = ncol

    rows: List[Tuple[Dict[int, Number], str, Number, int]] = []
    for i, row in enumerate(lp.constraints):
        coeffs: Dict[int, Number] = {}
        rhs = conv(row.rhs)
        for j, a in row.coeffs.items():
            a = conv(a)
            rhs -= a * offsets[j]
            for col, sign in columns[j]:
                coeffs[col] = coeffs.get(col, ar.zero) + sign * a
        rows.append((coeffs, row.sense, rhs, i))
    for k, (col, cap) in enumerate(bound_rows):
        rows.append(({col: ar.one}, "<=", cap, -1 - k))

    n = n_struct + sum(1 for r in rows if r[1] != "==")
    m = len(rows)
    A = np.full((m, n), ar.zero, dtype=ar.dtype)
    b = np.full(m, ar.zero, dtype=ar.dtype)
    row_sign: List[int] = []
    slack = n_struct
    for i, (coeffs, sense, rhs, _) in enumerate(rows):
        for col, a in coeffs.items():
            A[i, col] = a
        if sense == "<=":
            A[i, slack] = ar.one
            slack += 1
        elif sense == ">=":
            A[i, slack] = -ar.one
            slack += 1
        sign = 1
        if rhs < 0:
            A[i] = -A[i]
            rhs = -rhs
            sign = -1
        b[i] = rhs
        row_sign.append(sign)
    c = np.full(n, ar.zero, dtype=ar.dtype)
    for col, cost in enumerate(costs):
        c[col] = cost
    return StandardForm(
        A=A,
        b=b,
        c=c,
        n_struct=n_struct,
        columns=columns,
        offsets=offsets,
        row_sign=row_sign,
        row_origin=[r[3] for r in rows],
        obj_sign=obj_sign,
    )


class Tableau:
    """Dense tableau ``[A | I | b]`` with the reduced-cost row stored last."""

    def __init__(self, A: np.ndarray, b: np.ndarray, ar: Arithmetic) -> None:
        m, n = A.shape
        self.m = m
        self.n = n
        self.ar = ar
        T = np.full((m + 1, n + m + 1), ar.zero, dtype=ar.dtype)
        T[:m, :n] = A
        for i in range(m):
            T[i, n + i] = ar.one
            T[i, -1] = b[i]
        self.T = T
        self.basis: List[int] = [n + i for i in range(m)]
        self.pivots = 0

    def set_costs(self, costs: List[Number]) -> None:
        T = self.T
        T[self.m, :] = self.ar.zero
        for j, cost in enumerate(costs):
            T[self.m, j] = cost
        for i, col in enumerate(self.basis):
            cb = costs[col]
            if cb != 0:
                nz = np.flatnonzero(T[i])
                T[self.m, nz] = T[self.m, nz] - cb * T[i, nz]

    @property
    def objective(self) -> Number:
        return -self.T[self.m, -1]

    def basic_values(self) -> List[Number]:
        values = [self.ar.zero] * (self.n + self.m)
        for i, col in enumerate(self.basis):
            values[col] = self.T[i, -1]
        return values

    def pivot(self, r: int, c: int) -> None:
        T = self.T
        if self.ar.mode == "float":
            T[r] = T[r] / T[r, c]
            factors = T[:, c].copy()
            factors[r] = 0.0
            T -= np.outer(factors, T[r])
            T[:, c] = 0.0
            T[r, c] = 1.0
            T[np.abs(T) < 1e-13] = 0.0
        else:
            # rational rows are sparse: touch only the pivot row's nonzero columns
            nz = np.flatnonzero(T[r])
            pivot_row = T[r, nz] / T[r, c]
            T[r, nz] = pivot_row
            for i in np.flatnonzero(T[:, c]):
                if i != r:
                    T[i, nz] = T[i, nz] - T[i, c] * pivot_row
        self.basis[r] = c
        self.pivots += 1

    def _entering(self, limit: int, bland: bool) -> Optional[int]:
        d = self.T[self.m]
        tol = self.ar.tolerance
        best: Optional[int] = None
        for j in range(limit):
            if d[j] < -tol:
                if bland:
                    return j
                if best is None or d[j] < d[best]:
                    best = j
        return best

    def _leaving(self, c: int) -> Optional[int]:
        T = self.T
        tol = self.ar.tolerance
        best: Optional[int] = None
        best_ratio: Number = 0
        for i in range(self.m):
            a = T[i, c]
            if a > tol:
                ratio = T[i, -1] / a
                if (
                    best is None
                    or ratio < best_ratio - self.ar.tie
                    or (abs(ratio - best_ratio) <= self.ar.tie and self.basis[i] < self.basis[best])
                ):
                    best, best_ratio = i, ratio
        return best

    def run(self, limit: int, cap: int) -> Tuple[str, Optional[int]]:
        """Pivot until optimal or unbounded, entering only columns below ``limit``."""
        streak = 0
        bland = False
        while True:
            c = self._entering(limit, bland)
            if c is None:
                return "optimal", None
            r = self._leaving(c)
            if r is None:
                return "unbounded", c
            if self.pivots >= cap:
                raise SolverStallError(cap)
            degenerate = self.T[r, -1] <= self.ar.tolerance
            streak = streak + 1 if degenerate else 0
            if streak >= BLAND_STREAK and not bland:
                logger.debug("degenerate streak of %d pivots, switching to Bland's rule", streak)
                bland = True
            self.pivot(r, c)

    def drive_out_artificials(self) -> None:
        tol = self.ar.tolerance
        for i in range(self.m):
            if self.basis[i] < self.n:
                continue
            for j in range(self.n):
                if abs(self.T[i, j]) > tol and j not in self.basis:
                    self.pivot(i, j)
                    break


def _to_original(sf: StandardForm, y: List[Number], ar: Arithmetic, shift: bool) -> List[Number]:
    x: List[Number] = []
    for j, cols in enumerate(sf.columns):
        value = sf.offsets[j] if shift else ar.zero
        for col, sign in cols:
            value = value + sign * y[col]
        x.append(ar.convert(value))
    return x


def certify(
    lp: LinearProgram, ar: Arithmetic, x: List[Number], duals: List[Number]
) -> Tuple[List[Number], Number, Number, Number, Number]:
    """Reduced costs, dual objective and the primal/dual/complementarity residuals."""
    conv = ar.convert
    tol = ar.tolerance
    obj_sign = 1 if lp.sense == "min" else -1

    rc = [conv(v.objective) for v in lp.variables]
    primal_res = ar.zero
    dual_res = ar.zero
    compl = ar.zero
    dual_obj = ar.zero
    for i, row in enumerate(lp.constraints):
        pi = duals[i]
        rhs = conv(row.rhs)
        activity = ar.zero
        for j, a in row.coeffs.items():
            a = conv(a)
            rc[j] = rc[j] - pi * a
            activity = activity + a * x[j]
        gap = activity - rhs
        if row.sense == "<=":
            violation = max(gap, ar.zero)
        elif row.sense == ">=":
            violation = max(-gap, ar.zero)
        else:
            violation = abs(gap)
        primal_res = max(primal_res, violation)
        dual_obj = dual_obj + pi * rhs
        compl = compl + abs(pi) * abs(gap)
        if row.sense != "==":
            wants_positive = (row.sense == ">=") == (lp.sense == "min")
            signed = pi if wants_positive else -pi
            dual_res = max(dual_res, max(-signed, ar.zero))

    for j, var in enumerate(lp.variables):
        lower = None if var.lower is None else conv(var.lower)
        upper = None if var.upper is None else conv(var.upper)
        if lower is not None:
            primal_res = max(primal_res, max(lower - x[j], ar.zero))
        if upper is not None:
            primal_res = max(primal_res, max(x[j] - upper, ar.zero))
        r = obj_sign * rc[j]
        if abs(r) <= tol:
            continue
        bound = lower if r > 0 else upper
        if bound is None:
            dual_res = max(dual_res, abs(r))
            continue
        dual_obj = dual_obj + rc[j] * bound
        compl = compl + abs(rc[j]) * abs(x[j] - bound)
    return rc, dual_obj, primal_res, dual_res, compl


def simplex(lp: LinearProgram, ar: Arithmetic, iteration_cap: int = 10**6) -> Solution:
    """Solve ``lp``; the returned Solution carries duals at optimality, a Farkas
    multiplier vector when infeasible and a verified-shape ray when unbounded."""
    sf = standardize(lp, ar)
    m, n = sf.A.shape
    tab = Tableau(sf.A, sf.b, ar)
    names = dict(variable_names=lp.variable_names, row_names=lp.row_names)
    logger.debug("%r standardized to %d rows x %d columns (%s mode)", lp, m, n, ar.mode)

    tab.set_costs([ar.zero] * n + [ar.one] * m)
    tab.run(n, iteration_cap)
    infeasibility = tab.objective
    b_scale = max([abs(v) for v in sf.b], default=ar.zero)
    logger.debug("phase I done after %d pivots, infeasibility %s", tab.pivots, infeasibility)
    if infeasibility > ar.tolerance * (1 + b_scale):
        y = [ar.convert(ar.one - tab.T[m, n + k]) for k in range(m)]
        farkas = [ar.zero] * lp.num_constraints
        for k, origin in enumerate(sf.row_origin):
            if origin >= 0:
                farkas[origin] = sf.row_sign[k] * y[k]
        return Solution(status="infeasible", mode=ar.mode, farkas=farkas, pivots=tab.pivots, **names)

    tab.drive_out_artificials()
    tab.set_costs(list(sf.c) + [ar.zero] * m)
    status, entering = tab.run(n, iteration_cap)
    logger.debug("phase II %s after %d pivots in total", status, tab.pivots)
    y_std = tab.basic_values()

    if status == "unbounded":
        direction = [ar.zero] * (n + m)
        direction[entering] = ar.one
        for i, col in enumerate(tab.basis):
            if col < n:
                direction[col] = -tab.T[i, entering]
        point = _to_original(sf, y_std, ar, shift=True)
        ray = Ray(point=point, direction=_to_original(sf, direction, ar, shift=False))
        return Solution(status="unbounded", mode=ar.mode, x=point, ray=ray, pivots=tab.pivots, **names)

    x = _to_original(sf, y_std, ar, shift=True)
    y = [ar.convert(-tab.T[m, n + k]) for k in range(m)]
    duals = [ar.zero] * lp.num_constraints
    for k, origin in enumerate(sf.row_origin):
        if origin >= 0:
            duals[origin] = sf.obj_sign * sf.row_sign[k] * y[k]
    rc, dual_obj, primal_res, dual_res, compl = certify(lp, ar, x, duals)
    return Solution(
        status="optimal",
        mode=ar.mode,
        objective=_objective(lp, ar, x),
        x=x,
        duals=duals,
        reduced_costs=rc,
        dual_objective=dual_obj,
        primal_residual=primal_res,
        dual_residual=dual_res,
        complementarity=compl,
        pivots=tab.pivots,
        **names,
    )


def _objective(lp: LinearProgram, ar: Arithmetic, x: List[Number]) -> Number:
    return sum((ar.convert(v.objective) * x[j] for j, v in enumerate(lp.variables)), ar.zero)
