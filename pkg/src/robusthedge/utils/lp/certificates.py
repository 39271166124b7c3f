"""Independent checks of infeasibility and unboundedness certificates on the original program."""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

from robusthedge.utils.lp.model import LinearProgram, Number, Ray, to_fraction


@dataclass
class CertificateCheck:
    valid: bool
    margin: Optional[Number] = None
    problems: List[str] = field(default_factory=list)


def _arith(values: Sequence[Number], exact: Optional[bool]):
    if exact is None:
        exact = all(isinstance(v, (int, Fraction)) for v in values)
    return (to_fraction, Fraction(0), Fraction(0)) if exact else (float, 0.0, 1e-9)


def verify_farkas(
    lp: LinearProgram, multipliers: Sequence[Number], exact: Optional[bool] = None
) -> CertificateCheck:
    """Check that a row combination proves ``lp`` infeasible.

    Multipliers must be >= 0 on >= rows and <= 0 on <= rows, so every feasible x satisfies
    ``(A^T y)^T x >= y^T b``. The certificate holds when the supremum of ``(A^T y)^T x``
    over the variable bound box stays strictly below ``y^T b``.
    """
    conv, zero, tol = _arith(multipliers, exact)
    problems: List[str] = []
    g = [zero] * lp.num_variables
    yb = zero
    scale = zero
    for i, row in enumerate(lp.constraints):
        y = conv(multipliers[i])
        if row.sense == ">=" and y < -tol:
            problems.append(f"multiplier of >= row {row.name} is negative ({y})")
        if row.sense == "<=" and y > tol:
            problems.append(f"multiplier of <= row {row.name} is positive ({y})")
        if y == 0:
            continue
        yb = yb + y * conv(row.rhs)
        scale = scale + abs(y * conv(row.rhs))
        for j, a in row.coeffs.items():
            g[j] = g[j] + y * conv(a)
    sup = zero
    for j, var in enumerate(lp.variables):
        if abs(g[j]) <= tol:
            continue
        bound = var.upper if g[j] > 0 else var.lower
        if bound is None:
            problems.append(f"combination is unbounded along column {var.name}")
            continue
        sup = sup + g[j] * conv(bound)
        scale = scale + abs(g[j] * conv(bound))
    margin = yb - sup
    if margin <= tol * (1 + scale):
        problems.append(f"combination does not separate: y^T b - sup = {margin}")
    return CertificateCheck(valid=not problems, margin=margin, problems=problems)


def verify_ray(lp: LinearProgram, ray: Ray, exact: Optional[bool] = None) -> CertificateCheck:
    """Check a feasible point and a direction keeping feasibility while the objective improves."""
    conv, zero, tol = _arith(list(ray.point) + list(ray.direction), exact)
    problems: List[str] = []
    x = [conv(v) for v in ray.point]
    d = [conv(v) for v in ray.direction]
    for row in lp.constraints:
        activity = sum((conv(a) * x[j] for j, a in row.coeffs.items()), zero)
        slope = sum((conv(a) * d[j] for j, a in row.coeffs.items()), zero)
        rhs = conv(row.rhs)
        if row.sense in ("<=", "==") and (activity - rhs > tol or slope > tol):
            problems.append(f"row {row.name} breaks along the ray")
        if row.sense in (">=", "==") and (rhs - activity > tol or slope < -tol):
            problems.append(f"row {row.name} breaks along the ray")
    for j, var in enumerate(lp.variables):
        if var.lower is not None and (x[j] < conv(var.lower) - tol or d[j] < -tol):
            problems.append(f"lower bound of {var.name} breaks along the ray")
        if var.upper is not None and (x[j] > conv(var.upper) + tol or d[j] > tol):
            problems.append(f"upper bound of {var.name} breaks along the ray")
    growth = sum((conv(v.objective) * d[j] for j, v in enumerate(lp.variables)), zero)
    if lp.sense == "min":
        growth = -growth
    if growth <= tol:
        problems.append(f"objective does not improve along the ray (growth {growth})")
    return CertificateCheck(valid=not problems, margin=growth, problems=problems)
