"""CPLEX-LP text export for cross-checking programs in external solvers."""

import re
from pathlib import Path
from typing import List

from robusthedge.utils.lp.model import LinearProgram, Number

_UNSAFE = re.compile(r"[^A-Za-z0-9_.()/,!#$%&;?@{}~'|-]")

SENSE_TEXT = {"<=": "<=", "==": "=", ">=": ">="}


def lp_name(label: str) -> str:
    """Map a label onto the LP-format name alphabet; brackets become parentheses."""
    name = _UNSAFE.sub("_", label.replace("[", "(").replace("]", ")"))
    if name[0].isdigit() or name[0] in ".-":
        name = "_" + name
    return name


def _num(value: Number) -> str:
    return repr(float(value))


def _terms(coeffs, names) -> str:
    parts: List[str] = []
    for j, a in sorted(coeffs.items()):
        sign = "-" if a < 0 else "+"
        parts.append(f"{sign} {_num(abs(a))} {names[j]}")
    text = " ".join(parts) if parts else "0 " + names[0]
    return text[2:] if text.startswith("+ ") else text


def lp_to_text(lp: LinearProgram) -> str:
    names = [lp_name(v.name) for v in lp.variables]
    lines = [f"\\ {lp.name}", "Maximize" if lp.sense == "max" else "Minimize"]
    objective = {j: v.objective for j, v in enumerate(lp.variables) if v.objective != 0}
    lines.append(" obj: " + (_terms(objective, names) if objective else "0 " + names[0] if names else "0"))
    lines.append("Subject To")
    for row in lp.constraints:
        lines.append(f" {lp_name(row.name)}: {_terms(row.coeffs, names)} {SENSE_TEXT[row.sense]} {_num(row.rhs)}")
    lines.append("Bounds")
    for name, var in zip(names, lp.variables):
        if var.is_free:
            lines.append(f" {name} free")
        elif var.lower is not None and var.upper is not None:
            lines.append(f" {_num(var.lower)} <= {name} <= {_num(var.upper)}")
        elif var.lower is None:
            lines.append(f" -inf <= {name} <= {_num(var.upper)}")
        elif var.lower != 0:
            lines.append(f" {name} >= {_num(var.lower)}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp_text(lp: LinearProgram, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(lp_to_text(lp), encoding="utf-8")
    return path
