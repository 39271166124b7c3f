"""In-repo linear programming: model, two-phase simplex backends, certificates, LP text export."""

from robusthedge.utils.lp.backends import (
    ExactSimplexSolver,
    FloatSimplexSolver,
    extract_duals,
    get_known_solver_modes,
    get_solver,
    register_solver,
    solve_exact,
    solve_float,
)
from robusthedge.utils.lp.certificates import CertificateCheck, verify_farkas, verify_ray
from robusthedge.utils.lp.lpformat import lp_to_text, write_lp_text
from robusthedge.utils.lp.model import LinearProgram, Number, Ray, Solution, to_fraction

__all__ = [
    "CertificateCheck",
    "ExactSimplexSolver",
    "FloatSimplexSolver",
    "LinearProgram",
    "Number",
    "Ray",
    "Solution",
    "extract_duals",
    "get_known_solver_modes",
    "get_solver",
    "lp_to_text",
    "register_solver",
    "solve_exact",
    "solve_float",
    "to_fraction",
    "verify_farkas",
    "verify_ray",
    "write_lp_text",
]
