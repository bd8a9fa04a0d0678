"""Harmonic-multiplier reduction for  lap u = A.grad u + B u_t + C u,  with a
numerical layer that measures how well each candidate solves the PDE."""

from .expr import DomainError, ParseError, parse
from .model import PDEProblem, ScalarField, make_gamma, make_problem
from .ode import solve_f_const_B, solve_f_log_family, solve_f_numeric
from .reduction import INTEGRAL_DERIVED, PAPER_PRINTED, build_solution
from .verify import Grid, green_identity_check, residual_report

__all__ = [
    "DomainError",
    "Grid",
    "INTEGRAL_DERIVED",
    "PAPER_PRINTED",
    "PDEProblem",
    "ParseError",
    "ScalarField",
    "build_solution",
    "green_identity_check",
    "make_gamma",
    "make_problem",
    "parse",
    "residual_report",
    "solve_f_const_B",
    "solve_f_log_family",
    "solve_f_numeric",
]
