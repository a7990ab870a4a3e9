"""Linear programs: model, builder, solvers and text dump."""

from .lpfile import lp_to_string, write_lp
from .model import EQ, GE, LE, LinearProgram, LpBuilder, LpSolution, Status
from .simplex import simplex
from .solver import DEFAULT_OPTIONS, METHODS, SolverOptions, solve

__all__ = [
    "EQ", "GE", "LE",
    "LinearProgram", "LpBuilder", "LpSolution", "Status",
    "SolverOptions", "DEFAULT_OPTIONS", "METHODS",
    "solve", "simplex", "write_lp", "lp_to_string",
]
