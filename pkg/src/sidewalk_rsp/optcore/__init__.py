"""LP simplex and branch-and-bound MILP engine."""

from .lp import EQ, GE, LE, LpProblem, SolveReport, Status, solve_lp
from .mip import Cut, CutOracle, MipProblem, solve_mip

__all__ = [
    "EQ", "GE", "LE", "Cut", "CutOracle", "LpProblem", "MipProblem",
    "SolveReport", "Status", "solve_lp", "solve_mip",
]
