"""Robust shortest-path solvers, worst-case evaluation and a brute-force oracle."""

from .common import Method, RobustSolution, SolverFailure, find_cycle
from .emit import SOLUTION_HEADER, solution_row, write_solutions
from .evaluate import (brute_force_robust, drsp_value, drsp_value_lp, mett, method_of,
                       worst_case_eval)
from .literal import (drsp_program, inner_dual_lp, inner_dual_value, solve_drsp_literal,
                      solve_subset_literal, subset_program)
from .sets import SubsetSupport
from .solvers import (budgeted_program, solve_budgeted, solve_budgeted_milp, solve_drsp,
                      solve_drsp_grid,
                      solve_ellipsoidal, solve_mett, solve_mkl_rsp, solve_nominal,
                      solve_svc_rsp)


def solve(network, model, od, **kw) -> RobustSolution:
    """Dispatch on the uncertainty model type."""
    m = method_of(model)
    if m is Method.BUDGETED:
        return solve_budgeted(network, model, od)
    if m is Method.ELLIPSOIDAL:
        return solve_ellipsoidal(network, model, od, **kw)
    if m is Method.DRSP:
        return solve_drsp(network, model, od, **kw)
    if m is Method.SVC:
        return solve_svc_rsp(network, model, od, **kw)
    if m is Method.MKL:
        return solve_mkl_rsp(network, model, od, **kw)
    return solve_nominal(network, model, od)


__all__ = [
    "Method", "RobustSolution", "SOLUTION_HEADER", "SolverFailure", "SubsetSupport",
    "brute_force_robust", "budgeted_program", "drsp_program", "drsp_value", "drsp_value_lp",
    "find_cycle", "inner_dual_lp", "inner_dual_value", "method_of", "mett", "solution_row",
    "solve", "solve_budgeted", "solve_budgeted_milp", "solve_drsp", "solve_drsp_grid", "solve_drsp_literal",
    "solve_ellipsoidal", "solve_mett", "solve_mkl_rsp", "solve_nominal", "solve_subset_literal",
    "solve_svc_rsp", "subset_program", "worst_case_eval", "write_solutions",
]
