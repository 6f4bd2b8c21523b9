"""LP core: problem container, bounded simplex, branch-and-bound."""
from .bnb import BnbNode, bnb_solve, most_fractional
from .external import external_solve, highs_milp_solve, highs_solve, read_solution, write_lp
from .problem import (EQ, INFEASIBLE, ITERATION_LIMIT, LE, OPTIMAL, UNBOUNDED,
                      LpBuilder, LpProblem, LpSolution, add_abs_penalty)
from .simplex import lp_solve

__all__ = [
    "BnbNode", "bnb_solve", "most_fractional", "external_solve", "highs_milp_solve", "highs_solve",
    "read_solution", "write_lp", "EQ", "LE", "INFEASIBLE", "ITERATION_LIMIT",
    "OPTIMAL", "UNBOUNDED", "LpBuilder", "LpProblem", "LpSolution",
    "add_abs_penalty", "lp_solve",
]
