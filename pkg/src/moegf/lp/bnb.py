"""Best-first branch-and-bound over binary columns of an LpProblem."""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .problem import INFEASIBLE, ITERATION_LIMIT, OPTIMAL, LpProblem, LpSolution
from .simplex import lp_solve

INT_TOL = 1e-6


@dataclass
class BnbNode:
    """A subproblem: binaries fixed by branching plus the parent's LP bound."""

    node_id: int
    fixed: dict = field(default_factory=dict)
    parent_bound: float = -np.inf
    depth: int = 0

    def child(self, node_id: int, var: int, value: int, bound: float) -> "BnbNode":
        if var in self.fixed:
            raise ValueError(f"binary {var} fixed twice")
        fixed = dict(self.fixed)
        fixed[var] = value
        return BnbNode(node_id, fixed, bound, self.depth + 1)


def most_fractional(x: np.ndarray, binaries: np.ndarray, tol: float = INT_TOL) -> int | None:
    """Index of the binary closest to 0.5, lowest index on ties; None if integral."""
    frac = np.abs(x[binaries] - np.round(x[binaries]))
    if frac.max(initial=0.0) <= tol:
        return None
    score = np.abs(x[binaries] - 0.5)
    return int(binaries[np.argmin(score)])


def bnb_solve(
    problem: LpProblem,
    binaries,
    *,
    solver: Callable[[LpProblem], LpSolution] = lp_solve,
    node_limit: int | None = None,
    int_tol: float = INT_TOL,
    trace: list | None = None,
) -> LpSolution:
    """Minimize ``problem`` with ``x[binaries]`` restricted to {0, 1}.

    Parameters
    ----------
    problem : LpProblem
        Binary columns must carry bounds ``[0, 1]``.
    binaries : array_like of int
    solver : callable, optional
        LP backend; the bundled simplex by default.
    node_limit : int, optional
        Stop after this many LP solves and return the incumbent with the
        best open bound recorded in ``info["bound"]``.
    trace : list, optional
        Receives ``(node_id, parent_bound, bound)`` for each solved node.

    Returns
    -------
    LpSolution
        ``lp_solves`` counts every LP solved, ``nodes`` counts branchings.
    """
    binaries = np.asarray(binaries, dtype=np.int64)
    if np.any(problem.lb[binaries] < 0) or np.any(problem.ub[binaries] > 1):
        raise ValueError("binary columns must have bounds within [0, 1]")

    incumbent: LpSolution | None = None
    best = np.inf
    solves = 0
    branched = 0
    pivots = 0
    next_id = 1
    heap: list = [(-np.inf, 0, BnbNode(0))]
    status = OPTIMAL

    while heap:
        bound, _, node = heapq.heappop(heap)
        if bound >= best - 1e-9 * max(1.0, abs(best)):
            continue
        if node_limit is not None and solves >= node_limit:
            heapq.heappush(heap, (bound, node.node_id, node))
            status = ITERATION_LIMIT
            break
        lb = problem.lb.copy()
        ub = problem.ub.copy()
        for j, v in node.fixed.items():
            lb[j] = ub[j] = float(v)
        sol = solver(problem.with_bounds(lb, ub))
        solves += 1
        pivots += sol.iterations
        if not sol.ok:
            continue
        if trace is not None:
            trace.append((node.node_id, node.parent_bound, sol.objective))
        if sol.objective >= best - 1e-9 * max(1.0, abs(best)):
            continue
        j = most_fractional(sol.x, binaries, int_tol)
        if j is None:
            x = sol.x.copy()
            x[binaries] = np.round(x[binaries])
            sol.x = x
            incumbent, best = sol, sol.objective
            continue
        branched += 1
        for v in (0, 1) if sol.x[j] < 0.5 else (1, 0):
            heapq.heappush(heap, (sol.objective, next_id, node.child(next_id, j, v, sol.objective)))
            next_id += 1

    open_bound = min((h[0] for h in heap), default=best) if status == ITERATION_LIMIT else best
    if incumbent is None:
        return LpSolution(INFEASIBLE if status == OPTIMAL else ITERATION_LIMIT,
                          lp_solves=solves, nodes=branched, iterations=pivots,
                          info={"bound": open_bound})
    incumbent.lp_solves = solves
    incumbent.nodes = branched
    incumbent.iterations = pivots
    incumbent.status = status
    incumbent.info = dict(incumbent.info, bound=min(open_bound, best))
    return incumbent
