"""External-solver adapters: LP-text export, solution import, scipy HiGHS.

The text format is the common CPLEX LP dialect, which HiGHS, CBC, GLPK
and Gurobi all read. Columns are named ``x<j>`` and rows ``r<i>``. The
solution import accepts any file whose lines look like ``x<j> <value>``;
other lines are ignored, so raw HiGHS/CBC solution dumps work.
"""
from __future__ import annotations

import re
import shlex
import subprocess
import tempfile
from pathlib import Path

import numpy as np

from .problem import EQ, INFEASIBLE, OPTIMAL, LpProblem, LpSolution


def _fmt(v: float) -> str:
    return repr(float(v))


def _terms(cols, vals) -> str:
    out = []
    for j, v in zip(cols, vals):
        sign = "-" if v < 0 else "+"
        out.append(f"{sign} {_fmt(abs(v))} x{j}")
    s = " ".join(out) if out else "0 x0"
    return s[2:] if s.startswith("+ ") else s


def write_lp(problem: LpProblem, path, binaries=()) -> None:
    """Write ``problem`` in CPLEX LP text format."""
    A = problem.A.tocsr()
    lines = ["\\ moegf export", "Minimize"]
    nz = np.flatnonzero(problem.c)
    lines.append(" obj: " + _terms(nz, problem.c[nz]) + (f" + {_fmt(problem.offset)}" if problem.offset else ""))
    lines.append("Subject To")
    for i in range(problem.n_rows):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        op = "=" if problem.sense[i] == EQ else "<="
        lines.append(f" r{i}: {_terms(A.indices[lo:hi], A.data[lo:hi])} {op} {_fmt(problem.b[i])}")
    lines.append("Bounds")
    for j in range(problem.n_vars):
        lb, ub = problem.lb[j], problem.ub[j]
        lo = "-inf" if not np.isfinite(lb) else _fmt(lb)
        hi = "+inf" if not np.isfinite(ub) else _fmt(ub)
        lines.append(f" {lo} <= x{j} <= {hi}")
    binaries = list(binaries)
    if binaries:
        lines.append("Binaries")
        lines.append(" " + " ".join(f"x{j}" for j in binaries))
    lines.append("End")
    Path(path).write_text("\n".join(lines) + "\n")


_SOL_LINE = re.compile(r"^\s*(?:\d+\s+)?x(\d+)\s+([-+0-9.eEinfINF]+)")


def read_solution(path, n_vars: int) -> np.ndarray:
    """Parse ``x<j> value`` lines into a dense vector (missing columns are 0)."""
    x = np.zeros(n_vars)
    for line in Path(path).read_text().splitlines():
        m = _SOL_LINE.match(line)
        if m and int(m.group(1)) < n_vars:
            x[int(m.group(1))] = float(m.group(2))
    return x


def external_solve(problem: LpProblem, command: str, binaries=()) -> LpSolution:
    """Run a file-based solver.

    ``command`` is a template with ``{lp}`` and ``{sol}`` placeholders, e.g.
    ``"highs --model_file {lp} --solution_file {sol}"``.
    """
    with tempfile.TemporaryDirectory() as tmp:
        lp = Path(tmp) / "model.lp"
        sol = Path(tmp) / "model.sol"
        write_lp(problem, lp, binaries)
        args = shlex.split(command.format(lp=lp, sol=sol))
        subprocess.run(args, check=True, capture_output=True)
        if not sol.exists():
            return LpSolution(INFEASIBLE)
        x = read_solution(sol, problem.n_vars)
    return LpSolution(OPTIMAL, x=x, objective=problem.objective(x))


def highs_solve(problem: LpProblem) -> LpSolution:
    """Solve through ``scipy.optimize.linprog(method="highs")``."""
    from scipy.optimize import linprog

    le = problem.sense != EQ
    A = problem.A.tocsr()
    res = linprog(
        problem.c,
        A_ub=A[le] if le.any() else None, b_ub=problem.b[le] if le.any() else None,
        A_eq=A[~le] if (~le).any() else None, b_eq=problem.b[~le] if (~le).any() else None,
        bounds=np.column_stack([problem.lb, problem.ub]), method="highs",
    )
    if res.status == 0:
        duals = np.zeros(problem.n_rows)
        if le.any():
            duals[le] = res.ineqlin.marginals
        if (~le).any():
            duals[~le] = res.eqlin.marginals
        return LpSolution(OPTIMAL, x=res.x, objective=problem.objective(res.x), duals=duals,
                          iterations=int(res.nit))
    status = {2: INFEASIBLE, 3: "unbounded"}.get(res.status, "iteration-limit")
    return LpSolution(status, iterations=int(getattr(res, "nit", 0)))


def highs_milp_solve(problem: LpProblem, binaries, node_limit: int | None = None) -> LpSolution:
    """Mixed-binary solve through ``scipy.optimize.milp``.

    Same contract as :func:`bnb_solve`: ``info["bound"]`` holds HiGHS's
    dual bound, which stays valid when the node limit stops the search.
    """
    from scipy.optimize import Bounds, LinearConstraint, milp

    A = problem.A.tocsr()
    lo = np.where(problem.sense == EQ, problem.b, -np.inf)
    integrality = np.zeros(problem.n_vars)
    integrality[np.asarray(binaries, dtype=np.int64)] = 1
    opts = {} if node_limit is None else {"node_limit": int(node_limit)}
    res = milp(problem.c, constraints=LinearConstraint(A, lo, problem.b) if problem.n_rows else None,
               integrality=integrality, bounds=Bounds(problem.lb, problem.ub), options=opts)
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    bound = getattr(res, "mip_dual_bound", None)
    if res.x is None:
        status = INFEASIBLE if res.status == 2 else "iteration-limit"
        info = {} if bound is None else {"bound": float(bound) + problem.offset}
        return LpSolution(status, lp_solves=max(nodes, 1), nodes=nodes, info=info)
    x = np.asarray(res.x, dtype=float)
    x[binaries] = np.round(x[binaries])
    obj = problem.objective(x)
    bound = obj if bound is None else float(bound) + problem.offset
    status = OPTIMAL if res.status == 0 else "iteration-limit"
    return LpSolution(status, x=x, objective=obj, lp_solves=max(nodes, 1), nodes=nodes,
                      info={"bound": min(bound, obj)})
