"""Bounded revised primal simplex with a two-phase start.

Every row gets a slack (``[0, inf)`` for ``<=`` rows, ``[0, 0]`` for
equalities). Rows whose slack cannot start basic receive an artificial
column and phase 1 drives the artificials to zero. The basis inverse is an
LU factorization refreshed every ``REFACTOR`` pivots with product-form eta
updates in between.

Pricing is Dantzig's rule. After ``STALL`` consecutive iterations without
objective progress the solver switches to Bland's rule until progress
resumes, which rules out cycling. The ratio test is Harris' two-pass test
with bound flips.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .problem import (EQ, INFEASIBLE, ITERATION_LIMIT, OPTIMAL, UNBOUNDED,
                      LpProblem, LpSolution)

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIV_TOL = 1e-9
REFACTOR = 64
STALL = 60

_BASIC, _AT_LB, _AT_UB, _FREE = 0, 1, 2, 3


class _Basis:
    """LU of the basis matrix plus a list of eta columns."""

    def __init__(self, A: sp.csc_matrix, head: np.ndarray):
        B = A[:, head].tocsc()
        self.lu = splu(B, permc_spec="COLAMD", options={"SymmetricMode": False})
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, a: np.ndarray) -> np.ndarray:
        v = self.lu.solve(a)
        for r, eta in self.etas:
            vr = v[r]
            if vr != 0.0:
                v += eta * vr
                v[r] = eta[r] * vr
        return v

    def btran(self, c: np.ndarray) -> np.ndarray:
        u = c.copy()
        for r, eta in reversed(self.etas):
            u[r] = eta @ u
        return self.lu.solve(u, trans="T")

    def push(self, r: int, w: np.ndarray) -> None:
        eta = -w / w[r]
        eta[r] = 1.0 / w[r]
        self.etas.append((r, eta))


class _Simplex:
    def __init__(self, p: LpProblem, max_iter: int | None):
        self.n = n = p.n_vars
        self.m = m = p.n_rows
        self.max_iter = max_iter if max_iter is not None else 50 * (m + n)
        self.iters = 0

        x = np.where(np.isfinite(p.lb), p.lb, np.where(np.isfinite(p.ub), p.ub, 0.0))
        state = np.where(np.isfinite(p.lb), _AT_LB, np.where(np.isfinite(p.ub), _AT_UB, _FREE))
        resid = p.b - p.A @ x

        slack_ub = np.where(p.sense == EQ, 0.0, np.inf)
        slack_basic = (p.sense != EQ) & (resid >= -FEAS_TOL)
        art_rows = np.flatnonzero(~slack_basic)
        art_sign = np.where(resid[art_rows] >= 0, 1.0, -1.0)
        k = art_rows.size

        self.A = sp.hstack([
            p.A.tocsc(),
            sp.identity(m, format="csc"),
            sp.csc_matrix((art_sign, (art_rows, np.arange(k))), shape=(m, k)),
        ]).tocsc()
        self.AT = self.A.T.tocsr()
        self.b = p.b
        self.lb = np.concatenate([p.lb, np.zeros(m), np.zeros(k)])
        self.ub = np.concatenate([p.ub, slack_ub, np.full(k, np.inf)])
        self.N = n + m + k
        self.art = np.arange(n + m, self.N)

        self.x = np.concatenate([x, np.zeros(m), np.zeros(k)])
        self.state = np.concatenate([state, np.full(m, _AT_LB), np.full(k, _AT_LB)])
        head = np.empty(m, dtype=np.int64)
        head[slack_basic] = n + np.flatnonzero(slack_basic)
        head[art_rows] = n + m + np.arange(k)
        self.head = head
        self.state[head] = _BASIC
        self.x[n + np.flatnonzero(slack_basic)] = resid[slack_basic]
        self.x[n + m + np.arange(k)] = np.abs(resid[art_rows])
        self.factor = _Basis(self.A, self.head)

    # basis bookkeeping
    def refactor(self) -> None:
        self.factor = _Basis(self.A, self.head)
        nonbasic = self.state != _BASIC
        rhs = self.b - self.A[:, nonbasic] @ self.x[nonbasic]
        self.x[self.head] = self.factor.ftran(rhs)

    def pivot(self, q: int, r: int, w: np.ndarray) -> None:
        self.head[r] = q
        self.state[q] = _BASIC
        self.factor.push(r, w)
        if len(self.factor.etas) >= REFACTOR:
            self.refactor()

    # one phase
    def run(self, cost: np.ndarray) -> str:
        bland = False
        stall = 0
        best = np.inf
        while True:
            if self.iters >= self.max_iter:
                return ITERATION_LIMIT
            y = self.factor.btran(cost[self.head])
            d = cost - self.AT @ y
            st = self.state
            movable = self.ub > self.lb
            cand = (((st == _AT_LB) & (d < -OPT_TOL) & movable)
                    | ((st == _AT_UB) & (d > OPT_TOL) & movable)
                    | ((st == _FREE) & (np.abs(d) > OPT_TOL)))
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                self.y, self.d = y, d
                return OPTIMAL
            q = int(idx[0]) if bland else int(idx[np.argmax(np.abs(d[idx]))])
            direction = 1.0 if d[q] < 0 else -1.0

            a_q = self.A[:, q].toarray().ravel()
            w = self.factor.ftran(a_q)
            r, t, to_upper = self.ratio_test(q, w, direction, bland)
            if r == -2:
                return UNBOUNDED
            self.iters += 1

            self.x[q] += direction * t
            self.x[self.head] -= direction * t * w
            if r == -1:
                self.state[q] = _AT_UB if direction > 0 else _AT_LB
                self.x[q] = self.ub[q] if direction > 0 else self.lb[q]
            else:
                p = self.head[r]
                if to_upper:
                    self.state[p] = _AT_UB
                    self.x[p] = self.ub[p]
                else:
                    self.state[p] = _AT_LB
                    self.x[p] = self.lb[p]
                self.pivot(q, r, w)

            obj = float(cost @ self.x)
            if obj < best - 1e-12 * max(1.0, abs(best) if np.isfinite(best) else 1.0):
                best = obj
                stall = 0
                bland = False
            else:
                stall += 1
                if stall > STALL:
                    bland = True

    def ratio_test(self, q: int, w: np.ndarray, direction: float, bland: bool):
        """Return (row, step, leaving_to_upper); row -1 is a bound flip, -2 unbounded."""
        span = self.ub[q] - self.lb[q]
        rate = -direction * w
        xb = self.x[self.head]
        lb = self.lb[self.head]
        ub = self.ub[self.head]
        dec = (rate < -PIV_TOL) & np.isfinite(lb)
        inc = (rate > PIV_TOL) & np.isfinite(ub)
        rows = np.flatnonzero(dec | inc)
        if rows.size == 0:
            if np.isfinite(span):
                return -1, span, False
            return -2, 0.0, False
        rr = rate[rows]
        gap = np.where(rr < 0, xb[rows] - lb[rows], ub[rows] - xb[rows])
        gap = np.maximum(gap, 0.0)
        exact = gap / np.abs(rr)
        if bland:
            tmin = exact.min()
            if np.isfinite(span) and span <= tmin:
                return -1, span, False
            tie = rows[exact <= tmin + 1e-12]
            heads = self.head[tie]
            r = int(tie[np.argmin(heads)])
        else:
            relaxed = (gap + FEAS_TOL) / np.abs(rr)
            tmax = relaxed.min()
            if np.isfinite(span) and span <= tmax:
                return -1, span, False
            ok = exact <= tmax
            sub = np.flatnonzero(ok)
            r_local = sub[np.argmax(np.abs(rr[sub]))]
            r = int(rows[r_local])
        t = max((xb[r] - lb[r]) / -rate[r] if rate[r] < 0 else (ub[r] - xb[r]) / rate[r], 0.0)
        return r, t, rate[r] > 0

    def drive_out_artificials(self) -> None:
        """Pivot zero-valued basic artificials out where a structural column allows."""
        art_set = np.zeros(self.N, dtype=bool)
        art_set[self.art] = True
        for r in range(self.m):
            if not art_set[self.head[r]]:
                continue
            e = np.zeros(self.m)
            e[r] = 1.0
            rho = self.factor.btran(e)
            alpha = self.AT @ rho
            alpha[art_set] = 0.0
            alpha[self.state == _BASIC] = 0.0
            j = int(np.argmax(np.abs(alpha)))
            if abs(alpha[j]) <= 1e-7:
                continue
            w = self.factor.ftran(self.A[:, j].toarray().ravel())
            p = self.head[r]
            self.state[p] = _AT_LB
            self.x[p] = 0.0
            self.pivot(j, r, w)
        self.refactor()


def lp_solve(problem: LpProblem, max_iter: int | None = None) -> LpSolution:
    """Solve an LpProblem with the bundled bounded revised simplex.

    Parameters
    ----------
    problem : LpProblem
    max_iter : int, optional
        Pivot cap over both phases; defaults to ``50 * (rows + cols)``.

    Returns
    -------
    LpSolution
        ``duals`` satisfy ``c - A.T @ duals = reduced_costs`` at optimality.
    """
    n, m = problem.n_vars, problem.n_rows
    if np.any(problem.lb > problem.ub + FEAS_TOL):
        return LpSolution(INFEASIBLE, iterations=0)
    if m == 0:
        c = problem.c
        x = np.where(c > 0, problem.lb, np.where(c < 0, problem.ub, np.where(np.isfinite(problem.lb), problem.lb, np.where(np.isfinite(problem.ub), problem.ub, 0.0))))
        if not np.all(np.isfinite(x)):
            return LpSolution(UNBOUNDED)
        return LpSolution(OPTIMAL, x=x, objective=problem.objective(x), duals=np.zeros(0),
                          reduced_costs=c.copy(), iterations=0)

    s = _Simplex(problem, max_iter)
    if s.art.size:
        cost1 = np.zeros(s.N)
        cost1[s.art] = 1.0
        status = s.run(cost1)
        if status != OPTIMAL:
            return LpSolution(status, iterations=s.iters)
        s.refactor()
        infeas = float(s.x[s.art].sum())
        if infeas > 1e-7 * (1.0 + float(np.abs(problem.b).max(initial=0.0))):
            return LpSolution(INFEASIBLE, iterations=s.iters, info={"phase1": infeas})
        s.ub[s.art] = 0.0
        nb_art = s.art[s.state[s.art] != _BASIC]
        s.x[nb_art] = 0.0
        s.drive_out_artificials()

    cost2 = np.zeros(s.N)
    cost2[:n] = problem.c
    status = s.run(cost2)
    if status != OPTIMAL:
        return LpSolution(status, iterations=s.iters)
    s.refactor()
    y = s.factor.btran(cost2[s.head])
    d = cost2 - s.AT @ y
    x = np.clip(s.x[:n], problem.lb, problem.ub)
    return LpSolution(
        OPTIMAL, x=x, objective=problem.objective(x), duals=y,
        reduced_costs=d[:n], iterations=s.iters,
        info={"primal_residual": float(problem.row_violation(x).max(initial=0.0))},
    )
