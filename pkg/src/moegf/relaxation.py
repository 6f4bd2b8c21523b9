"""Polyhedral relaxation (warm start) and a cutting-plane MICP lower bound.

Both LPs start from :func:`base_builder`: the model's linear rows and
bounds plus a tangent epigraph of the quadratic generator costs. The
polyhedral relaxation then replaces each nonlinear equality by envelope
rows over lifted variables:

* ``p_ij = 0.5 g v + b theta`` with ``(theta, v)`` in the x^2 envelope,
* ``u = Phi (v_m - v_n)`` with ``(phi, u)`` in the x|x| envelope and
  ``(p, v)`` in the x^2 envelope of every node pressure,
* ``pavg = (2/3)(pm + pn + w)`` with ``(pm, pn, w)`` in the -xy/(x+y)
  envelope.

The lower bound adds per-pipeline direction binaries, the auxiliary
pressures xi/zeta and their big-M rows, and replaces the conic and convex
average-pressure constraints by outer tangent cuts generated on demand.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .envelopes import (Envelope, envelope_avg_pressure, envelope_signed_square,
                        envelope_square, neg_harmonic, neg_harmonic_grad,
                        paired_generators, pwl_cost_epigraph)
from .formulation import ProblemModel, build_moegf
from .instance import Instance, avg_pressure
from .lp.bnb import INT_TOL, bnb_solve
from .lp.problem import EQ, LE, LpBuilder, LpProblem, LpSolution
from .lp.simplex import lp_solve

DEFAULT_COST_SCALE = 1.0e3


class RelaxationInfeasible(RuntimeError):
    """The relaxation LP is infeasible, so the instance bounds are inconsistent."""


def _as_model(obj) -> ProblemModel:
    return obj if isinstance(obj, ProblemModel) else build_moegf(obj)


def add_envelope_rows(builder: LpBuilder, env, cols: np.ndarray, tag: str) -> None:
    """Add ``env`` once per row of ``cols`` (shape ``(K, n_local)``)."""
    cols = np.atleast_2d(cols)
    K, nloc = cols.shape
    k = env.n_halfspaces
    row = np.repeat(np.arange(K * k), nloc)
    col = np.broadcast_to(cols[:, None, :], (K, k, nloc)).ravel()
    val = np.broadcast_to(env.coef[None], (K, k, nloc)).ravel()
    builder.add_rows(row, col, val, np.tile(env.rhs, K), LE, tag)


def base_builder(model: ProblemModel, segments: int = 32, cost_scale: float = DEFAULT_COST_SCALE):
    """LpBuilder with the model rows and the PWL cost epigraph.

    The LP objective is dollars divided by ``cost_scale``. Returns the
    builder and a dict with the epigraph columns and the worst-case PWL
    error in dollars.
    """
    V = model.space
    inst = model.instance
    H = inst.H
    b = LpBuilder(V.lb, V.ub, model.objective.linear / cost_scale)
    b.add_matrix_rows(model.A, model.b, model.sense, model.tags)
    b.offset = model.objective.constant / cost_scale

    gens = inst.electricity.generators
    pg = V["p_gen"]
    scale_p = inst.units.power
    e_cols = np.zeros((H, len(gens)), dtype=np.int64)
    max_err = 0.0
    e_top = []
    for k, g in enumerate(gens):
        env = pwl_cost_epigraph(g.c2, g.c1, g.c0, inst.dt, g.p_min * scale_p, g.p_max * scale_p, segments)
        top = (env.meta["scale"] * max(abs(g.p_min), abs(g.p_max)) * scale_p) ** 2 / cost_scale
        e_cols[:, k] = b.add_vars(H, 0.0, top if g.c2 > 0 else 0.0)
        # env is over (p in MW, e in $); columns hold p in pu and e in $/cost_scale
        coef = env.coef * np.array([scale_p, cost_scale])
        scaled = Envelope(env.family, env.local_vars, coef, env.rhs, env.kinds, env.meta)
        add_envelope_rows(b, scaled, np.column_stack([pg[:, k], e_cols[:, k]]), "cost-epigraph")
        e_top.append(top if g.c2 > 0 else 0.0)
        max_err += H * env.meta["max_error"]
    # one delta per generator pair per period
    pairs = paired_generators(len(gens))
    d_cols = np.zeros((H, len(pairs)), dtype=np.int64)
    for n, pr in enumerate(pairs):
        d_cols[:, n] = b.add_vars(H, 0.0, sum(e_top[j] for j in pr), 1.0)
        for t in range(H):
            b.add_row([d_cols[t, n], *e_cols[t, list(pr)]], [1.0] + [-1.0] * len(pr), 0.0, EQ, "cost-pair")
    return b, {"epigraph": e_cols, "delta": d_cols, "pwl_max_error": max_err}


def add_polyhedral_envelopes(b: LpBuilder, model: ProblemModel, l: int = 10) -> dict:
    """Lift every nonlinear equality into envelope rows; returns lifted columns."""
    inst = model.instance
    V = model.space
    H = inst.H
    el, gs = inst.electricity, inst.gas
    aux = {}

    thb, pf, pt = V["theta_br"], V["p_from"], V["p_to"]
    v_th = np.zeros((H, len(el.branches)), dtype=np.int64)
    for k, br in enumerate(el.branches):
        lo, hi = br.angle_min, br.angle_max
        top = max(lo * lo, hi * hi)
        bot = 0.0 if lo <= 0 <= hi else min(lo * lo, hi * hi)
        v_th[:, k] = b.add_vars(H, bot, top)
        add_envelope_rows(b, envelope_square(lo, hi, l), np.column_stack([thb[:, k], v_th[:, k]]), "env-angle-square")
        for t in range(H):
            b.add_row([pf[t, k], v_th[t, k], thb[t, k]], [1.0, -0.5 * br.g_ij, -br.b_ij], 0.0, EQ, "env-flow-from")
            b.add_row([pt[t, k], v_th[t, k], thb[t, k]], [1.0, -0.5 * br.g_ji, br.b_ji], 0.0, EQ, "env-flow-to")
    aux["v_theta"] = v_th

    pr = V["pressure"]
    v_pr = np.zeros((H, len(gs.nodes)), dtype=np.int64)
    for m, node in enumerate(gs.nodes):
        v_pr[:, m] = b.add_vars(H, node.p_min ** 2, node.p_max ** 2)
        add_envelope_rows(b, envelope_square(node.p_min, node.p_max, l), np.column_stack([pr[:, m], v_pr[:, m]]),
                          "env-pressure-square")
    aux["v_pressure"] = v_pr

    fl, pavg = V["flow"], V["pr_avg"]
    u = np.zeros((H, len(gs.pipelines)), dtype=np.int64)
    w = np.zeros((H, len(gs.pipelines)), dtype=np.int64)
    for p, pipe in enumerate(gs.pipelines):
        fm = pipe.flow_max
        u[:, p] = b.add_vars(H, -fm * fm, fm * fm)
        add_envelope_rows(b, envelope_signed_square(-fm, fm), np.column_stack([fl[:, p], u[:, p]]), "env-flow-signed-square")
        nm, nn = gs.nodes[pipe.f_node], gs.nodes[pipe.t_node]
        w[:, p] = b.add_vars(H, neg_harmonic(nm.p_max, nn.p_max), neg_harmonic(nm.p_min, nn.p_min))
        env = envelope_avg_pressure(nm.p_min, nm.p_max, nn.p_min, nn.p_max)
        add_envelope_rows(b, env, np.column_stack([pr[:, pipe.f_node], pr[:, pipe.t_node], w[:, p]]), "env-avg-pressure")
        for t in range(H):
            b.add_row([u[t, p], v_pr[t, pipe.f_node], v_pr[t, pipe.t_node]], [1.0, -pipe.Phi, pipe.Phi], 0.0, EQ, "env-motion")
            b.add_row([pavg[t, p], pr[t, pipe.f_node], pr[t, pipe.t_node], w[t, p]],
                      [1.0, -2.0 / 3.0, -2.0 / 3.0, -2.0 / 3.0], 0.0, EQ, "env-avg-definition")
    aux["u_flow"] = u
    aux["w_avg"] = w
    return aux


@dataclass
class RelaxResult:
    status: str
    x: np.ndarray | None
    lp_objective: float          # dollars, PWL objective (lower bound)
    objective: float             # dollars, exact quadratic cost at x
    iterations: int = 0
    wall_time: float = 0.0
    info: dict = field(default_factory=dict)


def solve_polyhedral_relaxation(instance, l: int = 10, segments: int = 32,
                                cost_scale: float = DEFAULT_COST_SCALE,
                                solver: Callable[[LpProblem], LpSolution] = lp_solve) -> RelaxResult:
    """Solve the polyhedral relaxation once and return the model part of x.

    Raises
    ------
    RelaxationInfeasible
        If the LP is infeasible (physical bounds are inconsistent).
    """
    if l < 2:
        raise ValueError("l must be at least 2")
    t0 = time.perf_counter()
    model = _as_model(instance)
    b, info = base_builder(model, segments, cost_scale)
    add_polyhedral_envelopes(b, model, l)
    lp = b.build()
    sol = solver(lp)
    if not sol.ok:
        raise RelaxationInfeasible(f"polyhedral relaxation {sol.status}: physical bounds are inconsistent")
    x = sol.x[: model.space.n].copy()
    return RelaxResult(
        sol.status, x, sol.objective * cost_scale, model.objective(x), sol.iterations,
        time.perf_counter() - t0,
        {"rows": lp.n_rows, "cols": lp.n_vars, "pwl_max_error": info["pwl_max_error"], "l": l},
    )


# lower bound
@dataclass
class LowerBoundResult:
    bound: float                      # dollars, best valid bound over rounds
    status: str
    x: np.ndarray | None              # model part of the last solution
    rounds: int
    cuts: int
    residual_violation: float         # max conic / convex violation at the last solution
    history: list = field(default_factory=list)
    lp_solves: int = 0
    wall_time: float = 0.0
    annotation: str = ""


def _soc_violation(x, cols, Phi):
    xi, ze, ph = x[cols["xi"]], x[cols["zeta"]], x[cols["flow"]]
    return np.sqrt(ze ** 2 + ph ** 2 / Phi[None, :]) - xi


def _avg_violation(x, cols):
    pm, pn, pa = x[cols["pm"]], x[cols["pn"]], x[cols["pavg"]]
    return avg_pressure(pm, pn) - pa


def _electric_violation(x, cols, g, bb):
    th, p = x[cols["theta"]], x[cols["p"]]
    return 0.5 * g[None, :] * th ** 2 + bb[None, :] * th - p


class _CutPool:
    """Append-only store of cut rows over the LP columns."""

    def __init__(self):
        self.rows = []

    def add(self, cols, vals, rhs, tag):
        self.rows.append((np.asarray(cols), np.asarray(vals, dtype=float), float(rhs), tag))

    def apply(self, lp: LpProblem) -> LpProblem:
        if not self.rows:
            return lp
        b = LpBuilder.from_problem(lp)
        for cols, vals, rhs, tag in self.rows:
            b.add_row(cols, vals, rhs, LE, tag)
        return b.build()

    def __len__(self):
        return len(self.rows)


def build_micp_base(model: ProblemModel, l: int = 10, segments: int = 32,
                    cost_scale: float = DEFAULT_COST_SCALE, soc_seeds: int = 9):
    """LP part of the MICP relaxation before any separation round.

    Returns (LpProblem, binaries, columns dict).
    """
    inst = model.instance
    V = model.space
    H = inst.H
    gs, el = inst.gas, inst.electricity
    b, info = base_builder(model, segments, cost_scale)
    add_polyhedral_envelopes(b, model, l)
    P = len(gs.pipelines)
    pr, fl = V["pressure"], V["flow"]
    y = np.zeros((H, P), dtype=np.int64)
    xi = np.zeros((H, P), dtype=np.int64)
    ze = np.zeros((H, P), dtype=np.int64)
    Phi = np.array([p.Phi for p in gs.pipelines])
    for p, pipe in enumerate(gs.pipelines):
        m, n = pipe.f_node, pipe.t_node
        lm, um = gs.nodes[m].p_min, gs.nodes[m].p_max
        ln, un = gs.nodes[n].p_min, gs.nodes[n].p_max
        y[:, p] = b.add_vars(H, 0.0, 1.0)
        xi[:, p] = b.add_vars(H, min(lm, ln), max(um, un))
        ze[:, p] = b.add_vars(H, min(lm, ln), max(um, un))
        fm = pipe.flow_max
        for t in range(H):
            Y, X, Z, Pm, Pn, F = y[t, p], xi[t, p], ze[t, p], pr[t, m], pr[t, n], fl[t, p]
            # flow direction follows y
            b.add_row([F, Y], [1.0, -fm], 0.0, LE, "micp-flow-upper")
            b.add_row([F, Y], [-1.0, fm], fm, LE, "micp-flow-lower")
            # pressure drop sign follows y
            b.add_row([Pm, Pn, Y], [1.0, -1.0, -(um - ln)], 0.0, LE, "micp-drop-upper")
            b.add_row([Pm, Pn, Y], [-1.0, 1.0, -(lm - un)], -(lm - un), LE, "micp-drop-lower")
            # xi = pm and zeta = pn when y = 1; swapped when y = 0
            b.add_row([X, Pm, Y], [1.0, -1.0, (un - lm)], (un - lm), LE, "micp-xi-m-upper")
            b.add_row([X, Pm, Y], [-1.0, 1.0, -(ln - um)], -(ln - um), LE, "micp-xi-m-lower")
            b.add_row([X, Pn, Y], [1.0, -1.0, -(um - ln)], 0.0, LE, "micp-xi-n-upper")
            b.add_row([X, Pn, Y], [-1.0, 1.0, (lm - un)], 0.0, LE, "micp-xi-n-lower")
            b.add_row([Z, Pn, Y], [1.0, -1.0, (um - ln)], (um - ln), LE, "micp-zeta-n-upper")
            b.add_row([Z, Pn, Y], [-1.0, 1.0, -(lm - un)], -(lm - un), LE, "micp-zeta-n-lower")
            b.add_row([Z, Pm, Y], [1.0, -1.0, -(un - lm)], 0.0, LE, "micp-zeta-m-upper")
            b.add_row([Z, Pm, Y], [-1.0, 1.0, (ln - um)], 0.0, LE, "micp-zeta-m-lower")
            # seed the cone xi >= ||(zeta, phi/sqrt(Phi))|| with direction cuts
            for psi in np.linspace(-np.pi / 2, np.pi / 2, soc_seeds + 2)[1:-1]:
                b.add_row([Z, F, X], [np.cos(psi), np.sin(psi) / np.sqrt(pipe.Phi), -1.0], 0.0, LE, "micp-soc-seed")
    lp = b.build()
    binaries = np.concatenate([model.binaries, y.ravel()])
    cols = {
        "xi": xi, "zeta": ze, "flow": fl, "y": y, "Phi": Phi,
        "pm": pr[:, [p.f_node for p in gs.pipelines]], "pn": pr[:, [p.t_node for p in gs.pipelines]],
        "pavg": V["pr_avg"], "pwl_max_error": info["pwl_max_error"],
    }
    return lp, binaries, cols


def _separate(x, cols, model, pool: _CutPool, tol: float) -> tuple[int, float]:
    """Add violated SOC, average-pressure and electric tangent cuts at x."""
    added = 0
    Phi = cols["Phi"]
    soc = _soc_violation(x, cols, Phi)
    avg = _avg_violation(x, cols)
    V = model.space
    el = model.instance.electricity
    worst = max(float(soc.max(initial=0.0)), float(avg.max(initial=0.0)))
    H, P = soc.shape
    for t in range(H):
        for p in range(P):
            if soc[t, p] > tol:
                z0 = x[cols["zeta"][t, p]]
                f0 = x[cols["flow"][t, p]]
                h0 = np.sqrt(z0 ** 2 + f0 ** 2 / Phi[p])
                # xi >= (z0 zeta + f0 phi / Phi) / h0, the supporting plane of the cone
                pool.add([cols["zeta"][t, p], cols["flow"][t, p], cols["xi"][t, p]],
                         [z0 / h0, f0 / (Phi[p] * h0), -1.0], 0.0, "micp-soc-cut")
                added += 1
            if avg[t, p] > tol:
                x0 = x[cols["pm"][t, p]]
                y0 = x[cols["pn"][t, p]]
                f0 = neg_harmonic(x0, y0)
                fx, fy = neg_harmonic_grad(x0, y0)
                # pavg >= (2/3)(pm + pn + f0 + fx (pm - x0) + fy (pn - y0))
                pool.add([cols["pm"][t, p], cols["pn"][t, p], cols["pavg"][t, p]],
                         [(2.0 / 3.0) * (1.0 + fx), (2.0 / 3.0) * (1.0 + fy), -1.0],
                         -(2.0 / 3.0) * (f0 - fx * x0 - fy * y0), "micp-avg-cut")
                added += 1
    # electric: p >= 0.5 g theta^2 +/- b theta
    for blkname, pcol, gs_, bs_ in (("from", "p_from", [br.g_ij for br in el.branches], [br.b_ij for br in el.branches]),
                                    ("to", "p_to", [br.g_ji for br in el.branches], [-br.b_ji for br in el.branches])):
        g = np.asarray(gs_)
        bb = np.asarray(bs_)
        th_c, p_c = V["theta_br"], V[pcol]
        viol = _electric_violation(x, {"theta": th_c, "p": p_c}, g, bb)
        worst = max(worst, float(viol.max(initial=0.0)))
        for t, k in zip(*np.nonzero(viol > tol)):
            th0 = x[th_c[t, k]]
            # p >= 0.5 g (2 th0 th - th0^2) + b th
            pool.add([th_c[t, k], p_c[t, k]], [g[k] * th0 + bb[k], -1.0], 0.5 * g[k] * th0 ** 2, "micp-electric-cut")
            added += 1
    return added, worst


def micp_lower_bound(instance, max_cut_rounds: int = 20, l: int = 10, segments: int = 32,
                     cost_scale: float = DEFAULT_COST_SCALE, tol: float = 1e-6,
                     node_limit: int | None = 2000, lp_rounds: int | None = None,
                     solver: Callable[[LpProblem], LpSolution] = lp_solve,
                     milp_solver: Callable | None = None) -> LowerBoundResult:
    """Cutting-plane lower bound from the mixed-integer convex relaxation.

    Rounds first separate on the LP relaxation (binaries relaxed), which is
    cheap, then on the mixed-binary problem solved by branch-and-bound.
    Every round's optimal value is a valid bound; the best one is returned.

    Parameters
    ----------
    max_cut_rounds : int
        Rounds with integral binaries (branch-and-bound solves).
    lp_rounds : int, optional
        Separation rounds on the continuous relaxation first; defaults to
        ``max_cut_rounds``.
    node_limit : int, optional
        LP solves per branch-and-bound run; if reached the open-node bound
        is used, which is still valid.
    milp_solver : callable, optional
        ``(problem, binaries, node_limit) -> LpSolution`` replacing the
        bundled branch-and-bound, e.g. :func:`highs_milp_solve`.
    """
    t0 = time.perf_counter()
    model = _as_model(instance)
    base, binaries, cols = build_micp_base(model, l, segments, cost_scale)
    pool = _CutPool()
    history = []
    best = -np.inf
    last_x = None
    solves = 0
    worst = np.inf
    lp_rounds = max_cut_rounds if lp_rounds is None else lp_rounds
    n = model.space.n

    for r in range(lp_rounds):
        sol = solver(pool.apply(base))
        solves += 1
        if not sol.ok:
            raise RelaxationInfeasible(f"lower-bound LP {sol.status}")
        best = max(best, sol.objective * cost_scale)
        added, worst = _separate(sol.x, cols, model, pool, tol)
        history.append({"round": len(history), "mode": "lp", "bound": best, "cuts": len(pool), "violation": worst})
        last_x = sol.x
        if added == 0:
            break

    rounds = 0
    status = "optimal"
    for r in range(max_cut_rounds):
        if milp_solver is None:
            sol = bnb_solve(pool.apply(base), binaries, solver=solver, node_limit=node_limit)
        else:
            sol = milp_solver(pool.apply(base), binaries, node_limit)
        solves += sol.lp_solves
        rounds += 1
        if sol.x is None:
            if sol.status == "infeasible":
                raise RelaxationInfeasible("lower-bound MILP infeasible")
            best = max(best, sol.info.get("bound", -np.inf) * cost_scale)
            status = sol.status
            break
        bound = min(sol.objective, sol.info.get("bound", sol.objective)) * cost_scale
        best = max(best, bound)
        status = sol.status
        added, worst = _separate(sol.x, cols, model, pool, tol)
        history.append({"round": len(history), "mode": "milp", "bound": best, "cuts": len(pool),
                        "violation": worst, "lp_solves": sol.lp_solves})
        last_x = sol.x
        if added == 0:
            break

    note = "" if worst <= tol else f"residual violation {worst:.3e} after {rounds} rounds"
    return LowerBoundResult(
        best, status, None if last_x is None else last_x[:n].copy(), rounds, len(pool), max(worst, 0.0),
        history, solves, time.perf_counter() - t0, note,
    )
