"""Sequential LP engine: Phase I, MILP Phase II and LP steering Phase II.

Each iteration linearizes every residual at the current iterate and solves
one LP (or one MILP in the branch-and-bound variant):

* electric residuals become ``p = tangent + r`` with a slack ``r >= 0``
  priced at ``sigma``; tangents from earlier iterations whose next iterate
  fell below the loss curve are kept as cuts ``p >= tangent``;
* gas residuals become plain tangent equalities, rebuilt every iteration;
* the pipe flows pay ``alpha |phi - phi_k|``, and ``alpha`` grows by
  ``gamma`` (up to ``alpha_max``) for every (pipe, period) whose motion or
  average-pressure residual stopped decreasing.

LP objective units are dollars divided by ``cost_scale``. The default
``sigma`` and ``beta`` are derived from the instance costs expressed in
those units per per-unit quantity.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .formulation import ELECTRIC, GAS_AVG, GAS_MOTION, ProblemModel, cold_start
from .lp.bnb import bnb_solve
from .lp.problem import EQ, LE, LpBuilder, LpProblem, LpSolution
from .lp.simplex import lp_solve
from .relaxation import DEFAULT_COST_SCALE, base_builder, solve_polyhedral_relaxation

CONVERGED = "converged"
NON_CONVERGENCE = "non-convergence"
INFEASIBLE_INTEGRAL = "infeasible-integral"


class SlpError(RuntimeError):
    """An LP subproblem failed although slacks should keep it feasible."""


@dataclass
class SolverParams:
    epsilon: float = 1e-4
    max_iters: int = 40
    sigma: float | None = None          # None: 0.1 * max generator cost coefficient
    alpha0: float = 0.1
    gamma: float = 10.0
    alpha_max: float = 1000.0
    beta: float | None = None           # None: max supply cost coefficient
    kf: int = 2
    k2_start: int = 0
    segments: int = 32
    cost_scale: float = DEFAULT_COST_SCALE
    phase2_max_iters: int | None = None  # None: same as max_iters
    node_limit: int | None = None

    def validate(self) -> "SolverParams":
        if not 1e-10 <= self.epsilon <= 1e-4:
            raise ValueError("epsilon must lie in [1e-10, 1e-4]")
        if self.gamma <= 1:
            raise ValueError("gamma must exceed 1")
        if not 0 < self.alpha0 < self.alpha_max:
            raise ValueError("need 0 < alpha0 < alpha_max")
        if self.sigma is not None and self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.beta is not None and self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.kf < 1:
            raise ValueError("kf must be at least 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.segments < 1 or self.cost_scale <= 0:
            raise ValueError("segments and cost_scale must be positive")
        return self

    def resolved(self, model: ProblemModel) -> "SolverParams":
        """Copy with sigma and beta filled from the instance costs."""
        inst = model.instance
        u = inst.units
        sigma, beta = self.sigma, self.beta
        if sigma is None:
            e = u.power * inst.dt
            c = [max(g.c2 * e * e, g.c1 * e) for g in inst.electricity.generators]
            sigma = 0.1 * max(c) / self.cost_scale if c and max(c) > 0 else 1.0
        if beta is None:
            c = [s.cost * u.flow * inst.dtau for s in inst.gas.supplies]
            beta = max(c) / self.cost_scale if c and max(c) > 0 else 1.0
        p2 = self.max_iters if self.phase2_max_iters is None else self.phase2_max_iters
        return replace(self, sigma=sigma, beta=beta, phase2_max_iters=p2).validate()


@dataclass
class SolverState:
    k: int
    x: np.ndarray
    alpha: np.ndarray                    # (H, P)
    registry: dict = field(default_factory=dict)   # electric residual -> stamps
    hs_res: list = field(default_factory=list)     # halfspace rows: residual index
    hs_cols: list = field(default_factory=list)
    hs_vals: list = field(default_factory=list)
    hs_rhs: list = field(default_factory=list)
    targets: np.ndarray | None = None    # (H, E) steering targets
    k2: int = 0
    trace: list = field(default_factory=list)
    status: str = "running"
    lp_solves: int = 0
    iterations: dict = field(default_factory=dict)

    @property
    def n_halfspaces(self) -> int:
        return len(self.hs_rhs)


def steering_gate(k2: int, kf: int) -> bool:
    """Flips are allowed only when ``k2 mod kf == 0``."""
    return k2 % kf == 0


def flip_targets(targets: np.ndarray, z: np.ndarray, epsilon: float) -> np.ndarray:
    """Steer each target toward the side the relaxed z leans to.

    A target of 0 whose z rose above ``epsilon`` becomes 1; a target of 1
    whose z fell below ``1 - epsilon`` becomes 0.
    """
    t = np.asarray(targets, dtype=float).copy()
    z = np.asarray(z, dtype=float)
    up = (t == 0) & (z > epsilon)
    down = (t == 1) & (z < 1.0 - epsilon)
    t[up] = 1.0
    t[down] = 0.0
    return t


def initial_targets(flow_np: np.ndarray) -> np.ndarray:
    return (np.asarray(flow_np) > 0).astype(float)


def fractionality(z: np.ndarray) -> float:
    z = np.asarray(z, dtype=float)
    return float(np.max(np.minimum(np.abs(z), np.abs(1.0 - z)), initial=0.0))


@dataclass
class SolveResult:
    method: str
    status: str
    x: np.ndarray
    objective: float
    c_max: float
    c_mean: float
    iterations: int
    lp_solves: int
    wall_time: float
    state: SolverState
    params: SolverParams
    start: str = "warm"
    info: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


class SlpEngine:
    """Owns the fixed part of the LP and assembles one subproblem per iteration."""

    def __init__(self, model: ProblemModel, params: SolverParams | None = None,
                 solver: Callable[[LpProblem], LpSolution] = lp_solve):
        self.model = model
        self.params = (params or SolverParams()).resolved(model)
        self.solver = solver
        b, _ = base_builder(model, self.params.segments, self.params.cost_scale)
        self.base = b.build()
        self.el = model.block(ELECTRIC)
        self.motion = model.block(GAS_MOTION)
        self.avg = model.block(GAS_AVG)
        V = model.space
        self.flow = V["flow"]
        self.z = V["z"]
        self.flow_np = V["flow_np"]
        self.n = V.n

    # feasibility
    def residuals(self, x):
        return self.model.residual_values(x)

    def metrics(self, x):
        h = np.abs(self.residuals(x))
        if h.size == 0:
            return 0.0, 0.0
        return float(h.max()), float(h.mean())

    def new_state(self, x1: np.ndarray) -> SolverState:
        H, P = self.flow.shape
        x = self.model.space.clip(np.asarray(x1, dtype=float))
        return SolverState(1, x, np.full((H, P), self.params.alpha0), k2=self.params.k2_start)

    # assembly
    def assemble(self, state: SolverState, targets: np.ndarray | None = None) -> LpProblem:
        p = self.params
        xk = state.x
        b = LpBuilder.from_problem(self.base)
        idx, G, rhs = self.el.tangent(xk)
        K = self.el.size
        if K:
            r = b.add_vars(K, 0.0, np.inf, p.sigma)
            rows = np.repeat(np.arange(K), 3)
            cols = np.column_stack([idx, r]).ravel()
            vals = np.column_stack([G, np.ones(K)]).ravel()
            b.add_rows(rows, cols, vals, rhs, EQ, "electric-tangent")
        if state.hs_rhs:
            H = len(state.hs_rhs)
            cols = np.asarray(state.hs_cols).ravel()
            vals = np.asarray(state.hs_vals).ravel()
            b.add_rows(np.repeat(np.arange(H), 2), cols, vals, np.asarray(state.hs_rhs), LE, "electric-halfspace")
        for blk, tag in ((self.motion, "motion-tangent"), (self.avg, "avg-pressure-tangent")):
            if blk.size == 0:
                continue
            idx, G, rhs = blk.tangent(xk)
            nv = idx.shape[1]
            b.add_rows(np.repeat(np.arange(blk.size), nv), idx.ravel(), G.ravel(), rhs, EQ, tag)
        fl = self.flow.ravel()
        if fl.size:
            b.add_abs_penalty(fl, xk[fl], state.alpha.ravel())
        if targets is not None and self.z.size:
            b.add_abs_penalty(self.z.ravel(), targets.ravel(), p.beta)
        return b.build()

    # one iteration
    def step(self, state: SolverState, phase: str, integral: bool = False, targets=None) -> np.ndarray:
        lp = self.assemble(state, targets)
        if integral:
            sol = bnb_solve(lp, self.z.ravel(), solver=self.solver, node_limit=self.params.node_limit)
            state.lp_solves += sol.lp_solves
            if sol.x is None:
                raise SlpError(f"{INFEASIBLE_INTEGRAL}: branch-and-bound found no integral point ({sol.status})")
        else:
            sol = self.solver(lp)
            state.lp_solves += 1
        if not sol.ok and sol.x is None:
            raise SlpError(f"LP subproblem {sol.status} at iteration {state.k}; bounds may be inconsistent")
        x_new = self.model.space.clip(sol.x[: self.n])
        self._update(state, x_new)
        c_max, c_mean = self.metrics(x_new)
        state.trace.append({
            "k": state.k, "phase": phase, "objective": self.model.objective(x_new),
            "lp_objective": sol.objective * self.params.cost_scale,
            "c_max": c_max, "c_mean": c_mean, "halfspaces": state.n_halfspaces,
            "max_alpha": float(state.alpha.max(initial=0.0)), "lp_solves": state.lp_solves,
            "z_fractionality": fractionality(x_new[self.z.ravel()]),
        })
        state.iterations[phase] = state.iterations.get(phase, 0) + 1
        state.x = x_new
        state.k += 1
        return x_new

    def _update(self, state: SolverState, x_new: np.ndarray) -> None:
        """Halfspace registration and penalty growth after solving at x_k."""
        p = self.params
        xk = state.x
        if self.el.size:
            h_new = self.el.values(x_new)
            idx, G, rhs = self.el.tangent(xk)
            # h = curve - p > 0 means the iterate sits below the loss curve
            for i in np.flatnonzero(h_new > 0.0):
                state.registry.setdefault(int(i), []).append(state.k)
                state.hs_res.append(int(i))
                state.hs_cols.append(idx[i].copy())
                state.hs_vals.append(G[i].copy())
                state.hs_rhs.append(float(rhs[i]))
        bump = np.zeros(state.alpha.shape, dtype=bool)
        for blk in (self.motion, self.avg):
            if blk.size == 0:
                continue
            old = np.abs(blk.values(xk))
            new = np.abs(blk.values(x_new))
            bump |= ((new >= old) & (new > p.epsilon)).reshape(state.alpha.shape)
        state.alpha[bump] = np.minimum(p.alpha_max, p.gamma * state.alpha[bump])


def warm_start(model: ProblemModel, params: SolverParams | None = None, l: int = 10,
               solver: Callable[[LpProblem], LpSolution] = lp_solve) -> np.ndarray:
    params = params or SolverParams()
    return solve_polyhedral_relaxation(model, l, params.segments, params.cost_scale, solver).x


def start_point(model: ProblemModel, start: str, params: SolverParams | None = None,
                solver: Callable[[LpProblem], LpSolution] = lp_solve) -> np.ndarray:
    if start == "warm":
        return warm_start(model, params, solver=solver)
    if start == "cold":
        return cold_start(model)
    raise ValueError(f"unknown start strategy {start!r} (use 'warm' or 'cold')")


def phase1_slp(model: ProblemModel, x1: np.ndarray, params: SolverParams | None = None,
               engine: SlpEngine | None = None, state: SolverState | None = None):
    """Phase I: SLP on the continuous relaxation (z in [0, 1]).

    Returns ``(x, state)``; ``state.status`` is ``converged`` or
    ``non-convergence``.
    """
    eng = engine or SlpEngine(model, params)
    st = state or eng.new_state(x1)
    p = eng.params
    while True:
        c_max, _ = eng.metrics(st.x)
        if c_max <= p.epsilon:
            st.status = CONVERGED
            break
        if st.iterations.get("phase1", 0) >= p.max_iters:
            st.status = NON_CONVERGENCE
            break
        eng.step(st, "phase1")
    return st.x, st


def phase2_milp(model: ProblemModel, state: SolverState, params: SolverParams | None = None,
                engine: SlpEngine | None = None):
    """Phase II of the MILP variant: branch-and-bound on z each iteration.

    Always solves at least one MILP so the returned z is integral.
    """
    eng = engine or SlpEngine(model, params)
    p = eng.params
    state.status = NON_CONVERGENCE
    for _ in range(p.phase2_max_iters):
        x = eng.step(state, "phase2-milp", integral=True)
        if eng.metrics(x)[0] <= p.epsilon:
            state.status = CONVERGED
            break
    return state.x, state


def phase2_steering(model: ProblemModel, state: SolverState, params: SolverParams | None = None,
                    engine: SlpEngine | None = None):
    """Phase II of the LP variant: steer relaxed z toward targets I.

    Targets start from the non-pipe flow signs and flip on gated passes.
    """
    eng = engine or SlpEngine(model, params)
    p = eng.params
    zc = eng.z.ravel()
    state.targets = initial_targets(state.x[eng.flow_np]).reshape(eng.z.shape)
    state.status = NON_CONVERGENCE
    best = None
    for _ in range(p.phase2_max_iters):
        x = eng.step(state, "phase2-steering", targets=state.targets)
        c_max = eng.metrics(x)[0]
        frac = fractionality(x[zc])
        state.trace[-1]["flipped"] = 0
        if c_max <= p.epsilon and frac <= p.epsilon:
            state.status = CONVERGED
            break
        if best is None or (frac, c_max) < best[0]:
            best = ((frac, c_max), x.copy())
        if steering_gate(state.k2, p.kf):
            new = flip_targets(state.targets.ravel(), x[zc], p.epsilon).reshape(state.targets.shape)
            state.trace[-1]["flipped"] = int(np.sum(new != state.targets))
            state.targets = new
        state.k2 += 1
    if state.status != CONVERGED and best is not None:
        state.x = best[1]
    return state.x, state


def _finish(method, eng: SlpEngine, st: SolverState, t0, start, info=None) -> SolveResult:
    c_max, c_mean = eng.metrics(st.x)
    return SolveResult(method, st.status, st.x, eng.model.objective(st.x), c_max, c_mean,
                       st.k - 1, st.lp_solves, time.perf_counter() - t0, st, eng.params, start, info or {})


def run_phase1(model: ProblemModel, params: SolverParams | None = None, start: str = "warm",
               x1: np.ndarray | None = None, solver=lp_solve) -> SolveResult:
    t0 = time.perf_counter()
    eng = SlpEngine(model, params, solver)
    x1 = start_point(model, start, eng.params, solver) if x1 is None else x1
    _, st = phase1_slp(model, x1, engine=eng)
    return _finish("phase1", eng, st, t0, start)


def run_algorithm1(model: ProblemModel, params: SolverParams | None = None, start: str = "warm",
                   x1: np.ndarray | None = None, solver=lp_solve) -> SolveResult:
    """Phase I followed by iterated MILPs."""
    t0 = time.perf_counter()
    eng = SlpEngine(model, params, solver)
    x1 = start_point(model, start, eng.params, solver) if x1 is None else x1
    _, st = phase1_slp(model, x1, engine=eng)
    phase1_status = st.status
    phase2_milp(model, st, engine=eng)
    return _finish("alg1", eng, st, t0, start, {"phase1_status": phase1_status})


def run_algorithm2(model: ProblemModel, params: SolverParams | None = None, start: str = "warm",
                   x1: np.ndarray | None = None, solver=lp_solve) -> SolveResult:
    """Phase I followed by LP steering of the binaries."""
    t0 = time.perf_counter()
    eng = SlpEngine(model, params, solver)
    x1 = start_point(model, start, eng.params, solver) if x1 is None else x1
    _, st = phase1_slp(model, x1, engine=eng)
    phase1_status = st.status
    phase2_steering(model, st, engine=eng)
    return _finish("alg2", eng, st, t0, start, {"phase1_status": phase1_status})
