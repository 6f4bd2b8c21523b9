"""The MOEGF model in general form: indexed variables, linear rows,
nonlinear residuals with analytic gradients, and the binary set.

All quantities are per-unit (see :mod:`moegf.instance`). Simple variable
bounds live in :class:`VariableSpace`; everything else is a row of ``A``.
Residuals follow the convention *physics minus variable*:

* electric, sending end:   h = 0.5 g theta^2 + b theta - p_ij
* electric, receiving end: h = 0.5 g theta^2 - b theta - p_ji
* gas motion:              h = phi|phi| - Phi (pm^2 - pn^2)
* average pressure:        h = (2/3)(pm + pn - pm pn/(pm + pn)) - pavg
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .instance import Instance, avg_pressure
from .lp.problem import EQ, LE

ELECTRIC = "electric"
GAS_MOTION = "gas-motion"
GAS_AVG = "gas-avg-pressure"

# blocks of VariableSpace, in storage order
BLOCKS = (
    "p_gen", "p_from", "p_to", "theta", "theta_br",
    "pressure", "pr_avg", "flow", "linepack", "flow_in", "flow_out",
    "z", "gas_gen", "supply", "flow_np", "fuel", "flow_plus", "flow_minus",
)


class ResidualDomainError(ValueError):
    """A residual was evaluated outside its domain."""


@dataclass(frozen=True)
class VariableSpace:
    """Dense index of all decision variables over all periods.

    ``blocks[name]`` is an ``(H, count)`` integer array of global indices.
    """

    n: int
    lb: np.ndarray
    ub: np.ndarray
    blocks: dict
    labels: tuple = ()

    def __getitem__(self, name: str) -> np.ndarray:
        return self.blocks[name]

    def label(self, j: int) -> str:
        return self.labels[j]

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lb, self.ub)


@dataclass(frozen=True)
class LinearRow:
    """``coefs @ x[indices] (<= | =) rhs``; ``slack`` marks an electric
    tangent row that carries its own non-negative slack column."""

    indices: np.ndarray
    coefs: np.ndarray
    rhs: float
    sense: int
    tag: str
    stamp: int = -1
    slack: bool = False

    def lhs(self, x: np.ndarray) -> float:
        return float(self.coefs @ x[self.indices])


# residual formulas, vectorized over arrays
def electric_value(g, b, theta, p):
    return 0.5 * g * theta ** 2 + b * theta - p


def electric_grad(g, b, theta, p):
    theta = np.asarray(theta, dtype=float)
    return np.stack([g * theta + b, -np.ones_like(theta)], axis=-1)


def motion_value(Phi, phi, pm, pn):
    return phi * np.abs(phi) - Phi * (pm ** 2 - pn ** 2)


def motion_grad(Phi, phi, pm, pn):
    return np.stack([2.0 * np.abs(phi), -2.0 * Phi * pm, 2.0 * Phi * pn * np.ones_like(phi)], axis=-1)


def avg_value(pm, pn, pavg):
    return avg_pressure(pm, pn) - pavg


def avg_grad(pm, pn, pavg):
    s2 = (pm + pn) ** 2
    return np.stack([(2.0 / 3.0) * (1.0 - pn ** 2 / s2),
                     (2.0 / 3.0) * (1.0 - pm ** 2 / s2),
                     -np.ones_like(pavg)], axis=-1)


@dataclass(frozen=True)
class ResidualBlock:
    """A vectorized family of residuals of one kind.

    ``var_idx`` is ``(K, nv)`` (the local variables of each residual in
    formula order), ``params`` is ``(K, np)``; ``elements`` and ``period``
    identify the network element and time of each residual.
    """

    kind: str
    var_idx: np.ndarray
    params: np.ndarray
    elements: tuple
    period: np.ndarray
    offset: int = 0

    @property
    def size(self) -> int:
        return self.var_idx.shape[0]

    def _args(self, x):
        v = x[self.var_idx]
        return [v[:, j] for j in range(v.shape[1])]

    def values(self, x: np.ndarray) -> np.ndarray:
        a = self._args(x)
        if self.kind == ELECTRIC:
            return electric_value(self.params[:, 0], self.params[:, 1], *a)
        if self.kind == GAS_MOTION:
            return motion_value(self.params[:, 0], *a)
        bad = a[0] + a[1] <= 0
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise ResidualDomainError(
                f"average pressure of {self.elements[k]} at period {self.period[k]} needs pm + pn > 0")
        return avg_value(*a)

    def gradients(self, x: np.ndarray) -> np.ndarray:
        a = self._args(x)
        if self.kind == ELECTRIC:
            return electric_grad(self.params[:, 0], self.params[:, 1], *a)
        if self.kind == GAS_MOTION:
            return motion_grad(self.params[:, 0], *a)
        if np.any(a[0] + a[1] <= 0):
            self.values(x)
        return avg_grad(*a)

    def tangent(self, x_k: np.ndarray):
        """Coefficients and right-hand sides of ``h(x_k) + grad(x - x_k) = 0``.

        Returns ``(var_idx, coef, rhs)`` with rows ``coef @ x[var_idx] = rhs``.
        """
        h = self.values(x_k)
        G = self.gradients(x_k)
        rhs = np.einsum("kj,kj->k", G, x_k[self.var_idx]) - h
        return self.var_idx, G, rhs


@dataclass(frozen=True)
class ResidualFunction:
    """Single residual h_i with closure-style evaluation."""

    kind: str
    index: int
    variables: tuple
    params: tuple
    element: str
    period: int

    def __call__(self, x: np.ndarray):
        v = np.asarray(x, dtype=float)[list(self.variables)]
        if self.kind == ELECTRIC:
            g, b = self.params
            return float(electric_value(g, b, v[0], v[1])), electric_grad(g, b, v[0], v[1])
        if self.kind == GAS_MOTION:
            (Phi,) = self.params
            return float(motion_value(Phi, *v)), motion_grad(Phi, *v)
        if v[0] + v[1] <= 0:
            raise ResidualDomainError(f"average pressure of {self.element} at period {self.period} needs pm + pn > 0")
        return float(avg_value(*v)), avg_grad(*v)


@dataclass(frozen=True)
class Objective:
    """f0(x) = linear @ x + sum(quad_coef * x[quad_idx]^2) + constant (dollars)."""

    linear: np.ndarray
    quad_idx: np.ndarray
    quad_coef: np.ndarray
    constant: float

    def __call__(self, x: np.ndarray) -> float:
        return float(self.linear @ x + self.quad_coef @ x[self.quad_idx] ** 2 + self.constant)


@dataclass(frozen=True)
class ProblemModel:
    instance: Instance
    space: VariableSpace
    A: sp.csr_matrix
    b: np.ndarray
    sense: np.ndarray
    tags: np.ndarray
    objective: Objective
    residuals: tuple            # ResidualBlock, electric first
    binaries: np.ndarray
    gpg_factor: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_residuals(self) -> int:
        return sum(r.size for r in self.residuals)

    @property
    def n_electric(self) -> int:
        return sum(r.size for r in self.residuals if r.kind == ELECTRIC)

    def block(self, kind: str) -> ResidualBlock:
        for r in self.residuals:
            if r.kind == kind:
                return r
        raise KeyError(kind)

    def residual_values(self, x: np.ndarray) -> np.ndarray:
        if not self.residuals:
            return np.zeros(0)
        return np.concatenate([r.values(x) for r in self.residuals])

    def residual_functions(self) -> list[ResidualFunction]:
        out = []
        for blk in self.residuals:
            for k in range(blk.size):
                out.append(ResidualFunction(blk.kind, blk.offset + k, tuple(int(v) for v in blk.var_idx[k]),
                                            tuple(float(p) for p in blk.params[k]), blk.elements[k], int(blk.period[k])))
        return out

    def row_violation(self, x: np.ndarray) -> np.ndarray:
        r = self.A @ x - self.b
        return np.where(self.sense == EQ, np.abs(r), np.maximum(r, 0.0))

    def census(self) -> dict:
        tags, counts = np.unique(self.tags, return_counts=True)
        return dict(zip(tags.tolist(), counts.tolist()))


class _Rows:
    def __init__(self):
        self.r, self.c, self.v, self.b, self.s, self.t = [], [], [], [], [], []
        self.m = 0

    def add(self, cols, vals, rhs, sense, tag):
        """Add one row per entry of ``rhs``; ``cols``/``vals`` are lists of per-row arrays."""
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        k = rhs.shape[0]
        rows = np.arange(self.m, self.m + k)
        for col, val in zip(cols, vals):
            col = np.broadcast_to(np.asarray(col), (k,))
            val = np.broadcast_to(np.asarray(val, dtype=float), (k,))
            self.r.append(rows)
            self.c.append(col)
            self.v.append(val)
        self.b.append(rhs)
        self.s.append(np.full(k, sense, dtype=np.int8))
        self.t.extend([tag] * k)
        self.m += k

    def add_sparse(self, rows_local, cols, vals, rhs, sense, tag):
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        self.r.append(np.asarray(rows_local) + self.m)
        self.c.append(np.asarray(cols))
        self.v.append(np.asarray(vals, dtype=float))
        self.b.append(rhs)
        self.s.append(np.full(rhs.shape[0], sense, dtype=np.int8))
        self.t.extend([tag] * rhs.shape[0])
        self.m += rhs.shape[0]

    def matrix(self, n):
        if not self.r:
            return sp.csr_matrix((0, n)), np.zeros(0), np.zeros(0, dtype=np.int8), np.array([], dtype=object)
        A = sp.csr_matrix((np.concatenate(self.v), (np.concatenate(self.r), np.concatenate(self.c))), shape=(self.m, n))
        A.sum_duplicates()
        A.eliminate_zeros()
        return A, np.concatenate(self.b), np.concatenate(self.s), np.array(self.t, dtype=object)


def _space(inst: Instance) -> VariableSpace:
    H = inst.H
    el, gs = inst.electricity, inst.gas
    G, L, B = len(el.generators), len(el.branches), len(el.buses)
    N, P, E = len(gs.nodes), len(gs.pipelines), len(gs.nonpipes)
    comps = [e for e in gs.nonpipes if e.kind == "compressor"]
    gpg = [g for g in el.generators if g.gpg]
    S = len(gs.supplies)
    sizes = {"p_gen": G, "p_from": L, "p_to": L, "theta": B, "theta_br": L,
             "pressure": N, "pr_avg": P, "flow": P, "linepack": P, "flow_in": P, "flow_out": P,
             "z": E, "gas_gen": len(gpg), "supply": S, "flow_np": E, "fuel": len(comps),
             "flow_plus": len(comps), "flow_minus": len(comps)}
    blocks, lbs, ubs, labels = {}, [], [], []
    start = 0
    hhv = gs.constants.HHV
    k_gpg = np.array([inst.units.flow * hhv * g.efficiency / inst.units.power for g in gpg])
    ang = sum(max(abs(br.angle_min), abs(br.angle_max)) for br in el.branches)
    names = {
        "p_gen": [g.id for g in el.generators], "p_from": [b.id for b in el.branches],
        "p_to": [b.id for b in el.branches], "theta": [b.id for b in el.buses],
        "theta_br": [b.id for b in el.branches], "pressure": [n.id for n in gs.nodes],
        "z": [e.id for e in gs.nonpipes], "gas_gen": [g.id for g in gpg],
        "supply": [s.id for s in gs.supplies], "flow_np": [e.id for e in gs.nonpipes],
        "fuel": [c.id for c in comps], "flow_plus": [c.id for c in comps], "flow_minus": [c.id for c in comps],
    }
    for key in ("pr_avg", "flow", "linepack", "flow_in", "flow_out"):
        names[key] = [p.id for p in gs.pipelines]

    def bounds(name):
        if name == "p_gen":
            return [g.p_min for g in el.generators], [g.p_max for g in el.generators]
        if name in ("p_from", "p_to"):
            return [-b.rate for b in el.branches], [b.rate for b in el.branches]
        if name == "theta":
            lo = [-ang] * B
            hi = [ang] * B
            lo[el.reference_bus] = hi[el.reference_bus] = 0.0
            return lo, hi
        if name == "theta_br":
            return [b.angle_min for b in el.branches], [b.angle_max for b in el.branches]
        if name == "pressure":
            return [n.p_min for n in gs.nodes], [n.p_max for n in gs.nodes]
        if name == "pr_avg":
            return ([avg_pressure(gs.nodes[p.f_node].p_min, gs.nodes[p.t_node].p_min) for p in gs.pipelines],
                    [avg_pressure(gs.nodes[p.f_node].p_max, gs.nodes[p.t_node].p_max) for p in gs.pipelines])
        if name == "linepack":
            return ([p.Psi * avg_pressure(gs.nodes[p.f_node].p_min, gs.nodes[p.t_node].p_min) for p in gs.pipelines],
                    [p.Psi * avg_pressure(gs.nodes[p.f_node].p_max, gs.nodes[p.t_node].p_max) for p in gs.pipelines])
        if name in ("flow", "flow_in", "flow_out"):
            return [-p.flow_max for p in gs.pipelines], [p.flow_max for p in gs.pipelines]
        if name == "z":
            return [0.0] * E, [1.0] * E
        if name == "gas_gen":
            return ([g.p_min / k for g, k in zip(gpg, k_gpg)], [g.p_max / k for g, k in zip(gpg, k_gpg)])
        if name == "supply":
            return [s.flow_min for s in gs.supplies], [s.flow_max for s in gs.supplies]
        if name == "flow_np":
            return [-e.flow_max for e in gs.nonpipes], [e.flow_max for e in gs.nonpipes]
        if name == "fuel":
            return [0.0] * len(comps), [c.fuel * c.flow_max for c in comps]
        if name == "flow_plus":
            return [0.0] * len(comps), [c.flow_max for c in comps]
        if name == "flow_minus":
            return [-c.flow_max for c in comps], [0.0] * len(comps)
        raise KeyError(name)

    for name in BLOCKS:
        cnt = sizes[name]
        idx = start + np.arange(H * cnt).reshape(H, cnt)
        blocks[name] = idx
        lo, hi = bounds(name)
        lbs.append(np.tile(np.asarray(lo, dtype=float), H))
        ubs.append(np.tile(np.asarray(hi, dtype=float), H))
        for t in range(H):
            labels.extend(f"{name}[{t},{e}]" for e in names[name])
        start += H * cnt
    return VariableSpace(start, np.concatenate(lbs), np.concatenate(ubs), blocks, tuple(labels))


def build_moegf(inst: Instance) -> ProblemModel:
    """Assemble the full MOEGF model for ``inst``."""
    V = _space(inst)
    H, dt = inst.H, inst.dt
    el, gs = inst.electricity, inst.gas
    units = inst.units
    R = _Rows()
    gens, branches, buses = el.generators, el.branches, el.buses
    nodes, pipes, nps, sups = gs.nodes, gs.pipelines, gs.nonpipes, gs.supplies
    comp_pos = [k for k, e in enumerate(nps) if e.kind == "compressor"]
    gpg_pos = [k for k, g in enumerate(gens) if g.gpg]
    k_gpg = np.array([units.flow * gs.constants.HHV * gens[k].efficiency / units.power for k in gpg_pos])

    pg, pf, pt = V["p_gen"], V["p_from"], V["p_to"]
    th, thb = V["theta"], V["theta_br"]
    pr, pavg, fl, lp = V["pressure"], V["pr_avg"], V["flow"], V["linepack"]
    fin, fout, z = V["flow_in"], V["flow_out"], V["z"]
    gg, sup, fnp = V["gas_gen"], V["supply"], V["flow_np"]
    fuel, fplus, fminus = V["fuel"], V["flow_plus"], V["flow_minus"]

    for t in range(H):
        # ramp limits against the previous period (instance value at t0)
        for k, g in enumerate(gens):
            if t == 0:
                R.add([pg[t, k]], [1.0], g.ramp_up * dt + g.p_initial, LE, "ramp-up")
                R.add([pg[t, k]], [-1.0], g.ramp_down * dt - g.p_initial, LE, "ramp-down")
            else:
                R.add([pg[t, k], pg[t - 1, k]], [1.0, -1.0], g.ramp_up * dt, LE, "ramp-up")
                R.add([pg[t, k], pg[t - 1, k]], [-1.0, 1.0], g.ramp_down * dt, LE, "ramp-down")
        # angle difference
        for k, br in enumerate(branches):
            R.add([thb[t, k], th[t, br.f_bus], th[t, br.t_bus]], [1.0, -1.0, 1.0], 0.0, EQ, "angle-difference")
        # power balance per bus
        for i, bus in enumerate(buses):
            cols, vals = [], []
            for k, g in enumerate(gens):
                if g.bus == i:
                    cols.append(pg[t, k]); vals.append(1.0)
            for k, br in enumerate(branches):
                if br.f_bus == i:
                    cols.append(pf[t, k]); vals.append(-1.0)
                if br.t_bus == i:
                    cols.append(pt[t, k]); vals.append(-1.0)
            R.add(cols, vals, bus.demand[t] + bus.gsh, EQ, "power-balance")
        # GPG coupling
        for q, k in enumerate(gpg_pos):
            R.add([pg[t, k], gg[t, q]], [1.0, -k_gpg[q]], 0.0, EQ, "gpg-coupling")
        # gas nodal balance
        for m, node in enumerate(nodes):
            cols, vals = [], []
            for s, su in enumerate(sups):
                if su.node == m:
                    cols.append(sup[t, s]); vals.append(1.0)
            for p, pipe in enumerate(pipes):
                if pipe.f_node == m:
                    cols.append(fin[t, p]); vals.append(-1.0)
                if pipe.t_node == m:
                    cols.append(fout[t, p]); vals.append(1.0)
            for e, npe in enumerate(nps):
                if npe.f_node == m:
                    cols.append(fnp[t, e]); vals.append(-1.0)
                if npe.t_node == m:
                    cols.append(fnp[t, e]); vals.append(1.0)
            for q, k in enumerate(gpg_pos):
                if gens[k].gas_node == m:
                    cols.append(gg[t, q]); vals.append(-1.0)
            for c, e in enumerate(comp_pos):
                if nps[e].f_node == m:
                    cols.append(fuel[t, c]); vals.append(-1.0)
            R.add(cols, vals, node.demand[t], EQ, "gas-balance")
        # pipelines
        for p, pipe in enumerate(pipes):
            R.add([fl[t, p], fin[t, p], fout[t, p]], [1.0, -0.5, -0.5], 0.0, EQ, "average-flow")
            R.add([lp[t, p], pavg[t, p]], [1.0, -pipe.Psi], 0.0, EQ, "linepack")
            if t == 0:
                R.add([lp[t, p], fin[t, p], fout[t, p]], [1.0, -dt, dt], pipe.linepack_initial, EQ, "continuity")
            else:
                R.add([lp[t, p], lp[t - 1, p], fin[t, p], fout[t, p]], [1.0, -1.0, -dt, dt], 0.0, EQ, "continuity")
        # compressors: flow split and fuel
        for c, e in enumerate(comp_pos):
            npe = nps[e]
            R.add([fnp[t, e], fplus[t, c], fminus[t, c]], [1.0, -1.0, -1.0], 0.0, EQ, "compressor-split")
            R.add([fuel[t, c], fplus[t, c]], [1.0, -npe.fuel], 0.0, EQ, "compressor-fuel")
            R.add([fplus[t, c], z[t, e]], [1.0, -npe.flow_max], 0.0, LE, "compressor-forward")
            R.add([fminus[t, c], z[t, e]], [-1.0, npe.flow_max], npe.flow_max, LE, "compressor-reverse")
        # non-pipe direction and pressure ratio
        for e, npe in enumerate(nps):
            m, n = npe.f_node, npe.t_node
            pm_lo, pm_hi = nodes[m].p_min, nodes[m].p_max
            pn_lo, pn_hi = nodes[n].p_min, nodes[n].p_max
            R.add([fnp[t, e], z[t, e]], [1.0, -npe.flow_max], 0.0, LE, "nonpipe-flow-upper")
            R.add([fnp[t, e], z[t, e]], [-1.0, npe.flow_max], npe.flow_max, LE, "nonpipe-flow-lower")
            M1 = pn_hi - pm_lo * npe.ratio_max
            R.add([z[t, e], pr[t, n], pr[t, m]], [M1, 1.0, -npe.ratio_max], M1, LE, "ratio-upper")
            M2 = pm_hi * npe.ratio_min - pn_lo
            R.add([z[t, e], pr[t, m], pr[t, n]], [M2, npe.ratio_min, -1.0], M2, LE, "ratio-lower")
            R.add([pr[t, n], pr[t, m], z[t, e]], [1.0, -1.0, -(pn_hi - pm_lo)], 0.0, LE, "bypass-1")
            R.add([pr[t, m], pr[t, n], z[t, e]], [1.0, -1.0, -(pm_hi - pn_lo)], 0.0, LE, "bypass-2")

    if inst.final_linepack_fraction is not None and pipes:
        total0 = sum(p.linepack_initial for p in pipes)
        R.add(list(lp[H - 1]), [-1.0] * len(pipes), -inst.final_linepack_fraction * total0, LE, "final-linepack")

    A, b, sense, tags = R.matrix(V.n)

    # objective in dollars
    lin = np.zeros(V.n)
    qi, qc = [], []
    const = 0.0
    for k, g in enumerate(gens):
        scale = units.power * dt
        lin[pg[:, k]] += g.c1 * scale
        if g.c2 > 0:
            qi.extend(pg[:, k]); qc.extend([g.c2 * scale ** 2] * H)
        const += g.c0 * dt * H
    for s, su in enumerate(sups):
        lin[sup[:, s]] += su.cost * units.flow * inst.dtau
    obj = Objective(lin, np.asarray(qi, dtype=np.int64), np.asarray(qc, dtype=float), const)

    # residuals
    e_vars, e_par, e_el, e_t = [], [], [], []
    for t in range(H):
        for k, br in enumerate(branches):
            e_vars.append((thb[t, k], pf[t, k])); e_par.append((br.g_ij, br.b_ij)); e_el.append(f"{br.id}:from"); e_t.append(t)
            e_vars.append((thb[t, k], pt[t, k])); e_par.append((br.g_ji, -br.b_ji)); e_el.append(f"{br.id}:to"); e_t.append(t)
    m_vars, m_par, a_vars, g_el, g_t = [], [], [], [], []
    for t in range(H):
        for p, pipe in enumerate(pipes):
            m_vars.append((fl[t, p], pr[t, pipe.f_node], pr[t, pipe.t_node])); m_par.append((pipe.Phi,))
            a_vars.append((pr[t, pipe.f_node], pr[t, pipe.t_node], pavg[t, p]))
            g_el.append(pipe.id); g_t.append(t)

    def blk(kind, vars_, par, els, per, off, nv, npar):
        return ResidualBlock(kind, np.asarray(vars_, dtype=np.int64).reshape(len(els), nv),
                             np.asarray(par, dtype=float).reshape(len(els), npar), tuple(els),
                             np.asarray(per, dtype=np.int64), off)

    n_e = len(e_vars)
    n_g = len(m_vars)
    residuals = (
        blk(ELECTRIC, e_vars, e_par, e_el, e_t, 0, 2, 2),
        blk(GAS_MOTION, m_vars, m_par, g_el, g_t, n_e, 3, 1),
        blk(GAS_AVG, a_vars, np.zeros((n_g, 0)), g_el, g_t, n_e + n_g, 3, 0),
    )
    return ProblemModel(inst, V, A, b, sense, tags, obj, residuals, z.ravel().copy(), k_gpg)


def eval_residual(r: ResidualFunction, x: np.ndarray):
    """Value and analytic gradient (over ``r.variables``) of one residual."""
    return r(x)


def linearize_at(model: ProblemModel, x_k: np.ndarray, k: int = 0) -> list[LinearRow]:
    """First-order rows of every residual at ``x_k``.

    Electric rows are returned with ``slack=True``: the assembled LP adds a
    column ``r >= 0`` so the row reads ``h(x_k) + grad (x - x_k) + r = 0``,
    i.e. the flow may exceed the tangent of the loss curve. Gas rows are
    plain equalities.
    """
    _check_domain(model, x_k)
    rows = []
    for blk in model.residuals:
        idx, coef, rhs = blk.tangent(x_k)
        for j in range(blk.size):
            rows.append(LinearRow(idx[j].copy(), coef[j].copy(), float(rhs[j]), EQ,
                                  f"{blk.kind}:{blk.elements[j]}@{blk.period[j]}", k, blk.kind == ELECTRIC))
    return rows


def _check_domain(model: ProblemModel, x: np.ndarray) -> None:
    pr = x[model.space["pressure"]]
    if np.any(pr <= 0):
        raise ResidualDomainError("pressures must be positive; project x into the variable bounds first")


def cold_start(model: ProblemModel) -> np.ndarray:
    """Cold start: theta_br = 0.01 rad, pipe flow = 0.1 flow_max, pressures at midpoints.

    All other variables sit at the midpoint of their bounds.
    """
    V = model.space
    x = 0.5 * (V.lb + V.ub)
    x[V["theta_br"]] = 0.01
    x[V["theta"]] = 0.0
    fmax = np.array([p.flow_max for p in model.instance.gas.pipelines])
    x[V["flow"]] = 0.1 * fmax[None, :]
    return V.clip(x)


def quadratic_cost_coefficients(model: ProblemModel) -> np.ndarray:
    """Per generator, the coefficient of p_pu^2 in dollars for one period."""
    inst = model.instance
    s = inst.units.power * inst.dt
    return np.array([g.c2 * s * s for g in inst.electricity.generators])
