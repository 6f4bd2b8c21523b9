"""Independent reference computations used by the tests.

Nothing here calls the solver code; each oracle recomputes its answer
from first principles (enumeration, sampling or closed forms).
"""
from __future__ import annotations

from itertools import combinations, product
from math import comb

import numpy as np
import scipy.sparse as sp


def central_difference(f, x, step=1e-6):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = step
        g[j] = (f(x + e) - f(x - e)) / (2 * step)
    return g


def random_lp(rng, n_max=8, m_max=12, eq_prob=0.2, max_bases=60_000):
    """Small bounded LP as dense arrays (c, A, b, is_eq, lb, ub).

    Sizes are drawn up to (n_max, m_max); pairs whose vertex enumeration
    would need more than ``max_bases`` candidate bases are redrawn so the
    oracle stays fast.
    """
    while True:
        n = int(rng.integers(1, n_max + 1))
        m = int(rng.integers(0, m_max + 1))
        if comb(m + 2 * n, n) <= max_bases:
            break
    c = rng.normal(size=n).round(3)
    A = rng.normal(size=(m, n)).round(3)
    A[rng.random((m, n)) < 0.3] = 0.0
    lb = -rng.integers(0, 4, size=n).astype(float)
    ub = lb + rng.integers(1, 5, size=n)
    x0 = lb + rng.random(n) * (ub - lb)
    is_eq = rng.random(m) < eq_prob
    # rhs built around an interior point so most instances are feasible
    b = A @ x0 + np.where(is_eq, 0.0, rng.random(m) * 2.0)
    if m and rng.random() < 0.15:
        b[0] = A[0] @ x0 - np.abs(A[0]) @ (ub - lb) - 1.0   # row 0 unreachable on the box
        is_eq[0] = False
    return c, A, b, is_eq, lb, ub


def vertex_enumeration(c, A, b, is_eq, lb, ub, tol=1e-9):
    """Exact LP optimum by enumerating every basic solution.

    Constraints are the rows plus both bound families; every choice of n
    linearly independent active constraints (always including the
    equalities) gives a candidate vertex. Returns (objective, x), or
    (None, None) when infeasible. The box is finite so the optimum is
    attained at a vertex.
    """
    n = c.size
    m = A.shape[0]
    G = np.vstack([A.reshape(m, n), np.eye(n), -np.eye(n)])
    h = np.concatenate([b, ub, -lb])
    eq_all = np.flatnonzero(is_eq)
    # keep a linearly independent subset of the equalities in every basis;
    # the dependent ones are still enforced by the feasibility check
    eq = []
    for i in eq_all:
        if np.linalg.matrix_rank(G[eq + [i]], tol=1e-10) == len(eq) + 1:
            eq.append(i)
    eq = np.asarray(eq, dtype=np.int64)
    others = np.setdiff1d(np.arange(G.shape[0]), eq)
    k = n - eq.size
    sets = np.array(list(combinations(others, k)), dtype=np.int64) if k else np.zeros((1, 0), dtype=np.int64)
    sets = np.hstack([np.broadcast_to(eq, (sets.shape[0], eq.size)), sets])
    best, arg = None, None
    for chunk in np.array_split(sets, max(1, sets.shape[0] // 20000)):
        M = G[chunk]
        good = np.abs(np.linalg.det(M)) > 1e-10
        if not good.any():
            continue
        x = np.linalg.solve(M[good], h[chunk[good]][..., None])[..., 0]
        r = x @ G.T - h
        scale = tol * (1 + np.abs(h))
        feas = np.all(r <= scale, axis=1)
        if eq_all.size:
            feas &= np.all(np.abs(r[:, eq_all]) <= scale[eq_all], axis=1)
        if not feas.any():
            continue
        vals = x[feas] @ c
        j = int(np.argmin(vals))
        if best is None or vals[j] < best - 1e-12:
            best, arg = float(vals[j]), x[feas][j]
    return best, arg


def milp_enumeration(c, A, b, is_eq, lb, ub, binaries):
    """Exact MILP optimum: vertex enumeration for every binary assignment."""
    best, arg = None, None
    for bits in product((0.0, 1.0), repeat=len(binaries)):
        lo, hi = lb.copy(), ub.copy()
        lo[binaries] = bits
        hi[binaries] = bits
        v, x = _fixed_lp(c, A, b, is_eq, lo, hi)
        if v is not None and (best is None or v < best - 1e-12):
            best, arg = v, x
    return best, arg


def _fixed_lp(c, A, b, is_eq, lo, hi):
    fixed = lo == hi
    free = ~fixed
    rhs = b - A[:, fixed] @ lo[fixed]
    if not free.any():
        r = -rhs
        ok = np.all(np.where(is_eq, np.abs(r) <= 1e-9, r <= 1e-9))
        return (float(c @ lo), lo.copy()) if ok else (None, None)
    v, xf = vertex_enumeration(c[free], A[:, free], rhs, is_eq, lo[free], hi[free])
    if v is None:
        return None, None
    x = lo.copy()
    x[free] = xf
    return float(c @ x), x


def to_csr(A, n):
    return sp.csr_matrix(A.reshape(-1, n))


# nano grid oracle

def nano_grid_search(inst, n_grid=200, z_values=(0.0, 1.0)):
    """Brute-force search over the nano instance (one pipeline, one compressor,
    two buses, two periods).

    The free axes are the two pipeline end pressures in each period and the
    compressor mode z per period. Everything else follows exactly: the
    Weymouth relation fixes the average flow, linepack fixes the in/out
    split, nodal balances fix the supply and the gas-fired output, and the
    two-bus power flow fixes the angle (the smaller root) and the other
    generator. The suction pressure only has to exist inside the ratio
    window, so it is checked rather than gridded. Every returned point
    satisfies all constraints exactly, so the best value is an upper bound
    on the global optimum.

    Returns dict(best, argbest, feasible_count).
    """
    el, gs = inst.electricity, inst.gas
    assert inst.H == 2 and len(gs.pipelines) == 1 and len(gs.nonpipes) == 1
    pipe, comp = gs.pipelines[0], gs.nonpipes[0]
    sup = gs.supplies[0]
    br = el.branches[0]
    g_np, g_gpg = [g for g in el.generators if not g.gpg][0], [g for g in el.generators if g.gpg][0]
    u, dt = inst.units, inst.dt
    k = u.flow * gs.constants.HHV * g_gpg.efficiency / u.power
    nm, nn = gs.nodes[pipe.f_node], gs.nodes[pipe.t_node]
    nc = gs.nodes[comp.f_node]
    # node roles on nano: supply -> compressor -> pipe -> GPG demand node
    assert comp.t_node == pipe.f_node and sup.node == comp.f_node and g_gpg.gas_node == pipe.t_node
    assert br.f_bus == g_np.bus and br.t_bus == g_gpg.bus

    pm = np.linspace(nm.p_min, nm.p_max, n_grid)
    pn = np.linspace(nn.p_min, nn.p_max, n_grid)
    PM, PN = [a.ravel() for a in np.meshgrid(pm, pn, indexing="ij")]
    d = PM ** 2 - PN ** 2
    phi = np.sign(d) * np.sqrt(pipe.Phi * np.abs(d))
    pavg = (2.0 / 3.0) * (PM + PN - PM * PN / (PM + PN))
    lp = pipe.Psi * pavg
    ok0 = np.abs(phi) <= pipe.flow_max
    # suction pressure window for each compressor mode
    lo_b = np.maximum(nc.p_min, PM / comp.ratio_max)
    hi_b = np.minimum(nc.p_max, PM / comp.ratio_min)
    boost_ok = lo_b <= hi_b + 1e-12
    bypass_ok = (PM >= nc.p_min) & (PM <= nc.p_max)

    bus_d = {i: b.demand + b.gsh for i, b in enumerate(el.buses)}
    cost_np = lambda p: dt * (g_np.c2 * (u.power * p) ** 2 * dt + g_np.c1 * u.power * p + g_np.c0)
    cost_g = lambda p: dt * (g_gpg.c2 * (u.power * p) ** 2 * dt + g_gpg.c1 * u.power * p + g_gpg.c0)

    def period(t, lp_prev, lp_t, phi_t, z):
        dl = (lp_t - lp_prev) / dt
        fin = phi_t + 0.5 * dl
        fout = phi_t - 0.5 * dl
        ok = (np.abs(fin) <= pipe.flow_max) & (np.abs(fout) <= pipe.flow_max)
        gas_gen = fout - nn.demand[t]
        f_np = fin + nm.demand[t]           # compressor discharge balances the pipe inlet
        if z == 1.0:
            ok &= (f_np >= 0) & (f_np <= comp.flow_max)
            supply = nc.demand[t] + f_np * (1.0 + comp.fuel)
        else:
            ok &= (f_np <= 0) & (f_np >= -comp.flow_max)
            supply = nc.demand[t] + f_np
        ok &= (supply >= sup.flow_min - 1e-12) & (supply <= sup.flow_max + 1e-12)
        p2 = k * gas_gen
        ok &= (p2 >= g_gpg.p_min - 1e-12) & (p2 <= g_gpg.p_max + 1e-12)
        # p_to = 0.5 g_ji th^2 - b_ji th with th = theta_from - theta_to
        p_to = p2 - bus_d[br.t_bus][t]
        a, bq = 0.5 * br.g_ji, -br.b_ji
        disc = bq ** 2 + 4 * a * p_to
        ok &= disc >= 0
        sq = np.sqrt(np.maximum(disc, 0.0))
        th = (-bq - sq) / (2 * a) if a > 0 else -p_to / bq
        # pick the root closest to zero (the other is far outside any angle limit)
        th2 = (-bq + sq) / (2 * a) if a > 0 else th
        th = np.where(np.abs(th2) < np.abs(th), th2, th)
        ok &= (th >= br.angle_min) & (th <= br.angle_max)
        p_from = 0.5 * br.g_ij * th ** 2 + br.b_ij * th
        ok &= (np.abs(p_from) <= br.rate) & (np.abs(p_to) <= br.rate)
        p1 = bus_d[br.f_bus][t] + p_from
        ok &= (p1 >= g_np.p_min - 1e-12) & (p1 <= g_np.p_max + 1e-12)
        cost = cost_np(p1) + cost_g(p2) + sup.cost * u.flow * inst.dtau * supply
        return ok, cost, p1, p2

    def ramp_ok(p_prev, p_now, g):
        return (p_now - p_prev <= g.ramp_up * dt + 1e-12) & (p_prev - p_now <= g.ramp_down * dt + 1e-12)

    best, arg, count = np.inf, None, 0
    final_min = -np.inf if inst.final_linepack_fraction is None else inst.final_linepack_fraction * pipe.linepack_initial
    for z0 in z_values:
        mode0 = boost_ok if z0 == 1.0 else bypass_ok
        ok_a, cost_a, p1a, p2a = period(0, pipe.linepack_initial, lp, phi, z0)
        ok_a &= ok0 & mode0 & ramp_ok(g_np.p_initial, p1a, g_np) & ramp_ok(g_gpg.p_initial, p2a, g_gpg)
        ia = np.nonzero(ok_a)[0]
        for z1 in z_values:
            mode1 = boost_ok if z1 == 1.0 else bypass_ok
            cand_b = np.nonzero(ok0 & mode1 & (lp >= final_min - 1e-12))[0]
            if ia.size == 0 or cand_b.size == 0:
                continue
            for chunk in np.array_split(ia, max(1, ia.size // 256)):
                okb, cb, p1b, p2b = period(1, lp[chunk][:, None], lp[cand_b][None, :], phi[cand_b][None, :], z1)
                okb &= ramp_ok(p1a[chunk][:, None], p1b, g_np) & ramp_ok(p2a[chunk][:, None], p2b, g_gpg)
                total = np.where(okb, cost_a[chunk][:, None] + cb, np.inf)
                count += int(okb.sum())
                j = np.unravel_index(np.argmin(total), total.shape)
                if total[j] < best:
                    best = float(total[j])
                    arg = {"z": (z0, z1), "pm": (PM[chunk[j[0]]], PM[cand_b[j[1]]]),
                           "pn": (PN[chunk[j[0]]], PN[cand_b[j[1]]])}
    return {"best": best, "argbest": arg, "feasible_count": count}
