"""Command-line front end.

    moegf INSTANCE --method alg2 --start warm --out results/

Every flag can also be set through an environment variable named
``MOEGF_<FLAG>`` (for example ``MOEGF_EPSILON=1e-6``); flags on the
command line win.

Exit codes: 0 success, 1 hard error, 2 validation error, 3 non-convergence.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .diagnostics import (SolveReport, compute_gaps, evaluate_feasibility, linepack_trajectory,
                          make_report, write_linepack_csv, write_trace_csv)
from .formulation import build_moegf
from .instance import InstanceError, load_instance
from .lp import highs_milp_solve, highs_solve, lp_solve
from .relaxation import RelaxationInfeasible, micp_lower_bound, solve_polyhedral_relaxation
from .slp import (CONVERGED, SlpError, SolverParams, run_algorithm1, run_algorithm2, run_phase1)

log = logging.getLogger("moegf")

EXIT_OK, EXIT_ERROR, EXIT_INVALID, EXIT_NONCONVERGED = 0, 1, 2, 3
METHODS = ("validate", "relax", "phase1", "alg1", "alg2", "lower-bound", "compare", "check")
COMPARE_ORDER = ("relax", "lower-bound", "alg1", "alg2")
ENV_PREFIX = "MOEGF_"
SOLVERS = {"simplex": lp_solve, "highs": highs_solve}


@dataclass
class RunConfig:
    instance: str
    method: str = "alg2"
    start: str = "warm"
    out: Path = Path("moegf-out")
    seed: int = 0
    solver: str = "simplex"
    segments: int = 32
    cut_rounds: int = 3       # mixed-binary separation rounds of the lower bound
    lp_rounds: int = 20       # continuous separation rounds before those
    node_limit: int = 200
    overrides: dict = field(default_factory=dict)   # SolverParams fields

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.start not in ("warm", "cold"):
            raise ValueError("start must be 'warm' or 'cold'")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        self.out = Path(self.out)

    def params(self) -> SolverParams:
        return SolverParams(segments=self.segments, **self.overrides).validate()


class _Parser(argparse.ArgumentParser):
    # usage errors go through the JSON error path like everything else
    def error(self, message):
        raise ValueError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="moegf", description="Multiperiod electricity and gas dispatch solver.")
    p.add_argument("instance", nargs="?", help="instance JSON path or bundled name (nano, pair, case_a, case_b)")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--start", choices=("warm", "cold"))
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--kf", type=int)
    p.add_argument("--segments", type=int)
    p.add_argument("--cut-rounds", type=int)
    p.add_argument("--lp-rounds", type=int)
    p.add_argument("--node-limit", type=int)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--solver", choices=tuple(SOLVERS))
    p.add_argument("--list", action="store_true", help="list bundled instances and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _env(name: str):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))


def config_from_args(argv=None) -> tuple[RunConfig | None, argparse.Namespace]:
    args = _parser().parse_args(argv)
    if args.list:
        return None, args

    def pick(attr, env, conv, default):
        v = getattr(args, attr)
        if v is not None:
            return v
        e = _env(env)
        return conv(e) if e is not None else default

    instance = args.instance or _env("instance")
    if not instance:
        raise ValueError("an instance path or bundled name is required")
    overrides = {}
    for attr, env, key, conv in (("epsilon", "epsilon", "epsilon", float), ("max_iters", "max-iters", "max_iters", int),
                                 ("kf", "kf", "kf", int)):
        v = pick(attr, env, conv, None)
        if v is not None:
            overrides[key] = v
    cfg = RunConfig(
        instance=instance,
        method=pick("method", "method", str, "alg2"),
        start=pick("start", "start", str, "warm"),
        out=pick("out", "out", str, "moegf-out"),
        seed=pick("seed", "seed", int, 0),
        solver=pick("solver", "solver", str, "simplex"),
        segments=pick("segments", "segments", int, 32),
        cut_rounds=pick("cut_rounds", "cut-rounds", int, 3),
        lp_rounds=pick("lp_rounds", "lp-rounds", int, 20),
        node_limit=pick("node_limit", "node-limit", int, 200),
        overrides=overrides,
    )
    return cfg, args


def _write_outputs(cfg: RunConfig, model, report: SolveReport, x, stem="") -> None:
    cfg.out.mkdir(parents=True, exist_ok=True)
    sfx = f"_{stem}" if stem else ""
    report.save(cfg.out / f"report{sfx}.json")
    write_trace_csv(report.trace, cfg.out / f"trace{sfx}.csv")
    if x is not None:
        write_linepack_csv(linepack_trajectory(model, x), cfg.out / f"linepack{sfx}.csv")


def _run_slp(method, model, cfg, solver):
    fn = {"phase1": run_phase1, "alg1": run_algorithm1, "alg2": run_algorithm2}[method]
    res = fn(model, cfg.params(), cfg.start, solver=solver)
    info = dict(res.info, start=cfg.start, halfspaces=res.state.n_halfspaces)
    rep = make_report(method, model, res.x, status=res.status, objective=res.objective,
                      iterations=res.iterations, lp_solves=res.lp_solves, wall_time=res.wall_time,
                      trace=res.state.trace, info=info)
    return rep, res.x


def _run_relax(model, cfg, solver):
    r = solve_polyhedral_relaxation(model, segments=cfg.segments, solver=solver)
    rep = make_report("poly-relax", model, r.x, status=r.status, objective=r.lp_objective,
                      iterations=r.iterations, lp_solves=1, wall_time=r.wall_time,
                      info=dict(r.info, exact_objective=r.objective))
    return rep, r.x


def _run_lower_bound(model, cfg, solver):
    milp = highs_milp_solve if solver is highs_solve else None
    lb = micp_lower_bound(model, max_cut_rounds=cfg.cut_rounds, lp_rounds=cfg.lp_rounds,
                          node_limit=cfg.node_limit, segments=cfg.segments, solver=solver, milp_solver=milp)
    info = {"rounds": lb.rounds, "cuts": lb.cuts, "residual_violation": lb.residual_violation,
            "annotation": lb.annotation, "history": lb.history}
    rep = make_report("micp-lb", model, lb.x, status=lb.status, objective=lb.bound, iterations=lb.rounds,
                      lp_solves=lb.lp_solves, wall_time=lb.wall_time, info=info)
    return rep, lb.x


def _compare(model, cfg, solver) -> int:
    runs = {
        "relax": lambda: _run_relax(model, cfg, solver),
        "lower-bound": lambda: _run_lower_bound(model, cfg, solver),
        "alg1": lambda: _run_slp("alg1", model, cfg, solver),
        "alg2": lambda: _run_slp("alg2", model, cfg, solver),
    }
    reps = {}
    for name in COMPARE_ORDER:
        rep, x = runs[name]()
        reps[name] = (rep, x)
    f_cvx = reps["lower-bound"][0].objective
    rows = []
    worst = EXIT_OK
    for name in COMPARE_ORDER:
        rep, x = reps[name]
        rep.ogap = compute_gaps(rep.objective, f_cvx).ogap
        _write_outputs(cfg, model, rep, x, stem=name)
        rows.append({"method": name, "cost": rep.objective, "ogap": rep.ogap, "c_max": rep.c_max,
                     "c_mean": rep.c_mean, "iterations": rep.iterations, "lp_solves": rep.lp_solves,
                     "wall_time": rep.wall_time, "status": rep.status})
        if name in ("alg1", "alg2") and rep.status != CONVERGED:
            worst = EXIT_NONCONVERGED
    (cfg.out / "compare.json").write_text(json.dumps({"instance": model.instance.name, "rows": rows}, indent=2) + "\n")
    with (cfg.out / "compare.csv").open("w") as fh:
        keys = list(rows[0])
        fh.write(",".join(keys) + "\n")
        for r in rows:
            fh.write(",".join("" if r[k] is None else str(r[k]) for k in keys) + "\n")
    for r in rows:
        og = "n/a" if r["ogap"] is None else f"{r['ogap']:.4f}"
        print(f"{r['method']:<12} cost={r['cost']:.4f} ogap={og} c_mean={r['c_mean']:.2e} "
              f"iters={r['iterations']} time={r['wall_time']:.2f}s")
    return worst


def _check(model, cfg) -> int:
    """Sampled self-checks on the instance: gradients, envelopes, convexity."""
    from .envelopes import envelope_avg_pressure, envelope_signed_square, envelope_square, neg_harmonic, neg_harmonic_hessian

    rng = np.random.default_rng(cfg.seed)
    V = model.space
    results = {}
    # residual gradients against central differences, one residual at a time
    worst = 0.0
    funcs = model.residual_functions()
    for _ in range(200):
        r = funcs[rng.integers(len(funcs))]
        x = V.lb + (0.05 + 0.9 * rng.random(V.n)) * (V.ub - V.lb)
        g = r(x)[1]
        for j, col in enumerate(r.variables):
            xp, xm = x.copy(), x.copy()
            xp[col] += 1e-6
            xm[col] -= 1e-6
            fd = (r(xp)[0] - r(xm)[0]) / 2e-6
            worst = max(worst, abs(fd - g[j]) / max(1.0, abs(g[j])))
    results["gradient_max_rel_error"] = worst
    # envelope soundness on this instance's bounds
    viol = 0.0
    inst = model.instance
    for br in inst.electricity.branches:
        env = envelope_square(br.angle_min, br.angle_max, 10)
        s = rng.uniform(br.angle_min, br.angle_max, 200)
        viol = min(viol, float(env.slack(np.column_stack([s, s * s])).min()))
    for pipe in inst.gas.pipelines:
        env = envelope_signed_square(-pipe.flow_max, pipe.flow_max)
        s = rng.uniform(-pipe.flow_max, pipe.flow_max, 200)
        viol = min(viol, float(env.slack(np.column_stack([s, s * np.abs(s)])).min()))
        nm, nn = inst.gas.nodes[pipe.f_node], inst.gas.nodes[pipe.t_node]
        env = envelope_avg_pressure(nm.p_min, nm.p_max, nn.p_min, nn.p_max)
        a = rng.uniform(nm.p_min, nm.p_max, 200)
        b = rng.uniform(nn.p_min, nn.p_max, 200)
        viol = min(viol, float(env.slack(np.column_stack([a, b, neg_harmonic(a, b)])).min()))
        eig = np.linalg.eigvalsh(neg_harmonic_hessian(a, b)).min()
        results["min_hessian_eigenvalue"] = min(results.get("min_hessian_eigenvalue", np.inf), float(eig))
    results["envelope_min_slack"] = viol
    ok = worst <= 1e-5 and viol >= -1e-9 and results.get("min_hessian_eigenvalue", 0.0) >= -1e-12
    results["ok"] = bool(ok)
    results["seed"] = cfg.seed
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "check.json").write_text(json.dumps(results, indent=2) + "\n")
    print(json.dumps(results))
    return EXIT_OK if ok else EXIT_ERROR


def run(cfg: RunConfig) -> int:
    inst = load_instance(cfg.instance)
    if cfg.method == "validate":
        model = build_moegf(inst)
        census = {"instance": inst.name, "periods": inst.H, "variables": model.space.n,
                  "linear_rows": int(model.A.shape[0]), "residuals": model.n_residuals,
                  "binaries": int(model.binaries.size), "rows_by_tag": model.census()}
        print(json.dumps(census))
        return EXIT_OK
    model = build_moegf(inst)
    solver = SOLVERS[cfg.solver]
    if cfg.method == "check":
        return _check(model, cfg)
    if cfg.method == "compare":
        return _compare(model, cfg, solver)
    if cfg.method == "relax":
        rep, x = _run_relax(model, cfg, solver)
    elif cfg.method == "lower-bound":
        rep, x = _run_lower_bound(model, cfg, solver)
        rep.info["c_max_cvx"] = evaluate_feasibility(model, x).c_max
    else:
        rep, x = _run_slp(cfg.method, model, cfg, solver)
    _write_outputs(cfg, model, rep, x)
    print(f"{rep.method}: status={rep.status} cost={rep.objective:.6f} c_max={rep.c_max:.3e} "
          f"iterations={rep.iterations} -> {cfg.out}")
    if cfg.method in ("phase1", "alg1", "alg2") and rep.status != CONVERGED:
        return EXIT_NONCONVERGED
    return EXIT_OK


def _fail(code: int, kind: str, exc: Exception, out: Path | None = None) -> int:
    err = {"error": kind, "message": str(exc), "exit_code": code}
    print(json.dumps(err), file=sys.stdout)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(json.dumps(err, indent=2) + "\n")
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    cfg = None
    try:
        cfg, args = config_from_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        if cfg is None:
            from .instance import bundled_instances
            print("\n".join(bundled_instances()))
            return EXIT_OK
        return run(cfg)
    except (InstanceError, ValueError) as exc:
        return _fail(EXIT_INVALID, type(exc).__name__, exc, cfg.out if cfg else None)
    except (SlpError, RelaxationInfeasible, RuntimeError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_ERROR, type(exc).__name__, exc, cfg.out if cfg else None)


if __name__ == "__main__":
    sys.exit(main())
