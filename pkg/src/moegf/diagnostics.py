"""Feasibility metrics, optimality gaps, linepack series and solve reports."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .formulation import ProblemModel, ResidualDomainError, avg_value, build_moegf
from .instance import Instance

METHODS = ("poly-relax", "phase1", "alg1", "alg2", "micp-lb")


def _as_model(obj) -> ProblemModel:
    return obj if isinstance(obj, ProblemModel) else build_moegf(obj)


@dataclass
class Feasibility:
    c_max: float
    c_mean: float
    residuals: list              # one dict per residual: kind, element, period, value
    linear_violation: float      # worst violation of the linear rows and bounds
    domain_errors: list = field(default_factory=list)

    def worst(self, n: int = 5) -> list:
        ok = [r for r in self.residuals if np.isfinite(r["value"])]
        return sorted(ok, key=lambda r: -abs(r["value"]))[:n]


def evaluate_feasibility(model, x) -> Feasibility:
    """Exact nonlinear residuals |h_i(x)| and separate linear-row violation.

    Residuals outside their domain are flagged (value ``nan``, listed in
    ``domain_errors``) and left out of ``c_max`` and ``c_mean``.
    """
    model = _as_model(model)
    x = np.asarray(x, dtype=float)
    rows, errors, vals = [], [], []
    for blk in model.residuals:
        try:
            v = blk.values(x)
        except ResidualDomainError as exc:
            # only the average-pressure family has a restricted domain
            a = x[blk.var_idx]
            good = a[:, 0] + a[:, 1] > 0
            v = np.full(blk.size, np.nan)
            v[good] = avg_value(a[good, 0], a[good, 1], a[good, 2])
            errors.append(str(exc))
        vals.append(v)
        for j in range(blk.size):
            rows.append({"kind": blk.kind, "element": blk.elements[j], "period": int(blk.period[j]),
                         "value": float(v[j])})
    h = np.abs(np.concatenate(vals)) if vals else np.zeros(0)
    h = h[np.isfinite(h)]
    lin = model.row_violation(x)
    bnd = np.maximum(model.space.lb - x, x - model.space.ub)
    lin_v = float(max(lin.max(initial=0.0), bnd.max(initial=0.0), 0.0))
    return Feasibility(float(h.max(initial=0.0)), float(h.mean()) if h.size else 0.0, rows, lin_v, errors)


@dataclass(frozen=True)
class Gaps:
    ogap: float | None
    rogap: float | None


def compute_gaps(f_star: float, f_cvx: float, f_dagger: float | None = None) -> Gaps:
    """Ogap = (f* - f_cvx)/f* * 100 and ROgap = (f_dagger - f*)/f_dagger * 100.

    A zero denominator (or a missing reference) gives ``None``.
    """
    og = None if f_star == 0 else (f_star - f_cvx) / f_star * 100.0
    rg = None if f_dagger is None or f_dagger == 0 else (f_dagger - f_star) / f_dagger * 100.0
    return Gaps(og, rg)


@dataclass
class LinepackTrajectory:
    pipes: list
    m3: np.ndarray               # (H, P)
    tj: np.ndarray               # (H, P)
    continuity_residual: np.ndarray  # (H, P), m^3

    @property
    def total_m3(self) -> np.ndarray:
        return self.m3.sum(axis=1)

    @property
    def total_tj(self) -> np.ndarray:
        return self.tj.sum(axis=1)

    def rows(self):
        for t in range(self.m3.shape[0]):
            for p, pid in enumerate(self.pipes):
                yield t, pid, float(self.m3[t, p]), float(self.tj[t, p])


def linepack_energy_tj(m3, hhv_mj_per_m3: float):
    return np.asarray(m3, dtype=float) * hhv_mj_per_m3 / 1e6


def linepack_trajectory(model, x) -> LinepackTrajectory:
    """Linepack per pipeline in m^3 and TJ, with the continuity identity check."""
    model = _as_model(model)
    inst: Instance = model.instance
    V = model.space
    x = np.asarray(x, dtype=float)
    base = inst.units.linepack
    lp = x[V["linepack"]]
    fin, fout = x[V["flow_in"]], x[V["flow_out"]]
    prev = np.vstack([[p.linepack_initial for p in inst.gas.pipelines], lp[:-1]]) if lp.size else lp
    cont = (lp - prev - inst.dt * (fin - fout)) * base
    m3 = lp * base
    return LinepackTrajectory([p.id for p in inst.gas.pipelines], m3,
                              linepack_energy_tj(m3, inst.gas.constants.HHV), cont)


@dataclass
class SolveReport:
    method: str
    instance: str
    status: str
    objective: float
    c_max: float
    c_mean: float
    iterations: int
    lp_solves: int
    wall_time: float
    trace: list = field(default_factory=list)
    ogap: float | None = None
    rogap: float | None = None
    linepack: dict = field(default_factory=dict)
    z: list = field(default_factory=list)
    linear_violation: float = 0.0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")

    def to_dict(self) -> dict:
        return _plain(asdict(self))

    @classmethod
    def from_dict(cls, d: dict) -> "SolveReport":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=True, **kw)

    @classmethod
    def from_json(cls, s: str) -> "SolveReport":
        return cls.from_dict(json.loads(s))

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json() + "\n")
        return path


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def linepack_dict(traj: LinepackTrajectory) -> dict:
    return {"pipes": list(traj.pipes), "m3": traj.m3.tolist(), "TJ": traj.tj.tolist(),
            "total_m3": traj.total_m3.tolist(), "total_TJ": traj.total_tj.tolist(),
            "max_continuity_residual_m3": float(np.abs(traj.continuity_residual).max(initial=0.0))}


def make_report(method: str, model, x, *, status: str, objective: float | None = None,
                iterations: int = 0, lp_solves: int = 0, wall_time: float = 0.0,
                trace=None, f_cvx: float | None = None, f_dagger: float | None = None,
                info: dict | None = None) -> SolveReport:
    """Report for a solved point; gaps are filled when a bound is given."""
    model = _as_model(model)
    feas = evaluate_feasibility(model, x)
    obj = model.objective(x) if objective is None else float(objective)
    og = compute_gaps(obj, f_cvx, f_dagger) if f_cvx is not None else Gaps(None, None)
    return SolveReport(
        method, model.instance.name, status, float(obj), feas.c_max, feas.c_mean, int(iterations),
        int(lp_solves), float(wall_time), list(trace or []), og.ogap, og.rogap,
        linepack_dict(linepack_trajectory(model, x)), np.asarray(x)[model.space["z"]].tolist(),
        feas.linear_violation, dict(info or {}),
    )


TRACE_COLUMNS = ("k", "phase", "objective", "lp_objective", "c_max", "c_mean", "halfspaces",
                 "max_alpha", "lp_solves", "z_fractionality", "flipped")


def write_trace_csv(trace, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TRACE_COLUMNS, extrasaction="ignore")
        w.writeheader()
        for rec in trace:
            w.writerow({k: rec.get(k, "") for k in TRACE_COLUMNS})
    return path


def write_linepack_csv(traj: LinepackTrajectory, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "pipe", "m3", "TJ"])
        for t, pid, m3, tj in traj.rows():
            w.writerow([t, pid, repr(m3), repr(tj)])
    return path
