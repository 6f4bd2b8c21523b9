"""Coupled electricity and gas network data, pipe constants and JSON loading.

Everything on disk is SI (MW, m3/s, Pa, m, h). The loader converts to
per-unit at the boundary so the rest of the package never sees SI values:

* power in ``power_base`` MW (default 100 MVA),
* gas flow in ``flow_base`` m3/s (default 100),
* pressure in ``pressure_base`` Pa (default 1e6),
* linepack in ``flow_base * 3600`` m3, i.e. one hour of base flow. With this
  choice the continuity equation reads ``l_t = l_{t-1} + dt_h (in - out)``.

Costs stay in dollars; the formulation applies the unit factors.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


class InstanceError(ValueError):
    """Raised for malformed or physically inconsistent instance data."""


@dataclass(frozen=True)
class GasConstants:
    R: float = 478.42        # J/(kg K)
    rho: float = 0.735       # kg/m3 at standard conditions
    T: float = 288.15        # K
    S: float = 0.6           # specific gravity
    HHV: float = 38.07       # MJ/m3


@dataclass(frozen=True)
class Units:
    power: float = 100.0      # MW
    flow: float = 100.0       # m3/s
    pressure: float = 1.0e6   # Pa

    @property
    def linepack(self) -> float:
        """Linepack base in m3 (one hour of base flow)."""
        return self.flow * 3600.0

    def to_pu(self, value, kind: str):
        return np.asarray(value, dtype=float) / self._base(kind)

    def to_si(self, value, kind: str):
        return np.asarray(value, dtype=float) * self._base(kind)

    def _base(self, kind: str) -> float:
        try:
            return {"power": self.power, "flow": self.flow, "pressure": self.pressure,
                    "linepack": self.linepack, "none": 1.0}[kind]
        except KeyError:
            raise ValueError(f"unknown unit kind {kind!r}") from None

    def phi_to_pu(self, phi_si: float) -> float:
        """Weymouth coefficient: phi^2 [m6/s2] = Phi * p^2 [Pa2]."""
        return phi_si * self.pressure ** 2 / self.flow ** 2

    def psi_to_pu(self, psi_si: float) -> float:
        """Linepack coefficient: l [m3] = Psi * p [Pa]."""
        return psi_si * self.pressure / self.linepack


@dataclass(frozen=True)
class PipeConstants:
    f: float
    Z: float
    Phi: float   # m6 s-2 Pa-2
    Psi: float   # m3 / Pa


@dataclass(frozen=True)
class Bus:
    id: str
    gsh: float                 # pu withdrawal
    demand: np.ndarray         # pu, length H


@dataclass(frozen=True)
class Branch:
    id: str
    f_bus: int
    t_bus: int
    r: float
    x: float
    tap: float
    shift: float               # rad
    rate: float                # pu
    angle_min: float           # rad
    angle_max: float           # rad
    g_ij: float
    b_ij: float
    g_ji: float
    b_ji: float


@dataclass(frozen=True)
class Generator:
    id: str
    bus: int
    gpg: bool
    p_min: float               # pu
    p_max: float
    ramp_down: float           # pu per hour
    ramp_up: float
    c2: float                  # $/MWh^2
    c1: float                  # $/MWh
    c0: float                  # $/h
    efficiency: float = 1.0
    gas_node: int = -1
    p_initial: float = 0.0     # pu


@dataclass(frozen=True)
class GasNode:
    id: str
    p_min: float               # pu
    p_max: float
    demand: np.ndarray         # pu flow, length H


@dataclass(frozen=True)
class Pipeline:
    id: str
    f_node: int
    t_node: int
    diameter: float            # m
    length: float              # m
    flow_max: float            # pu
    linepack_initial: float    # pu
    constants: PipeConstants   # SI
    Phi: float                 # pu
    Psi: float                 # pu


@dataclass(frozen=True)
class NonPipe:
    """Compressor (``kind == "compressor"``) or pressure regulator."""

    id: str
    kind: str
    f_node: int
    t_node: int
    flow_max: float            # pu
    ratio_min: float
    ratio_max: float
    fuel: float = 0.0          # nu, compressors only


@dataclass(frozen=True)
class Supply:
    id: str
    node: int
    flow_min: float            # pu
    flow_max: float
    cost: float                # $/m3


@dataclass(frozen=True)
class ElectricityNetwork:
    buses: tuple
    branches: tuple
    generators: tuple
    reference_bus: int = 0


@dataclass(frozen=True)
class GasNetwork:
    nodes: tuple
    pipelines: tuple
    nonpipes: tuple            # compressors first, then regulators
    supplies: tuple
    constants: GasConstants = field(default_factory=GasConstants)


@dataclass(frozen=True)
class Instance:
    name: str
    electricity: ElectricityNetwork
    gas: GasNetwork
    H: int
    dt: float                  # hours
    t0: float = 0.0
    units: Units = field(default_factory=Units)
    final_linepack_fraction: float | None = None
    description: str = ""

    @property
    def dtau(self) -> float:
        return 3600.0 * self.dt

    @property
    def gpg(self) -> tuple:
        return tuple(g for g in self.electricity.generators if g.gpg)

    @property
    def compressors(self) -> tuple:
        return tuple(e for e in self.gas.nonpipes if e.kind == "compressor")

    def periods(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.H)


def friction_factor(D: float) -> float:
    return 4.0 * (20.621 * D ** (1.0 / 6.0)) ** -2


def compressibility(pm: float, pn: float, S: float, T: float) -> float:
    """Z for mean node pressures ``pm``, ``pn`` in Pa."""
    s = pm + pn
    avg = 0.0 if s == 0.0 else pm + pn - pm * pn / s
    return 1.0 / (1.0 + 49.9511 * 10.0 ** (1.785 * S) * avg / (1.5 * (1.8 * T) ** 3.825))


def compute_pipe_constants(D: float, L: float, m_bounds, n_bounds,
                           gas: GasConstants = GasConstants()) -> PipeConstants:
    """Friction, compressibility, Weymouth and linepack coefficients (SI).

    Parameters
    ----------
    D, L : float
        Diameter and length in m.
    m_bounds, n_bounds : (float, float)
        Pressure bounds in Pa of the two end nodes; Z is evaluated at the
        bound midpoints.
    """
    if not D > 0:
        raise InstanceError(f"pipe diameter must be positive, got {D}")
    if not L > 0:
        raise InstanceError(f"pipe length must be positive, got {L}")
    if min(*m_bounds, *n_bounds) <= 0:
        raise InstanceError("positive pressure lower bound required")
    f = friction_factor(D)
    pm = 0.5 * (m_bounds[0] + m_bounds[1])
    pn = 0.5 * (n_bounds[0] + n_bounds[1])
    Z = compressibility(pm, pn, gas.S, gas.T)
    Phi = math.pi ** 2 * D ** 5 / (16.0 * gas.rho ** 2 * Z * gas.R * gas.T * L * f)
    Psi = math.pi * D ** 2 * L / (4.0 * gas.rho * Z * gas.R * gas.T)
    return PipeConstants(f, Z, Phi, Psi)


def branch_coefficients(r: float, x: float, tap: float, shift: float) -> tuple:
    """(g_ij, b_ij, g_ji, b_ji) from series impedance and complex tap."""
    if r == 0.0 and x == 0.0:
        raise InstanceError("branch impedance must be nonzero")
    Y = 1.0 / complex(r, x)
    T = tap * complex(math.cos(shift), math.sin(shift))
    ij = Y.conjugate() / T
    ji = Y.conjugate() / T.conjugate()
    return ij.real, ij.imag, ji.real, ji.imag


def avg_pressure(pm, pn):
    """(2/3)(pm + pn - pm pn / (pm + pn))."""
    return (2.0 / 3.0) * (pm + pn - pm * pn / (pm + pn))


# loading
class _Reader:
    """Field access with error messages that name the offending element."""

    def __init__(self, obj: dict, where: str):
        if not isinstance(obj, dict):
            raise InstanceError(f"{where}: expected an object")
        self.obj = obj
        self.where = where

    def get(self, key, default=...):
        if key not in self.obj:
            if default is ...:
                raise InstanceError(f"missing field '{key}' in {self.where}")
            return default
        return self.obj[key]

    def num(self, key, default=...) -> float:
        v = self.get(key, default)
        if v is None:
            return v
        try:
            v = float(v)
        except (TypeError, ValueError):
            raise InstanceError(f"field '{key}' in {self.where} must be a number") from None
        if not math.isfinite(v):
            raise InstanceError(f"field '{key}' in {self.where} must be finite")
        return v

    def series(self, key, H: int, default=...) -> np.ndarray:
        v = self.get(key, default)
        arr = np.atleast_1d(np.asarray(v, dtype=float))
        if arr.size == 1:
            arr = np.full(H, float(arr[0]))
        if arr.shape != (H,):
            raise InstanceError(f"field '{key}' in {self.where} must have {H} entries")
        if not np.all(np.isfinite(arr)):
            raise InstanceError(f"field '{key}' in {self.where} must be finite")
        return arr


def _lookup(ids: dict, key, where: str, what: str) -> int:
    if key not in ids:
        raise InstanceError(f"{where} references unknown {what} '{key}'")
    return ids[key]


def _unique_ids(items, where: str) -> dict:
    ids = {}
    for k, it in enumerate(items):
        r = _Reader(it, f"{where}[{k}]")
        key = str(r.get("id"))
        if key in ids:
            raise InstanceError(f"duplicate id '{key}' in {where}")
        ids[key] = k
    return ids


def parse_instance(doc: dict) -> Instance:
    """Build a validated Instance from a decoded JSON document."""
    top = _Reader(doc, "instance")
    if top.get("schema_version") != SCHEMA_VERSION:
        raise InstanceError(f"unsupported schema_version {doc.get('schema_version')!r}; expected {SCHEMA_VERSION}")
    hz = _Reader(top.get("horizon"), "horizon")
    H = int(hz.num("periods"))
    dt = hz.num("dt_hours", 1.0)
    if H < 1:
        raise InstanceError("horizon must have at least one period")
    if dt <= 0:
        raise InstanceError("horizon dt_hours must be positive")
    base = _Reader(top.get("base", {}), "base")
    units = Units(base.num("power_mva", 100.0), base.num("flow_m3s", 100.0), base.num("pressure_pa", 1e6))
    gc = _Reader(top.get("gas_constants", {}), "gas_constants")
    gconst = GasConstants(gc.num("R", 478.42), gc.num("rho", 0.735), gc.num("T", 288.15),
                          gc.num("S", 0.6), gc.num("HHV_MJ_per_m3", 38.07))

    el = _Reader(top.get("electricity"), "electricity")
    gs = _Reader(top.get("gas"), "gas")

    # gas nodes first (GPG references them)
    raw_nodes = gs.get("nodes")
    node_ids = _unique_ids(raw_nodes, "gas.nodes")
    nodes = []
    for it in raw_nodes:
        r = _Reader(it, f"gas node '{it.get('id')}'")
        lo, hi = r.num("p_min_pa"), r.num("p_max_pa")
        if lo <= 0:
            raise InstanceError(f"gas node '{it['id']}': positive pressure lower bound required")
        if lo > hi:
            raise InstanceError(f"gas node '{it['id']}': p_min_pa exceeds p_max_pa")
        nodes.append(GasNode(str(it["id"]), float(units.to_pu(lo, "pressure")), float(units.to_pu(hi, "pressure")),
                             units.to_pu(r.series("demand_m3s", H, 0.0), "flow")))

    raw_buses = el.get("buses")
    bus_ids = _unique_ids(raw_buses, "electricity.buses")
    buses = []
    for it in raw_buses:
        r = _Reader(it, f"bus '{it.get('id')}'")
        buses.append(Bus(str(it["id"]), r.num("gsh_pu", 0.0), units.to_pu(r.series("demand_mw", H, 0.0), "power")))

    branches = []
    _unique_ids(el.get("branches"), "electricity.branches")
    for it in el.get("branches"):
        name = f"branch '{it.get('id')}'"
        r = _Reader(it, name)
        fb = _lookup(bus_ids, str(r.get("from")), name, "bus")
        tb = _lookup(bus_ids, str(r.get("to")), name, "bus")
        if fb == tb:
            raise InstanceError(f"{name} connects a bus to itself")
        amin = math.radians(r.num("angle_min_deg", -45.0))
        amax = math.radians(r.num("angle_max_deg", 45.0))
        if not amin < amax:
            raise InstanceError(f"{name}: angle_min_deg must be below angle_max_deg")
        tap = r.num("tap_ratio", 1.0)
        if tap <= 0:
            raise InstanceError(f"{name}: tap_ratio must be positive")
        shift = math.radians(r.num("shift_deg", 0.0))
        rr, xx = r.num("r_pu"), r.num("x_pu")
        try:
            gij, bij, gji, bji = branch_coefficients(rr, xx, tap, shift)
        except InstanceError as e:
            raise InstanceError(f"{name}: {e}") from None
        if gij < 0 or gji < 0:
            raise InstanceError(f"{name}: derived loss conductance must be non-negative")
        rate = r.num("rate_mw")
        if rate <= 0:
            raise InstanceError(f"{name}: rate_mw must be positive")
        branches.append(Branch(str(it["id"]), fb, tb, rr, xx, tap, shift,
                               float(units.to_pu(rate, "power")), amin, amax, gij, bij, gji, bji))

    gens = []
    _unique_ids(el.get("generators"), "electricity.generators")
    for it in el.get("generators"):
        name = f"generator '{it.get('id')}'"
        r = _Reader(it, name)
        bus = _lookup(bus_ids, str(r.get("bus")), name, "bus")
        kind = r.get("type", "non-GPG")
        if kind not in ("GPG", "non-GPG"):
            raise InstanceError(f"{name}: type must be 'GPG' or 'non-GPG'")
        pmin, pmax = r.num("p_min_mw"), r.num("p_max_mw")
        if pmin > pmax:
            raise InstanceError(f"{name}: p_min_mw exceeds p_max_mw")
        rd, ru = r.num("ramp_down_mw_per_h"), r.num("ramp_up_mw_per_h")
        if rd < 0 or ru < 0:
            raise InstanceError(f"{name}: ramp rates must be non-negative")
        c2 = r.num("c2", 0.0)
        if c2 < 0:
            raise InstanceError(f"{name}: c2 must be non-negative")
        eff, gnode = 1.0, -1
        if kind == "GPG":
            eff = r.num("efficiency")
            if not 0 < eff <= 1:
                raise InstanceError(f"{name}: GPG efficiency must lie in (0, 1]")
            gnode = _lookup(node_ids, str(r.get("gas_node")), name, "gas node")
        gens.append(Generator(
            str(it["id"]), bus, kind == "GPG",
            float(units.to_pu(pmin, "power")), float(units.to_pu(pmax, "power")),
            float(units.to_pu(rd, "power")), float(units.to_pu(ru, "power")),
            c2, r.num("c1", 0.0), r.num("c0", 0.0), eff, gnode,
            float(units.to_pu(r.num("p_initial_mw"), "power")),
        ))
    if not gens:
        raise InstanceError("electricity network has no generators")
    ref = el.get("reference_bus", raw_buses[0]["id"])
    ref = _lookup(bus_ids, str(ref), "electricity", "reference bus")

    pipes = []
    _unique_ids(gs.get("pipelines"), "gas.pipelines")
    for it in gs.get("pipelines"):
        name = f"pipeline '{it.get('id')}'"
        r = _Reader(it, name)
        fn = _lookup(node_ids, str(r.get("from")), name, "gas node")
        tn = _lookup(node_ids, str(r.get("to")), name, "gas node")
        if fn == tn:
            raise InstanceError(f"{name} connects a node to itself")
        D, L = r.num("diameter_m"), r.num("length_m")
        mb = units.to_si([nodes[fn].p_min, nodes[fn].p_max], "pressure")
        nb = units.to_si([nodes[tn].p_min, nodes[tn].p_max], "pressure")
        try:
            pc = compute_pipe_constants(D, L, mb, nb, gconst)
        except InstanceError as e:
            raise InstanceError(f"{name}: {e}") from None
        fmax = r.num("flow_max_m3s")
        if fmax <= 0:
            raise InstanceError(f"{name}: flow_max_m3s must be positive")
        Psi = units.psi_to_pu(pc.Psi)
        lp0 = float(units.to_pu(r.num("linepack_initial_m3"), "linepack"))
        lo = Psi * avg_pressure(nodes[fn].p_min, nodes[tn].p_min)
        hi = Psi * avg_pressure(nodes[fn].p_max, nodes[tn].p_max)
        if not lo - 1e-9 * hi <= lp0 <= hi * (1 + 1e-9):
            raise InstanceError(
                f"{name}: initial linepack {r.num('linepack_initial_m3'):.6g} m3 outside the range "
                f"[{units.to_si(lo, 'linepack'):.6g}, {units.to_si(hi, 'linepack'):.6g}] implied by pressure bounds")
        pipes.append(Pipeline(str(it["id"]), fn, tn, D, L, float(units.to_pu(fmax, "flow")), lp0,
                              pc, units.phi_to_pu(pc.Phi), Psi))

    nonpipes = []
    for kind, key in (("compressor", "compressors"), ("regulator", "regulators")):
        items = gs.get(key, [])
        _unique_ids(items, f"gas.{key}")
        for it in items:
            name = f"{kind} '{it.get('id')}'"
            r = _Reader(it, name)
            fn = _lookup(node_ids, str(r.get("from")), name, "gas node")
            tn = _lookup(node_ids, str(r.get("to")), name, "gas node")
            if fn == tn:
                raise InstanceError(f"{name} connects a node to itself")
            gmin, gmax = r.num("ratio_min"), r.num("ratio_max")
            if kind == "compressor":
                if not (gmin >= 1 and gmax > 1):
                    raise InstanceError(f"{name}: compressor ratio bound violated (need ratio_min >= 1 and ratio_max > 1)")
                fuel = r.num("fuel_fraction", 0.0)
                if not 0 <= fuel < 1:
                    raise InstanceError(f"{name}: fuel_fraction must lie in [0, 1)")
            else:
                if not (0 < gmin < 1 and gmax <= 1):
                    raise InstanceError(f"{name}: regulator ratio bound violated (need 0 < ratio_min < 1 and ratio_max <= 1)")
                fuel = 0.0
            if gmin > gmax:
                raise InstanceError(f"{name}: ratio_min exceeds ratio_max")
            fmax = r.num("flow_max_m3s")
            if fmax <= 0:
                raise InstanceError(f"{name}: flow_max_m3s must be positive")
            nonpipes.append(NonPipe(str(it["id"]), kind, fn, tn, float(units.to_pu(fmax, "flow")), gmin, gmax, fuel))

    supplies = []
    _unique_ids(gs.get("supplies"), "gas.supplies")
    for it in gs.get("supplies"):
        name = f"supply '{it.get('id')}'"
        r = _Reader(it, name)
        node = _lookup(node_ids, str(r.get("node")), name, "gas node")
        lo, hi = r.num("flow_min_m3s", 0.0), r.num("flow_max_m3s")
        if lo > hi:
            raise InstanceError(f"{name}: flow_min_m3s exceeds flow_max_m3s")
        supplies.append(Supply(str(it["id"]), node, float(units.to_pu(lo, "flow")),
                               float(units.to_pu(hi, "flow")), r.num("cost_per_m3")))

    opts = _Reader(top.get("options", {}), "options")
    frac = opts.get("final_linepack_fraction", None)
    if frac is not None:
        frac = float(frac)
        if not 0 <= frac <= 1.5:
            raise InstanceError("options.final_linepack_fraction must lie in [0, 1.5]")

    return Instance(
        name=str(top.get("name", "unnamed")),
        electricity=ElectricityNetwork(tuple(buses), tuple(branches), tuple(gens), ref),
        gas=GasNetwork(tuple(nodes), tuple(pipes), tuple(nonpipes), tuple(supplies), gconst),
        H=H, dt=dt, t0=hz.num("t0", 0.0), units=units,
        final_linepack_fraction=frac, description=str(top.get("description", "")),
    )


def load_instance(path, fmt: str = "json") -> Instance:
    """Load and validate an instance file.

    ``path`` may also name a bundled instance (``nano``, ``case_a``,
    ``case_b``, ``pair``).
    """
    if fmt != "json":
        raise InstanceError(f"unsupported instance format {fmt!r}")
    p = Path(path)
    if not p.exists():
        bundled = Path(__file__).parent / "data" / f"{path}.json"
        if bundled.exists():
            p = bundled
        else:
            raise InstanceError(f"instance file not found: {path}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise InstanceError(f"{p}: invalid JSON ({e})") from None
    return parse_instance(doc)


def bundled_instances() -> list[str]:
    return sorted(q.stem for q in (Path(__file__).parent / "data").glob("*.json"))
