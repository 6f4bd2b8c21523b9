"""Regenerate the bundled instance files in src/moegf/data.

All parameter values below are invented for testing. Only the element
counts of case_a and case_b follow the published test-case shapes; the
case_b electric side uses the IEEE 14-bus branch impedances and loads.

Usage: python scripts/make_instances.py
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from moegf.instance import GasConstants, avg_pressure, compute_pipe_constants

OUT = Path(__file__).resolve().parents[1] / "src" / "moegf" / "data"
MPA = 1e6


def node(i, lo, hi, demand=0.0):
    return {"id": i, "p_min_pa": lo * MPA, "p_max_pa": hi * MPA, "demand_m3s": demand}


def pipe(i, f, t, D, L_km, fmax, nodes, fill=0.5):
    """Pipeline with initial linepack at ``fill`` of the feasible range."""
    nd = {n["id"]: n for n in nodes}
    mb = (nd[f]["p_min_pa"], nd[f]["p_max_pa"])
    nb = (nd[t]["p_min_pa"], nd[t]["p_max_pa"])
    pc = compute_pipe_constants(D, L_km * 1e3, mb, nb, GasConstants())
    lo = pc.Psi * avg_pressure(mb[0], nb[0])
    hi = pc.Psi * avg_pressure(mb[1], nb[1])
    return {"id": i, "from": f, "to": t, "diameter_m": D, "length_m": L_km * 1e3,
            "flow_max_m3s": fmax, "linepack_initial_m3": round(lo + fill * (hi - lo), 3)}


def write(name, doc):
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")
    print("wrote", OUT / f"{name}.json")


def nano():
    nodes = [node("n1", 3.0, 6.0), node("n2", 3.0, 7.0), node("n3", 3.0, 7.0, [20.0, 28.0])]
    return {
        "schema_version": 1,
        "name": "nano",
        "description": "Smallest coupled case: supply, compressor, one pipeline, one GPG. "
                       "Parameter values are invented.",
        "horizon": {"periods": 2, "dt_hours": 1.0},
        "electricity": {
            "reference_bus": "b1",
            "buses": [{"id": "b1", "demand_mw": [20.0, 20.0]},
                      {"id": "b2", "demand_mw": [80.0, 110.0]}],
            "branches": [{"id": "l1", "from": "b1", "to": "b2", "r_pu": 0.01, "x_pu": 0.1,
                          "rate_mw": 200.0}],
            "generators": [
                {"id": "g1", "bus": "b1", "type": "non-GPG", "p_min_mw": 0.0, "p_max_mw": 150.0,
                 "ramp_down_mw_per_h": 100.0, "ramp_up_mw_per_h": 100.0,
                 "c2": 0.02, "c1": 30.0, "c0": 100.0, "p_initial_mw": 50.0},
                {"id": "g2", "bus": "b2", "type": "GPG", "p_min_mw": 0.0, "p_max_mw": 120.0,
                 "ramp_down_mw_per_h": 100.0, "ramp_up_mw_per_h": 100.0,
                 "c2": 0.01, "c1": 5.0, "c0": 50.0, "efficiency": 0.45, "gas_node": "n3",
                 "p_initial_mw": 40.0},
            ],
        },
        "gas": {
            "nodes": nodes,
            "pipelines": [pipe("p1", "n2", "n3", 0.5, 30.0, 100.0, nodes)],
            "compressors": [{"id": "c1", "from": "n1", "to": "n2", "flow_max_m3s": 100.0,
                             "ratio_min": 1.0, "ratio_max": 1.5, "fuel_fraction": 0.04}],
            "regulators": [],
            "supplies": [{"id": "s1", "node": "n1", "flow_min_m3s": 5.0, "flow_max_m3s": 100.0,
                          "cost_per_m3": 0.12}],
        },
    }


def pair():
    nodes = [node("n1", 4.0, 6.0), node("n2", 3.0, 6.0, 15.0)]
    return {
        "schema_version": 1,
        "name": "pair",
        "description": "Two buses and two gas nodes joined by one branch and one pipeline.",
        "horizon": {"periods": 1, "dt_hours": 1.0},
        "electricity": {
            "buses": [{"id": "b1", "demand_mw": 10.0}, {"id": "b2", "demand_mw": 40.0}],
            "branches": [{"id": "l1", "from": "b1", "to": "b2", "r_pu": 0.02, "x_pu": 0.2,
                          "rate_mw": 100.0}],
            "generators": [
                {"id": "g1", "bus": "b1", "p_min_mw": 0.0, "p_max_mw": 80.0,
                 "ramp_down_mw_per_h": 80.0, "ramp_up_mw_per_h": 80.0,
                 "c2": 0.01, "c1": 25.0, "c0": 0.0, "p_initial_mw": 30.0},
                {"id": "g2", "bus": "b2", "type": "GPG", "p_min_mw": 0.0, "p_max_mw": 60.0,
                 "ramp_down_mw_per_h": 60.0, "ramp_up_mw_per_h": 60.0,
                 "c2": 0.0, "c1": 4.0, "c0": 0.0, "efficiency": 0.4, "gas_node": "n2",
                 "p_initial_mw": 20.0},
            ],
        },
        "gas": {
            "nodes": nodes,
            "pipelines": [pipe("p1", "n1", "n2", 0.5, 40.0, 80.0, nodes)],
            "supplies": [{"id": "s1", "node": "n1", "flow_min_m3s": 0.0, "flow_max_m3s": 80.0,
                          "cost_per_m3": 0.1}],
        },
    }


def case_a(H=4):
    t = np.arange(H)
    shape = 1.0 + 0.15 * np.sin(2 * np.pi * (t - 1) / 8.0)
    nodes = [
        node("n1", 4.0, 6.0), node("n2", 4.0, 7.5), node("n3", 3.5, 7.5),
        node("n4", 3.0, 7.0, list(np.round(18.0 * shape, 3))),
        node("n5", 3.0, 7.0, list(np.round(10.0 * shape, 3))),
        node("n6", 4.0, 6.0), node("n7", 4.0, 7.5),
    ]
    pipes = [
        pipe("p1", "n2", "n3", 0.6, 40.0, 120.0, nodes),
        pipe("p2", "n3", "n4", 0.5, 35.0, 100.0, nodes),
        pipe("p3", "n3", "n5", 0.45, 30.0, 100.0, nodes),
        pipe("p4", "n7", "n4", 0.5, 45.0, 100.0, nodes),
    ]
    load = np.round(np.outer(shape, [0.0, 60.0, 70.0, 55.0, 45.0]), 3)
    buses = [{"id": f"b{i+1}", "demand_mw": list(load[:, i])} for i in range(5)]
    br = [("l1", "b1", "b2", 0.01, 0.08), ("l2", "b2", "b3", 0.012, 0.1), ("l3", "b3", "b4", 0.01, 0.09),
          ("l4", "b4", "b5", 0.015, 0.12), ("l5", "b5", "b1", 0.01, 0.1), ("l6", "b2", "b4", 0.02, 0.15)]
    branches = [{"id": i, "from": f, "to": tt, "r_pu": r, "x_pu": x, "rate_mw": 150.0} for i, f, tt, r, x in br]
    gens = [
        {"id": "g1", "bus": "b1", "type": "non-GPG", "p_min_mw": 10.0, "p_max_mw": 120.0,
         "ramp_down_mw_per_h": 60.0, "ramp_up_mw_per_h": 60.0, "c2": 0.02, "c1": 28.0, "c0": 80.0,
         "p_initial_mw": 80.0},
        {"id": "g2", "bus": "b2", "type": "non-GPG", "p_min_mw": 0.0, "p_max_mw": 80.0,
         "ramp_down_mw_per_h": 40.0, "ramp_up_mw_per_h": 40.0, "c2": 0.03, "c1": 35.0, "c0": 60.0,
         "p_initial_mw": 40.0},
        {"id": "g3", "bus": "b3", "type": "non-GPG", "p_min_mw": 0.0, "p_max_mw": 60.0,
         "ramp_down_mw_per_h": 30.0, "ramp_up_mw_per_h": 30.0, "c2": 0.05, "c1": 45.0, "c0": 40.0,
         "p_initial_mw": 20.0},
        {"id": "g4", "bus": "b4", "type": "GPG", "p_min_mw": 0.0, "p_max_mw": 90.0,
         "ramp_down_mw_per_h": 60.0, "ramp_up_mw_per_h": 60.0, "c2": 0.01, "c1": 4.0, "c0": 30.0,
         "efficiency": 0.45, "gas_node": "n4", "p_initial_mw": 50.0},
        {"id": "g5", "bus": "b5", "type": "GPG", "p_min_mw": 0.0, "p_max_mw": 70.0,
         "ramp_down_mw_per_h": 50.0, "ramp_up_mw_per_h": 50.0, "c2": 0.015, "c1": 5.0, "c0": 30.0,
         "efficiency": 0.38, "gas_node": "n5", "p_initial_mw": 40.0},
    ]
    return {
        "schema_version": 1,
        "name": "case_a",
        "description": "Toy case with the element counts of published case A "
                       "(5 buses, 6 branches, 3+2 generators, 7 nodes, 4 pipelines, 2 compressors, "
                       "2 supplies). All parameter values are invented.",
        "horizon": {"periods": H, "dt_hours": 1.0},
        "options": {"final_linepack_fraction": 1.0},
        "electricity": {"reference_bus": "b1", "buses": buses, "branches": branches, "generators": gens},
        "gas": {
            "nodes": nodes,
            "pipelines": pipes,
            "compressors": [
                {"id": "c1", "from": "n1", "to": "n2", "flow_max_m3s": 120.0, "ratio_min": 1.0,
                 "ratio_max": 1.6, "fuel_fraction": 0.03},
                {"id": "c2", "from": "n6", "to": "n7", "flow_max_m3s": 100.0, "ratio_min": 1.0,
                 "ratio_max": 1.6, "fuel_fraction": 0.05},
            ],
            "regulators": [],
            "supplies": [
                {"id": "s1", "node": "n1", "flow_min_m3s": 0.0, "flow_max_m3s": 60.0, "cost_per_m3": 0.11},
                {"id": "s2", "node": "n6", "flow_min_m3s": 0.0, "flow_max_m3s": 50.0, "cost_per_m3": 0.14},
            ],
        },
    }


# IEEE 14-bus branch data: from, to, r, x, tap
IEEE14 = [
    (1, 2, 0.01938, 0.05917, 1.0), (1, 5, 0.05403, 0.22304, 1.0), (2, 3, 0.04699, 0.19797, 1.0),
    (2, 4, 0.05811, 0.17632, 1.0), (2, 5, 0.05695, 0.17388, 1.0), (3, 4, 0.06701, 0.17103, 1.0),
    (4, 5, 0.01335, 0.04211, 1.0), (4, 7, 0.0, 0.20912, 0.978), (4, 9, 0.0, 0.55618, 0.969),
    (5, 6, 0.0, 0.25202, 0.932), (6, 11, 0.09498, 0.1989, 1.0), (6, 12, 0.12291, 0.25581, 1.0),
    (6, 13, 0.06615, 0.13027, 1.0), (7, 8, 0.0, 0.17615, 1.0), (7, 9, 0.0, 0.11001, 1.0),
    (9, 10, 0.03181, 0.0845, 1.0), (9, 14, 0.12711, 0.27038, 1.0), (10, 11, 0.08205, 0.19207, 1.0),
    (12, 13, 0.22092, 0.19988, 1.0), (13, 14, 0.17093, 0.34802, 1.0),
]
IEEE14_LOAD = [0.0, 21.7, 94.2, 47.8, 7.6, 11.2, 0.0, 0.0, 29.5, 9.0, 3.5, 6.1, 13.5, 14.9]


def case_b(H=2):
    t = np.arange(H)
    shape = 1.0 + 0.1 * np.sin(2 * np.pi * t / 6.0)
    load = np.round(np.outer(shape, IEEE14_LOAD), 3)
    buses = [{"id": f"b{i+1}", "demand_mw": list(load[:, i])} for i in range(14)]
    branches = [{"id": f"l{k+1}", "from": f"b{f}", "to": f"b{tt}", "r_pu": r, "x_pu": x,
                 "tap_ratio": tap, "rate_mw": 160.0}
                for k, (f, tt, r, x, tap) in enumerate(IEEE14)]
    gens = [
        {"id": "g1", "bus": "b1", "type": "non-GPG", "p_min_mw": 0.0, "p_max_mw": 200.0,
         "ramp_down_mw_per_h": 100.0, "ramp_up_mw_per_h": 100.0, "c2": 0.043, "c1": 20.0, "c0": 0.0,
         "p_initial_mw": 150.0},
        {"id": "g2", "bus": "b2", "type": "non-GPG", "p_min_mw": 0.0, "p_max_mw": 140.0,
         "ramp_down_mw_per_h": 80.0, "ramp_up_mw_per_h": 80.0, "c2": 0.25, "c1": 20.0, "c0": 0.0,
         "p_initial_mw": 40.0},
        {"id": "g3", "bus": "b3", "type": "non-GPG", "p_min_mw": 0.0, "p_max_mw": 100.0,
         "ramp_down_mw_per_h": 60.0, "ramp_up_mw_per_h": 60.0, "c2": 0.01, "c1": 40.0, "c0": 0.0,
         "p_initial_mw": 20.0},
        {"id": "g4", "bus": "b6", "type": "GPG", "p_min_mw": 0.0, "p_max_mw": 100.0,
         "ramp_down_mw_per_h": 60.0, "ramp_up_mw_per_h": 60.0, "c2": 0.01, "c1": 4.0, "c0": 0.0,
         "efficiency": 0.42, "gas_node": "n12", "p_initial_mw": 30.0},
        {"id": "g5", "bus": "b8", "type": "GPG", "p_min_mw": 0.0, "p_max_mw": 100.0,
         "ramp_down_mw_per_h": 60.0, "ramp_up_mw_per_h": 60.0, "c2": 0.01, "c1": 4.0, "c0": 0.0,
         "efficiency": 0.40, "gas_node": "n21", "p_initial_mw": 30.0},
    ]
    dem = {"n5": 6.0, "n7": 8.0, "n9": 5.0, "n12": 10.0, "n16": 7.0, "n17": 9.0, "n21": 8.0, "n25": 9.0}
    comp_edges = [(4, 5), (8, 7), (14, 15), (19, 20), (24, 23), (17, 12)]
    # suction sides sit below discharge sides, so every compressor must boost
    suction = {f"n{f}" for f, _ in comp_edges}
    discharge = {f"n{t}" for _, t in comp_edges}
    nodes = []
    for i in range(1, 26):
        nid = f"n{i}"
        lo, hi = (3.0, 6.0) if nid in suction else (4.5, 7.0) if nid in discharge else (3.0, 7.0)
        d = list(np.round(dem.get(nid, 0.0) * shape, 3))
        nodes.append(node(nid, lo, hi, d))
    pipe_edges = [
        (1, 2), (2, 3), (3, 4), (5, 6), (6, 7), (8, 9), (9, 10), (10, 11), (11, 12),
        (3, 13), (13, 14), (15, 16), (16, 17), (10, 18), (18, 19), (20, 21), (6, 22), (22, 23), (24, 25),
        (2, 13), (9, 18), (11, 21), (7, 22), (16, 25),
    ]
    pipes = [pipe(f"p{k+1}", f"n{f}", f"n{tt}", 0.5 if k % 3 else 0.6, 20.0 + 5.0 * (k % 4), 80.0, nodes)
             for k, (f, tt) in enumerate(pipe_edges)]
    comps = [{"id": f"c{k+1}", "from": f"n{f}", "to": f"n{tt}", "flow_max_m3s": 80.0,
              "ratio_min": 1.0, "ratio_max": 1.5, "fuel_fraction": 0.03}
             for k, (f, tt) in enumerate(comp_edges)]
    costs = {"n1": 0.10, "n8": 0.12, "n14": 0.11, "n19": 0.13, "n24": 0.12, "n11": 0.15}
    supplies = [{"id": f"s{k+1}", "node": n, "flow_min_m3s": 0.0, "flow_max_m3s": 25.0, "cost_per_m3": c}
                for k, (n, c) in enumerate(costs.items())]
    return {
        "schema_version": 1,
        "name": "case_b",
        "description": "Toy case with the element counts of published case B (14 buses, 20 branches, "
                       "3+2 generators, 25 nodes, 24 pipelines, 6 compressors, 6 supplies). Electric "
                       "branch data follow the IEEE 14-bus system; the gas network is invented.",
        "horizon": {"periods": H, "dt_hours": 1.0},
        "options": {"final_linepack_fraction": 1.0},
        "electricity": {"reference_bus": "b1", "buses": buses, "branches": branches, "generators": gens},
        "gas": {"nodes": nodes, "pipelines": pipes, "compressors": comps, "regulators": [],
                "supplies": supplies},
    }


if __name__ == "__main__":
    write("nano", nano())
    write("pair", pair())
    write("case_a", case_a())
    write("case_b", case_b())
