import copy

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from moegf import InstanceError, load_instance, parse_instance
from moegf.instance import (GasConstants, Units, branch_coefficients, bundled_instances,
                            compressibility, compute_pipe_constants, friction_factor)

mp.mp.dps = 50


def mp_constants(D, L, m_bounds, n_bounds, g=GasConstants()):
    """Pipe constants evaluated from the closed forms at 50 digits."""
    D, L = mp.mpf(D), mp.mpf(L)
    f = 4 * (mp.mpf("20.621") * D ** (mp.mpf(1) / 6)) ** -2
    pm = (mp.mpf(m_bounds[0]) + mp.mpf(m_bounds[1])) / 2
    pn = (mp.mpf(n_bounds[0]) + mp.mpf(n_bounds[1])) / 2
    avg = pm + pn - pm * pn / (pm + pn)
    S, T, R, rho = mp.mpf(g.S), mp.mpf(g.T), mp.mpf(g.R), mp.mpf(g.rho)
    Z = 1 / (1 + mp.mpf("49.9511") * 10 ** (mp.mpf("1.785") * S) * avg / (mp.mpf("1.5") * (mp.mpf("1.8") * T) ** mp.mpf("3.825")))
    Phi = mp.pi ** 2 * D ** 5 / (16 * rho ** 2 * Z * R * T * L * f)
    Psi = mp.pi * D ** 2 * L / (4 * rho * Z * R * T)
    return f, Z, Phi, Psi


def test_friction_factor_half_metre():
    ref = mp_constants(0.5, 1.0, (1, 2), (1, 2))[0]
    assert friction_factor(0.5) == pytest.approx(float(ref), rel=1e-14)
    assert friction_factor(0.5) == pytest.approx(0.011852, abs=5e-7)


def test_compressibility_at_zero_pressure():
    assert compressibility(0.0, 0.0, 0.6, 288.15) == 1.0


def test_pipe_constants_match_high_precision():
    pc = compute_pipe_constants(0.9, 60e3, (3e6, 7e6), (3e6, 7e6))
    f, Z, Phi, Psi = mp_constants(0.9, 60e3, (3e6, 7e6), (3e6, 7e6))
    assert pc.f == pytest.approx(float(f), rel=1e-13)
    assert pc.Z == pytest.approx(float(Z), rel=1e-13)
    assert pc.Phi == pytest.approx(float(Phi), rel=1e-12)
    assert pc.Psi == pytest.approx(float(Psi), rel=1e-12)


def test_doubling_length_scales_constants():
    a = compute_pipe_constants(0.6, 20e3, (3e6, 6e6), (3e6, 7e6))
    b = compute_pipe_constants(0.6, 40e3, (3e6, 6e6), (3e6, 7e6))
    assert b.Phi == pytest.approx(a.Phi / 2, rel=1e-14)
    assert b.Psi == pytest.approx(2 * a.Psi, rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e5, 8e6), st.floats(1e3, 2e6))
def test_compressibility_decreases_with_pressure(p, dp):
    assert compressibility(p + dp, p + dp, 0.6, 288.15) < compressibility(p, p, 0.6, 288.15)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(["power", "flow", "pressure", "linepack"]),
       st.lists(st.floats(-1e9, 1e9, allow_nan=False, allow_subnormal=False), min_size=1, max_size=5))
def test_per_unit_round_trip(kind, vals):
    u = Units()
    back = u.to_si(u.to_pu(vals, kind), kind)
    np.testing.assert_allclose(back, vals, rtol=1e-12, atol=0)


def test_branch_coefficients_untapped():
    g, b, g2, b2 = branch_coefficients(0.01, 0.1, 1.0, 0.0)
    y = 1 / complex(0.01, 0.1)
    assert g == pytest.approx(y.real) and g2 == pytest.approx(y.real)
    assert b == pytest.approx(-y.imag) and b2 == pytest.approx(-y.imag)


def test_bundled_instances_load():
    names = bundled_instances()
    assert {"nano", "pair", "case_a", "case_b"} <= set(names)
    for n in names:
        inst = load_instance(n)
        assert inst.H >= 1 and inst.gas.pipelines


def test_minimal_round_trip(nano_doc):
    inst = parse_instance(nano_doc)
    assert len(inst.electricity.branches) == 1
    assert len(inst.gas.pipelines) == 1
    assert inst.gas.nodes[0].p_min == pytest.approx(3.0)
    assert inst.electricity.buses[1].demand[1] == pytest.approx(1.1)


def test_compressor_ratio_below_one_rejected(doc_copy):
    doc_copy["gas"]["compressors"][0]["ratio_max"] = 0.9
    with pytest.raises(InstanceError, match="compressor ratio bound"):
        parse_instance(doc_copy)


def test_zero_pressure_bound_rejected(doc_copy):
    doc_copy["gas"]["nodes"][1]["p_min_pa"] = 0.0
    with pytest.raises(InstanceError, match="positive pressure lower bound required"):
        parse_instance(doc_copy)


@pytest.mark.parametrize("mutate, needle", [
    (lambda d: d["gas"]["pipelines"][0].pop("diameter_m"), "diameter_m"),
    (lambda d: d["gas"]["pipelines"][0].update({"to": "nowhere"}), "nowhere"),
    (lambda d: d["electricity"]["generators"][1].update({"efficiency": 1.5}), "efficiency"),
    (lambda d: d.update({"schema_version": 99}), "schema_version"),
    (lambda d: d["gas"]["supplies"][0].update({"flow_min_m3s": 500.0}), "s1"),
])
def test_bad_fields_named(doc_copy, mutate, needle):
    mutate(doc_copy)
    with pytest.raises(InstanceError, match=needle):
        parse_instance(doc_copy)


def test_missing_file():
    with pytest.raises(InstanceError, match="not found"):
        load_instance("/nonexistent/instance.json")


def test_regulator_parsed(regulator_instance):
    regs = [e for e in regulator_instance.gas.nonpipes if e.kind != "compressor"]
    assert len(regs) == 1 and regs[0].fuel == 0.0
    assert regulator_instance.gas.nonpipes[0].kind == "compressor"


def test_regulator_ratio_checked():
    from conftest import regulator_doc
    doc = regulator_doc()
    doc["gas"]["regulators"][0]["ratio_min"] = 1.2
    with pytest.raises(InstanceError, match="regulator ratio bound"):
        parse_instance(doc)
