import copy

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import bundled_doc, interior_point, regulator_doc
from moegf import ResidualDomainError, build_moegf, cold_start, load_instance, parse_instance
from moegf.formulation import (ELECTRIC, GAS_AVG, GAS_MOTION, eval_residual, linearize_at,
                               motion_grad, motion_value)
from oracles import central_difference


def expected_census(inst):
    el, gs, H = inst.electricity, inst.gas, inst.H
    G, L, B = len(el.generators), len(el.branches), len(el.buses)
    N, P, E, C = len(gs.nodes), len(gs.pipelines), len(gs.nonpipes), len(inst.compressors)
    per_t = {
        "ramp-up": G, "ramp-down": G, "angle-difference": L, "power-balance": B,
        "gpg-coupling": len(inst.gpg), "gas-balance": N, "average-flow": P, "linepack": P,
        "continuity": P, "compressor-split": C, "compressor-fuel": C, "compressor-forward": C,
        "compressor-reverse": C, "nonpipe-flow-upper": E, "nonpipe-flow-lower": E,
        "ratio-upper": E, "ratio-lower": E, "bypass-1": E, "bypass-2": E,
    }
    out = {k: v * H for k, v in per_t.items() if v}
    if inst.final_linepack_fraction is not None and P:
        out["final-linepack"] = 1
    return out


def with_horizon(doc, H):
    """Copy of an instance document stretched to H periods."""
    doc = copy.deepcopy(doc)
    doc["horizon"]["periods"] = H

    def stretch(obj):
        if isinstance(obj, dict):
            for k, v in obj.items():
                if isinstance(v, list) and v and all(isinstance(a, (int, float)) for a in v):
                    obj[k] = [v[t % len(v)] for t in range(H)]
                else:
                    stretch(v)
        elif isinstance(obj, list):
            for v in obj:
                stretch(v)
    stretch(doc["electricity"])
    stretch(doc["gas"])
    return doc


@pytest.mark.parametrize("name", ["nano", "pair", "case_a", "case_b"])
def test_census_matches_closed_form(name):
    inst = load_instance(name)
    m = build_moegf(inst)
    assert m.census() == expected_census(inst)
    L, P, E = len(inst.electricity.branches), len(inst.gas.pipelines), len(inst.gas.nonpipes)
    assert m.block(ELECTRIC).size == 2 * L * inst.H
    assert m.block(GAS_MOTION).size == P * inst.H
    assert m.block(GAS_AVG).size == P * inst.H
    assert m.binaries.size == E * inst.H


def test_census_regulator(regulator_instance):
    m = build_moegf(regulator_instance)
    assert m.census() == expected_census(regulator_instance)
    assert m.binaries.size == 2 * regulator_instance.H


def test_one_pipe_one_period():
    m = build_moegf(parse_instance(with_horizon(bundled_doc("pair"), 1)))
    assert m.block(GAS_MOTION).size == 1 and m.block(GAS_AVG).size == 1


def test_one_branch_two_periods(nano_model):
    assert nano_model.block(ELECTRIC).size == 4


def test_case_a_day_has_48_binaries():
    inst = parse_instance(with_horizon(bundled_doc("case_a"), 24))
    assert len(inst.compressors) == 2
    assert build_moegf(inst).binaries.size == 48


def test_every_row_tagged(case_a_model):
    assert all(isinstance(t, str) and t for t in case_a_model.tags)


def test_variable_bounds_finite(case_a_model):
    V = case_a_model.space
    assert np.all(np.isfinite(V.lb)) and np.all(np.isfinite(V.ub))
    assert np.all(V.lb <= V.ub)


def test_each_index_used_once(nano_model):
    V = nano_model.space
    idx = np.concatenate([V[name].ravel() for name in V.blocks])
    assert np.array_equal(np.sort(idx), np.arange(V.n))


def _residual(model, kind, k=0):
    return [r for r in model.residual_functions() if r.kind == kind][k]


def test_motion_symmetric_zero(nano_model):
    r = _residual(nano_model, GAS_MOTION)
    x = np.ones(nano_model.space.n) * 2.0
    x[r.variables[0]] = 0.0
    h, g = eval_residual(r, x)
    assert h == 0.0 and g[0] == 0.0


def test_electric_at_zero_angle(nano_model):
    r = _residual(nano_model, ELECTRIC)
    x = np.zeros(nano_model.space.n)
    x[r.variables[1]] = 0.7
    h, g = eval_residual(r, x)
    assert h == pytest.approx(-0.7)
    assert g[0] == pytest.approx(r.params[1])


def test_motion_worked_value():
    h = motion_value(2.0, 0.3, 1.2, 1.0)
    assert h == pytest.approx(-0.79, abs=1e-15)
    fd = central_difference(lambda v: motion_value(2.0, *v), np.array([0.3, 1.2, 1.0]))
    np.testing.assert_allclose(motion_grad(2.0, 0.3, 1.2, 1.0), fd, rtol=1e-6)


def test_avg_domain_error(nano_model):
    r = _residual(nano_model, GAS_AVG)
    x = np.zeros(nano_model.space.n)
    with pytest.raises(ResidualDomainError, match="p1"):
        eval_residual(r, x)


@pytest.mark.parametrize("kind", [ELECTRIC, GAS_MOTION, GAS_AVG])
def test_gradients_match_finite_differences(case_a_model, kind):
    rng = np.random.default_rng(7)
    funcs = [r for r in case_a_model.residual_functions() if r.kind == kind]
    worst = 0.0
    for _ in range(1000):
        r = funcs[rng.integers(len(funcs))]
        x = interior_point(case_a_model, rng)
        cols = list(r.variables)

        def f(v):
            y = x.copy()
            y[cols] = v
            return r(y)[0]
        g = r(x)[1]
        fd = central_difference(f, x[cols])
        worst = max(worst, np.max(np.abs(fd - g) / np.maximum(1.0, np.abs(g))))
    assert worst <= 1e-6


def test_tangent_rows_exact_at_expansion_point(case_a_model, rng):
    x = interior_point(case_a_model, rng)
    h = case_a_model.residual_values(x)
    rows = linearize_at(case_a_model, x, k=3)
    assert len(rows) == h.size
    # the affine model reproduces h(x_k) at x_k, so it vanishes exactly on a root
    for row, hk in zip(rows, h):
        assert abs(row.lhs(x) - row.rhs - hk) <= 1e-12 * max(1.0, abs(row.rhs))
        assert row.stamp == 3
        assert row.slack == row.tag.startswith(ELECTRIC)


def test_electric_tangent_at_zero_angle(nano_model):
    x = cold_start(nano_model)
    x[nano_model.space["theta_br"]] = 0.0
    row = [r for r in linearize_at(nano_model, x) if r.slack][0]
    # p = b theta (+ r): coefficient on theta is the physics slope, on p it is -1
    assert row.rhs == pytest.approx(0.0)
    assert row.coefs[1] == -1.0


def test_motion_tangent_at_zero_flow(nano_model):
    x = cold_start(nano_model)
    x[nano_model.space["flow"]] = 0.0
    row = [r for r in linearize_at(nano_model, x) if r.tag.startswith(GAS_MOTION)][0]
    Phi = nano_model.instance.gas.pipelines[0].Phi
    pm, pn = x[row.indices[1]], x[row.indices[2]]
    assert row.coefs[0] == 0.0
    assert row.coefs[1] == pytest.approx(-2 * Phi * pm)
    assert row.coefs[2] == pytest.approx(2 * Phi * pn)
    # h(x_k) + grad (x - x_k) = 0  <=>  grad x = grad x_k - h(x_k) = -Phi(pm^2 - pn^2)
    assert row.rhs == pytest.approx(-Phi * (pm ** 2 - pn ** 2))


def test_linearize_rejects_nonpositive_pressure(nano_model):
    x = np.zeros(nano_model.space.n)
    with pytest.raises(ResidualDomainError, match="project"):
        linearize_at(nano_model, x)


def test_cold_start_in_bounds(case_a_model):
    x = cold_start(case_a_model)
    V = case_a_model.space
    assert np.all(x >= V.lb) and np.all(x <= V.ub)
    assert np.allclose(x[V["theta_br"]], 0.01)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(0.5, 3), st.floats(0.5, 3), st.floats(0.1, 5))
def test_motion_residual_odd_in_flow_and_swap(phi, pm, pn, Phi):
    assert motion_value(Phi, -phi, pn, pm) == pytest.approx(-motion_value(Phi, phi, pm, pn), abs=1e-12)


def test_objective_is_dollars(nano_model):
    inst = nano_model.instance
    x = cold_start(nano_model)
    V = nano_model.space
    cost = 0.0
    for t in range(inst.H):
        for k, g in enumerate(inst.electricity.generators):
            p = 100.0 * x[V["p_gen"][t, k]]
            cost += g.c2 * p ** 2 + g.c1 * p + g.c0
        cost += inst.gas.supplies[0].cost * 100.0 * x[V["supply"][t, 0]] * 3600.0
    assert nano_model.objective(x) == pytest.approx(cost, rel=1e-12)
