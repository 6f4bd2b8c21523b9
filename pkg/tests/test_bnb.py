import numpy as np
import pytest

from moegf.lp import INFEASIBLE, OPTIMAL, BnbNode, bnb_solve, highs_milp_solve, lp_solve, most_fractional
from oracles import milp_enumeration, random_lp
from test_lp import make_lp


def random_milp(rng):
    while True:
        c, A, b, eq, lb, ub = random_lp(rng, n_max=6, m_max=6, max_bases=3000)
        n = c.size
        k = int(rng.integers(1, n + 1))
        binaries = np.sort(rng.choice(n, size=k, replace=False))
        lb[binaries], ub[binaries] = 0.0, 1.0
        # recentre rows on a point with a random binary assignment
        x0 = lb + rng.random(n) * (ub - lb)
        x0[binaries] = rng.integers(0, 2, size=k)
        if A.size:
            b = A @ x0 + np.where(eq, 0.0, rng.random(b.size))
        return c, A, b, eq, lb, ub, binaries


def test_random_milps_match_enumeration():
    rng = np.random.default_rng(31)
    for _ in range(50):
        c, A, b, eq, lb, ub, bins = random_milp(rng)
        ref, _ = milp_enumeration(c, A, b, eq, lb, ub, bins)
        sol = bnb_solve(make_lp(c, A, b, eq, lb, ub), bins)
        if ref is None:
            assert sol.status == INFEASIBLE
        else:
            assert sol.status == OPTIMAL
            assert sol.objective == pytest.approx(ref, abs=1e-8)
            assert np.all(np.abs(sol.x[bins] - np.round(sol.x[bins])) <= 1e-6)


def test_integral_relaxation_needs_no_branching():
    p = make_lp([1.0, 1.0], [[-1.0, -1.0]], [-1.0], [False], [0, 0], [1, 1])
    sol = bnb_solve(p, [0, 1])
    assert sol.ok and sol.nodes == 0 and sol.lp_solves == 1


def test_two_leaf_tree():
    # relaxation sits at y = 0.5; y = 1 is cheaper than y = 0 once integral
    # min x - y  s.t.  x >= 2y - 1, x >= 1 - 2y, x in [0, 1], y in {0, 1}
    p = make_lp([1.0, -0.1], [[-1.0, 2.0], [-1.0, -2.0]], [1.0, -1.0], [False, False], [0, 0], [1, 1])
    trace = []
    sol = bnb_solve(p, [1], trace=trace)
    assert sol.ok and sol.nodes == 1 and sol.lp_solves == 3
    assert sol.x[1] == 1.0 and sol.objective == pytest.approx(0.9)


def test_child_bounds_monotone():
    rng = np.random.default_rng(8)
    for _ in range(30):
        c, A, b, eq, lb, ub, bins = random_milp(rng)
        trace = []
        bnb_solve(make_lp(c, A, b, eq, lb, ub), bins, trace=trace)
        for _, parent, bound in trace:
            assert bound >= parent - 1e-9


def test_node_limit_keeps_valid_bound():
    rng = np.random.default_rng(4)
    for _ in range(20):
        c, A, b, eq, lb, ub, bins = random_milp(rng)
        ref, _ = milp_enumeration(c, A, b, eq, lb, ub, bins)
        sol = bnb_solve(make_lp(c, A, b, eq, lb, ub), bins, node_limit=2)
        assert sol.lp_solves <= 2
        if ref is not None and "bound" in sol.info:
            assert sol.info["bound"] <= ref + 1e-8


def test_non_binary_bounds_rejected():
    p = make_lp([1.0], np.zeros((0, 1)), [], [], [0], [2])
    with pytest.raises(ValueError):
        bnb_solve(p, [0])


def test_node_fixing_twice_rejected():
    node = BnbNode(0).child(1, 3, 1, 0.0)
    with pytest.raises(ValueError):
        node.child(2, 3, 0, 0.0)


def test_most_fractional():
    x = np.array([0.0, 0.3, 0.55, 1.0])
    assert most_fractional(x, np.arange(4)) == 2
    assert most_fractional(np.array([0.0, 1.0]), np.arange(2)) is None


def test_highs_milp_adapter_agrees():
    rng = np.random.default_rng(12)
    for _ in range(20):
        c, A, b, eq, lb, ub, bins = random_milp(rng)
        p = make_lp(c, A, b, eq, lb, ub)
        a, h = bnb_solve(p, bins), highs_milp_solve(p, bins)
        assert a.ok == h.ok
        if a.ok:
            assert a.objective == pytest.approx(h.objective, abs=1e-7)
            assert h.info["bound"] <= h.objective + 1e-9


def test_custom_backend_counted():
    calls = []

    def backend(p):
        calls.append(1)
        return lp_solve(p)

    p = make_lp([1.0, -0.1], [[-1.0, 2.0], [-1.0, -2.0]], [1.0, -1.0], [False, False], [0, 0], [1, 1])
    sol = bnb_solve(p, [1], solver=backend)
    assert len(calls) == sol.lp_solves


def test_no_integral_assignment():
    # 2y = 1 has only the fractional solution
    p = make_lp([1.0], [[2.0]], [1.0], [True], [0], [1])
    assert bnb_solve(p, [0]).status == INFEASIBLE
