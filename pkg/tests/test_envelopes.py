import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from moegf import (EnvelopeError, envelope_avg_pressure, envelope_signed_square, envelope_square,
                   pwl_cost_epigraph)
from moegf.envelopes import neg_harmonic, neg_harmonic_hessian, paired_generators, signed_square_breakpoints

SQ2 = np.sqrt(2.0)


def graph_square(lo, hi, n=1000, rng=None):
    x = np.concatenate([[lo, hi], (rng or np.random.default_rng(0)).uniform(lo, hi, n)])
    return np.column_stack([x, x * x])


def graph_signed(lo, hi, n=1000, rng=None):
    x = np.concatenate([[lo, 0.0, hi], (rng or np.random.default_rng(0)).uniform(lo, hi, n)])
    return np.column_stack([x, x * np.abs(x)])


def graph_harmonic(xlo, xhi, ylo, yhi, n=50):
    X, Y = np.meshgrid(np.linspace(xlo, xhi, n), np.linspace(ylo, yhi, n))
    X, Y = X.ravel(), Y.ravel()
    return np.column_stack([X, Y, neg_harmonic(X, Y)])


def min_abs_slack(env, pts):
    """Per halfspace, closest approach of the true graph to the boundary."""
    return np.abs(env.slack(pts)).min(axis=0)


def test_square_symmetric_example():
    env = envelope_square(-1.0, 1.0, 3)
    # rows: v >= -2x - 1, v >= 0, v >= 2x - 1, v <= 1 as coef @ (x, v) <= rhs
    np.testing.assert_allclose(env.coef, [[-2, -1], [0, -1], [2, -1], [0, 1]], atol=1e-15)
    np.testing.assert_allclose(env.rhs, [1, 0, 1, 1], atol=1e-15)


def test_square_secant_from_zero():
    env = envelope_square(0.0, 2.0, 2)
    np.testing.assert_allclose(env.coef[-1], [-2.0, 1.0])
    assert env.rhs[-1] == 0.0


def test_square_needs_two_points():
    with pytest.raises(EnvelopeError):
        envelope_square(0.0, 1.0, 1)


@pytest.mark.parametrize("l", [2, 10])
@pytest.mark.parametrize("lo, hi", [(-1.0, 1.0), (-0.3, 0.7), (0.2, 3.0), (-2.0, -0.5)])
def test_square_sound_and_supporting(lo, hi, l):
    env = envelope_square(lo, hi, l)
    pts = graph_square(lo, hi)
    assert env.contains(pts, 1e-9).all()
    # tangency points are on the graph; the secant touches at both ends
    touch = np.column_stack([env.meta["points"], env.meta["points"] ** 2])
    assert min_abs_slack(env, np.vstack([pts, touch])).max() <= 1e-6


def test_signed_square_breakpoints_example():
    bp = signed_square_breakpoints(-1.0, 2.0)
    assert bp["alpha"] == pytest.approx(SQ2 - 1)
    assert bp["beta"] == pytest.approx(2 - 2 * SQ2)
    # tangent at alpha passes through (lo, lo|lo|): second tangent from the endpoint
    a, lo = bp["alpha"], -1.0
    assert 2 * a * lo - a * a == pytest.approx(lo * abs(lo))


def test_signed_square_symmetric():
    env = envelope_signed_square(-1.0, 1.0)
    pts = graph_signed(-1.0, 1.0)
    flip = env.slack(-pts)
    # the mirrored graph is the graph itself, and the lower rows map to the upper rows
    np.testing.assert_allclose(np.sort(env.slack(pts), axis=1), np.sort(flip, axis=1), atol=1e-12)
    np.testing.assert_allclose(env.rhs[:3], env.rhs[3:], atol=1e-12)


@pytest.mark.parametrize("lo, hi", [(-1.0, 2.0), (-1.0, 1.0), (-2.0, 1.0), (-0.5, 0.8)])
def test_signed_square_sound_and_supporting(lo, hi):
    env = envelope_signed_square(lo, hi)
    assert env.n_halfspaces == 6
    pts = graph_signed(lo, hi, 20000)
    assert env.contains(pts, 1e-9).all()
    assert min_abs_slack(env, pts).max() <= 1e-6


def test_signed_square_needs_straddle():
    with pytest.raises(EnvelopeError):
        envelope_signed_square(0.5, 2.0)


def test_avg_corner_values():
    assert neg_harmonic(1.0, 1.0) == -0.5
    assert neg_harmonic(2.0, 2.0) == -1.0
    assert neg_harmonic(1.0, 2.0) == pytest.approx(-2 / 3)
    env = envelope_avg_pressure(1.0, 2.0, 1.0, 2.0)
    # first lower row is the tangent at (2, 2): slopes -0.25 in both coordinates
    np.testing.assert_allclose(env.coef[0], [-0.25, -0.25, -1.0])


@pytest.mark.parametrize("box", [(1.0, 2.0, 1.0, 2.0), (3.0, 7.0, 3.0, 7.0), (4.0, 6.0, 3.0, 7.0),
                                 (0.2, 5.0, 1.0, 1.5)])
def test_avg_sound_and_supporting(box):
    env = envelope_avg_pressure(*box)
    pts = graph_harmonic(*box)
    assert env.contains(pts, 1e-9).all()
    assert min_abs_slack(env, pts).max() <= 1e-6


def test_avg_needs_positive_box():
    with pytest.raises(EnvelopeError):
        envelope_avg_pressure(0.0, 1.0, 1.0, 2.0)


def test_hessian_psd_random():
    rng = np.random.default_rng(3)
    x, y = rng.uniform(1e-3, 10, 1000), rng.uniform(1e-3, 10, 1000)
    assert np.linalg.eigvalsh(neg_harmonic_hessian(x, y)).min() >= -1e-12


def test_cost_epigraph_linear_only():
    env = pwl_cost_epigraph(0.0, 5.0, 1.0, 1.0, 0.0, 2.0, segments=8)
    assert env.n_halfspaces == 1
    np.testing.assert_allclose(env.coef, [[0.0, -1.0]])


def test_cost_epigraph_single_segment_exact_at_mid():
    env = pwl_cost_epigraph(4.0, 0.0, 0.0, 1.0, 0.0, 2.0, segments=1)
    s = 2.0
    # e >= tangent; equality at p = 1
    assert env.slack(np.array([[1.0, (s * 1.0) ** 2]]))[0, 0] == pytest.approx(0.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-4, 10), st.floats(0.1, 3), st.floats(-2, 1), st.floats(0.1, 5))
def test_cost_epigraph_error_bound(c2, dt, lo, width):
    hi = lo + width
    env = pwl_cost_epigraph(c2, 1.0, 0.0, dt, lo, hi, segments=32)
    p = np.linspace(lo, hi, 4001)
    true = (np.sqrt(c2) * dt * p) ** 2
    # the epigraph value is the largest tangent
    under = -env.rhs[None, :] + env.coef[None, :, 0] * p[:, None]
    gap = true - under.max(axis=1)
    bound = (np.sqrt(c2) * dt * (hi - lo) / 32) ** 2 / 4
    assert gap.min() >= -1e-9 * max(1.0, true.max())
    assert gap.max() <= bound * (1 + 1e-9) + 1e-12
    assert env.meta["max_error"] == pytest.approx(bound)


def test_generator_pairing():
    assert paired_generators(5) == [(0, 1), (2, 3), (4,)]
    assert paired_generators(2) == [(0, 1)]


@settings(max_examples=60, deadline=None)
@given(st.floats(-5, -0.05), st.floats(0.05, 5), st.integers(2, 20))
def test_square_contains_graph_property(lo, w, l):
    hi = lo + w + 0.1
    env = envelope_square(lo, hi, l)
    assert env.contains(graph_square(lo, hi, 200), 1e-9 * max(1, hi * hi, lo * lo)).all()


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 5), st.floats(0.45, 2.3))
def test_signed_square_contains_graph_property(hi, ratio):
    lo = -ratio * hi
    env = envelope_signed_square(lo, hi)
    assert env.contains(graph_signed(lo, hi, 500), 1e-9 * max(1, hi * hi, lo * lo)).all()


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 5), st.floats(0.05, 5), st.floats(0.1, 5), st.floats(0.05, 5))
def test_avg_contains_graph_property(xl, xw, yl, yw):
    box = (xl, xl + xw, yl, yl + yw)
    env = envelope_avg_pressure(*box)
    assert env.contains(graph_harmonic(*box, n=25), 1e-9).all()
