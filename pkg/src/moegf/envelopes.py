"""Polyhedral outer envelopes of the nonconvex terms and a PWL cost epigraph.

Every envelope is a list of halfspaces ``coef @ z <= rhs`` over a small set
of local variables ``z``. The last local variable is always the lifted
value (``v`` for x^2, ``u`` for x|x|, ``w`` for -xy/(x+y), ``e`` for the
cost epigraph).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SQRT2 = np.sqrt(2.0)
SQRT8 = np.sqrt(8.0)


class EnvelopeError(ValueError):
    pass


@dataclass(frozen=True)
class Envelope:
    family: str
    local_vars: tuple
    coef: np.ndarray           # (k, len(local_vars))
    rhs: np.ndarray            # (k,)
    kinds: tuple = ()          # "lower"/"upper" per halfspace, w.r.t. the lifted value
    meta: dict = field(default_factory=dict)

    @property
    def n_halfspaces(self) -> int:
        return self.rhs.shape[0]

    def slack(self, points) -> np.ndarray:
        """``rhs - coef @ z`` for each point (rows) and halfspace (columns)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.rhs[None, :] - pts @ self.coef.T

    def contains(self, points, tol: float = 1e-9) -> np.ndarray:
        return np.all(self.slack(points) >= -tol, axis=1)


def _tangent_rows(slope, value_at_zero, lower: bool):
    """Rows for ``lift >= slope*x + c`` (lower) or ``lift <= ...`` (upper)."""
    slope = np.atleast_1d(slope)
    value_at_zero = np.atleast_1d(value_at_zero)
    if lower:
        return np.column_stack([slope, -np.ones_like(slope)]), -value_at_zero
    return np.column_stack([-slope, np.ones_like(slope)]), value_at_zero


def envelope_square(x_lo: float, x_hi: float, l: int) -> Envelope:
    """Envelope of {(x, x^2) : x in [x_lo, x_hi]}.

    ``l`` tangent lines at uniformly spaced points (endpoints included)
    bound ``v`` from below; the secant through the endpoints bounds it
    from above.
    """
    if l < 2:
        raise EnvelopeError("envelope_square needs l >= 2 points")
    if not x_lo < x_hi:
        raise EnvelopeError("envelope_square needs x_lo < x_hi")
    pts = np.linspace(x_lo, x_hi, l)
    c_lo, r_lo = _tangent_rows(2.0 * pts, -pts ** 2, lower=True)
    c_up, r_up = _tangent_rows(x_hi + x_lo, -x_hi * x_lo, lower=False)
    return Envelope(
        "square", ("x", "v"), np.vstack([c_lo, c_up]), np.concatenate([r_lo, r_up]),
        ("lower",) * l + ("upper",), {"points": pts, "bounds": (x_lo, x_hi)},
    )


def signed_square_breakpoints(x_lo: float, x_hi: float) -> dict:
    """alpha, beta, gamma, delta of the x|x| envelope.

    alpha is where the second tangent through the lower endpoint touches
    the curve, beta the same for the upper endpoint. gamma is where the
    tangents at alpha and x_hi intersect (both lie on the x^2 branch, so
    the intersection is their midpoint); delta likewise for beta and x_lo.
    """
    alpha = x_lo * (1.0 - SQRT2)
    beta = x_hi * (1.0 - SQRT2)
    # tangent of x^2 at a: 2a x - a^2; tangents at a and b meet at (a+b)/2
    gamma = 0.5 * (alpha + x_hi)
    delta = 0.5 * (beta + x_lo)
    return {"alpha": alpha, "beta": beta, "gamma": gamma, "delta": delta}


def envelope_signed_square(x_lo: float, x_hi: float) -> Envelope:
    """Six-halfspace envelope of {(x, x|x|) : x in [x_lo, x_hi]}, x_lo < 0 < x_hi.

    The tangents at gamma and delta only stay valid while gamma lies on the
    convex branch and delta on the concave branch, which needs
    ``x_hi/(1+sqrt2) <= -x_lo <= (1+sqrt2) x_hi``.
    """
    if not (x_lo < 0.0 < x_hi):
        raise EnvelopeError("envelope_signed_square needs x_lo < 0 < x_hi")
    bp = signed_square_breakpoints(x_lo, x_hi)
    g, d = bp["gamma"], bp["delta"]
    if bp["alpha"] > x_hi or bp["beta"] < x_lo:
        raise EnvelopeError("envelope_signed_square needs bounds with ratio within 1+sqrt(2)")
    lo, hi = x_lo, x_hi
    # lower (u >= ...)
    l_slope = np.array([(2.0 - SQRT8) * lo, 2.0 * hi, 2.0 * abs(g)])
    l_icpt = np.array([-(3.0 - SQRT8) * lo ** 2, -hi ** 2, g * abs(g) - 2.0 * abs(g) * g])
    # upper (u <= ...)
    u_slope = np.array([(SQRT8 - 2.0) * hi, -2.0 * lo, 2.0 * abs(d)])
    u_icpt = np.array([(3.0 - SQRT8) * hi ** 2, lo ** 2, d * abs(d) - 2.0 * abs(d) * d])
    c1, r1 = _tangent_rows(l_slope, l_icpt, lower=True)
    c2, r2 = _tangent_rows(u_slope, u_icpt, lower=False)
    return Envelope(
        "signed-square", ("x", "u"), np.vstack([c1, c2]), np.concatenate([r1, r2]),
        ("lower",) * 3 + ("upper",) * 3, dict(bp, bounds=(x_lo, x_hi)),
    )


def neg_harmonic(x, y):
    """f(x, y) = -xy/(x+y), convex on the positive orthant."""
    return -x * y / (x + y)


def neg_harmonic_grad(x, y):
    s2 = (x + y) ** 2
    return -y ** 2 / s2, -x ** 2 / s2


def neg_harmonic_hessian(x, y) -> np.ndarray:
    """Hessian of -xy/(x+y); shape (..., 2, 2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s3 = (x + y) ** 3
    H = np.empty(x.shape + (2, 2))
    H[..., 0, 0] = 2.0 * y ** 2 / s3
    H[..., 0, 1] = H[..., 1, 0] = -2.0 * x * y / s3
    H[..., 1, 1] = 2.0 * x ** 2 / s3
    return H


def envelope_avg_pressure(x_lo: float, x_hi: float, y_lo: float, y_hi: float) -> Envelope:
    """Envelope of {(x, y, -xy/(x+y))} over a positive box.

    Four tangent planes at the corners bound ``w`` from below. Two planes
    through corner triples (p1, p2, p3) and (p2, p3, p4) bound it from
    above; they are valid because f is convex with a non-positive cross
    derivative, so it lies below both corner planes on the whole box.
    """
    if not (0 < x_lo < x_hi and 0 < y_lo < y_hi):
        raise EnvelopeError("envelope_avg_pressure needs 0 < lo < hi in both coordinates")
    corners = [(x_hi, y_hi), (x_lo, y_lo), (x_hi, y_lo), (x_lo, y_hi)]
    rows, rhs = [], []
    for cx, cy in corners:
        fx, fy = neg_harmonic_grad(cx, cy)
        f0 = neg_harmonic(cx, cy)
        # w >= f0 + fx (x - cx) + fy (y - cy)
        rows.append([fx, fy, -1.0])
        rhs.append(fx * cx + fy * cy - f0)
    p1 = np.array([x_lo, y_lo, neg_harmonic(x_lo, y_lo)])
    p2 = np.array([x_hi, y_lo, neg_harmonic(x_hi, y_lo)])
    p3 = np.array([x_lo, y_hi, neg_harmonic(x_lo, y_hi)])
    p4 = np.array([x_hi, y_hi, neg_harmonic(x_hi, y_hi)])
    a = np.cross(p2 - p1, p3 - p1)
    b = np.cross(p2 - p4, p3 - p4)
    for nrm, base in ((a, p1), (b, p4)):
        # w <= base_w - (n_x/n_z)(x - base_x) - (n_y/n_z)(y - base_y)
        sx, sy = -nrm[0] / nrm[2], -nrm[1] / nrm[2]
        rows.append([-sx, -sy, 1.0])
        rhs.append(base[2] - sx * base[0] - sy * base[1])
    return Envelope(
        "avg-pressure", ("x", "y", "w"), np.array(rows), np.array(rhs),
        ("lower",) * 4 + ("upper",) * 2,
        {"bounds": (x_lo, x_hi, y_lo, y_hi), "normals": (a, b)},
    )


def pwl_cost_epigraph(c2: float, c1: float, c0: float, dt: float,
                      p_lo: float, p_hi: float, segments: int = 32) -> Envelope:
    """Tangent underestimator of the quadratic cost term (sqrt(c2) dt p)^2.

    The epigraph variable ``e`` satisfies ``e >= 2 a s p - a^2`` for tangent
    points ``a`` (in scaled units ``s p`` with ``s = sqrt(c2) dt``) placed
    at the midpoints of ``segments`` equal sub-intervals of [p_lo, p_hi].
    The linear and constant cost terms are carried in ``meta`` only.
    The worst-case gap is ``(s (p_hi - p_lo) / segments)^2 / 4``.
    """
    if c2 < 0:
        raise EnvelopeError("c2 must be non-negative")
    if segments < 1:
        raise EnvelopeError("segments must be >= 1")
    if p_lo > p_hi:
        raise EnvelopeError("p_lo must not exceed p_hi")
    s = np.sqrt(c2) * dt
    meta = {"c1": c1, "c0": c0, "dt": dt, "scale": s, "bounds": (p_lo, p_hi), "segments": segments}
    if c2 == 0.0:
        coef = np.array([[0.0, -1.0]])
        return Envelope("cost-epigraph", ("p", "e"), coef, np.array([0.0]), ("lower",),
                        dict(meta, points=np.zeros(0), max_error=0.0))
    edges = np.linspace(p_lo, p_hi, segments + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    a = s * mids
    coef = np.column_stack([2.0 * a * s, -np.ones(segments)])
    rhs = a ** 2
    err = (s * (p_hi - p_lo) / segments) ** 2 / 4.0
    return Envelope("cost-epigraph", ("p", "e"), coef, rhs, ("lower",) * segments,
                    dict(meta, points=mids, max_error=err))


def paired_generators(n_gen: int) -> list[tuple[int, ...]]:
    """Pairs (2n-1, 2n) of generator positions; the last is a singleton if n is odd."""
    return [tuple(range(k, min(k + 2, n_gen))) for k in range(0, n_gen, 2)]
