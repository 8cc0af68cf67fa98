"""Vectorized segment geometry shared by the GLI and metrics modules."""

import numpy as np


def _dot(u, v):
    return np.einsum("...i,...i->...", u, v)


def closest_segment_params(p0, p1, q0, q1, eps=1e-12):
    """Closest-point parameters (s, t) in [0, 1] between segments p0p1 and q0q1.

    Broadcasts over leading dimensions. Follows the clamped closed-form
    solution (Ericson, Real-Time Collision Detection, 5.1.9), including the
    degenerate point-segment and parallel cases.
    """
    p0, p1, q0, q1 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (p0, p1, q0, q1)))
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = _dot(d1, d1)
    e = _dot(d2, d2)
    f = _dot(d2, r)
    c = _dot(d1, r)
    b = _dot(d1, d2)
    denom = a * e - b * b

    a_safe = np.where(a > eps, a, 1.0)
    e_safe = np.where(e > eps, e, 1.0)

    # general case; parallel segments (denom ~ 0) pick s = 0
    s = np.where(denom > eps * np.maximum(a * e, eps), (b * f - c * e) / np.where(denom > 0, denom, 1.0), 0.0)
    s = np.clip(s, 0.0, 1.0)
    t = (b * s + f) / e_safe
    # t outside [0,1]: clamp t and recompute s
    t_lo = t < 0.0
    t_hi = t > 1.0
    s = np.where(t_lo, np.clip(-c / a_safe, 0.0, 1.0), s)
    s = np.where(t_hi, np.clip((b - c) / a_safe, 0.0, 1.0), s)
    t = np.clip(t, 0.0, 1.0)

    p_deg = a <= eps
    q_deg = e <= eps
    # p is a point
    s = np.where(p_deg, 0.0, s)
    t = np.where(p_deg & ~q_deg, np.clip(f / e_safe, 0.0, 1.0), t)
    # q is a point
    t = np.where(q_deg, 0.0, t)
    s = np.where(q_deg & ~p_deg, np.clip(-c / a_safe, 0.0, 1.0), s)
    return s, t


def segment_distance(p0, p1, q0, q1):
    """Minimum distance between segments p0p1 and q0q1 (broadcasting)."""
    p0, p1, q0, q1 = (np.asarray(x, dtype=float) for x in (p0, p1, q0, q1))
    s, t = closest_segment_params(p0, p1, q0, q1)
    cp = p0 + s[..., None] * (p1 - p0)
    cq = q0 + t[..., None] * (q1 - q0)
    return np.linalg.norm(cp - cq, axis=-1)
