"""Compiled per-frame chain-pair GLI kernels used by the batched GLI functions.

Scalar ports of :func:`graphmotion.gli.segment_writhe` and its gradient,
looped over frames and segment pairs. Vectors are float 3-tuples so the
inner loop never allocates. Results agree with the vectorized numpy
versions to rounding.
"""

import math

import numpy as np
from numba import njit

_INV_FOUR_PI = 1.0 / (4.0 * math.pi)


@njit(cache=True, inline="always")
def _v(arr, i, j):
    return (arr[i, j, 0], arr[i, j, 1], arr[i, j, 2])


@njit(cache=True, inline="always")
def _sub(u, v):
    return (u[0] - v[0], u[1] - v[1], u[2] - v[2])


@njit(cache=True, inline="always")
def _add(u, v):
    return (u[0] + v[0], u[1] + v[1], u[2] + v[2])


@njit(cache=True, inline="always")
def _mul(u, s):
    return (u[0] * s, u[1] * s, u[2] * s)


@njit(cache=True, inline="always")
def _dot(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


@njit(cache=True, inline="always")
def _cross(u, v):
    return (u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0])


@njit(cache=True, inline="always")
def _clamp(x, lo, hi):
    return min(max(x, lo), hi)


@njit(cache=True)
def _segment_distance(p0, p1, q0, q1):
    d1 = _sub(p1, p0)
    d2 = _sub(q1, q0)
    r = _sub(p0, q0)
    a = _dot(d1, d1)
    e = _dot(d2, d2)
    f = _dot(d2, r)
    if a <= 1e-12 and e <= 1e-12:
        return math.sqrt(_dot(r, r))
    if a <= 1e-12:
        s = 0.0
        t = _clamp(f / e, 0.0, 1.0)
    else:
        c = _dot(d1, r)
        if e <= 1e-12:
            t = 0.0
            s = _clamp(-c / a, 0.0, 1.0)
        else:
            b = _dot(d1, d2)
            denom = a * e - b * b
            s = 0.0
            if denom > 1e-12 * max(a * e, 1e-12):
                s = _clamp((b * f - c * e) / denom, 0.0, 1.0)
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = _clamp(-c / a, 0.0, 1.0)
            elif t > 1.0:
                t = 1.0
                s = _clamp((b - c) / a, 0.0, 1.0)
    dv = _sub(_add(p0, _mul(d1, s)), _add(q0, _mul(d2, t)))
    return math.sqrt(_dot(dv, dv))


@njit(cache=True)
def _flag_and_sign(a, b, c, d, eps):
    ab = _sub(b, a)
    cd = _sub(d, c)
    lab = math.sqrt(_dot(ab, ab))
    lcd = math.sqrt(_dot(cd, cd))
    if lab <= eps or lcd <= eps:
        return 1, 0.0
    w = _cross(cd, ab)
    triple = _dot(w, _sub(c, a))
    if abs(triple) <= eps * math.sqrt(_dot(w, w)) + eps * eps:
        m = _mul(_sub(_add(a, b), _add(c, d)), 0.5)
        if math.sqrt(_dot(m, m)) <= 0.5 * (lab + lcd) + eps:
            if _segment_distance(a, b, c, d) <= eps:
                return 2, 0.0
    sign = 1.0 if triple > 0 else (-1.0 if triple < 0 else 0.0)
    return 0, sign


@njit(cache=True, inline="always")
def _inv_norm(u):
    n = math.sqrt(_dot(u, u))
    return 1.0 / n if n > 0 else 1.0


@njit(cache=True, inline="always")
def _face_angle(u, v):
    # asin of the normalized dot product, written as atan2 to stay accurate near +-1
    w = _cross(u, v)
    return math.atan2(_dot(u, v), math.sqrt(_dot(w, w)))


@njit(cache=True)
def _writhe(a, b, c, d, eps):
    flag, sign = _flag_and_sign(a, b, c, d, eps)
    if flag != 0:
        return 0.0, flag
    ac = _sub(c, a)
    ad = _sub(d, a)
    bc = _sub(c, b)
    bd = _sub(d, b)
    u0 = _cross(ac, ad)
    u1 = _cross(ad, bd)
    u2 = _cross(bd, bc)
    u3 = _cross(bc, ac)
    omega = _face_angle(u0, u1) + _face_angle(u1, u2) + _face_angle(u2, u3) + _face_angle(u3, u0)
    return sign * omega * _INV_FOUR_PI, 0


@njit(cache=True)
def _face_term(n_k, n_next, n_prev, g_k, g_prev, inv_k, p, q):
    # gradient of omega w.r.t. the two edge vectors p, q spanning face normal u_k = p x q
    dn = _add(_mul(n_next, g_k), _mul(n_prev, g_prev))
    w = _mul(_sub(dn, _mul(n_k, _dot(dn, n_k))), inv_k)
    return _cross(q, w), _cross(w, p)


@njit(cache=True)
def _writhe_grad(a, b, c, d, eps):
    """Returns (ok, ga, gb, gc, gd); ok is False for flagged or coplanar inputs."""
    z = (0.0, 0.0, 0.0)
    flag, sign = _flag_and_sign(a, b, c, d, eps)
    if flag != 0:
        return False, z, z, z, z
    ac = _sub(c, a)
    ad = _sub(d, a)
    bc = _sub(c, b)
    bd = _sub(d, b)
    u0 = _cross(ac, ad)
    u1 = _cross(ad, bd)
    u2 = _cross(bd, bc)
    u3 = _cross(bc, ac)
    i0, i1, i2, i3 = _inv_norm(u0), _inv_norm(u1), _inv_norm(u2), _inv_norm(u3)
    n0, n1, n2, n3 = _mul(u0, i0), _mul(u1, i1), _mul(u2, i2), _mul(u3, i3)
    x0 = _clamp(_dot(n0, n1), -1.0, 1.0)
    x1 = _clamp(_dot(n1, n2), -1.0, 1.0)
    x2 = _clamp(_dot(n2, n3), -1.0, 1.0)
    x3 = _clamp(_dot(n3, n0), -1.0, 1.0)
    r0, r1, r2, r3 = 1.0 - x0 * x0, 1.0 - x1 * x1, 1.0 - x2 * x2, 1.0 - x3 * x3
    if r0 <= 0.0 or r1 <= 0.0 or r2 <= 0.0 or r3 <= 0.0:
        return False, z, z, z, z
    g0, g1, g2, g3 = 1.0 / math.sqrt(r0), 1.0 / math.sqrt(r1), 1.0 / math.sqrt(r2), 1.0 / math.sqrt(r3)
    gp0, gq0 = _face_term(n0, n1, n3, g0, g3, i0, ac, ad)
    gp1, gq1 = _face_term(n1, n2, n0, g1, g0, i1, ad, bd)
    gp2, gq2 = _face_term(n2, n3, n1, g2, g1, i2, bd, bc)
    gp3, gq3 = _face_term(n3, n0, n2, g3, g2, i3, bc, ac)
    s = sign * _INV_FOUR_PI
    gc = _mul(_add(_add(gp0, gq2), _add(gp3, gq3)), s)
    gd = _mul(_add(_add(gq0, gp1), _add(gq1, gp2)), s)
    ga = _mul(_add(_add(gp0, gq0), _add(gp1, gq3)), -s)
    gb = _mul(_add(_add(gq1, gp2), _add(gq2, gp3)), -s)
    return True, ga, gb, gc, gd


@njit(cache=True)
def batch_chain_gli(P, Q, start, end, chain, n_chains, eps):
    """Chain-pair GLI values and OR-ed flags for frames of P, Q (F, J, 3)."""
    F = P.shape[0]
    S = start.shape[0]
    vals = np.zeros((F, n_chains, n_chains))
    flags = np.zeros((F, n_chains, n_chains), dtype=np.int64)
    for f in range(F):
        for s in range(S):
            a = _v(P, f, start[s])
            b = _v(P, f, end[s])
            for t in range(S):
                v, fl = _writhe(a, b, _v(Q, f, start[t]), _v(Q, f, end[t]), eps)
                vals[f, chain[s], chain[t]] += v
                flags[f, chain[s], chain[t]] |= fl
    return vals, flags


@njit(cache=True)
def _accumulate(G, f, j, g, w):
    G[f, j, 0] += w * g[0]
    G[f, j, 1] += w * g[1]
    G[f, j, 2] += w * g[2]


@njit(cache=True)
def batch_chain_gli_grad(P, Q, start, end, chain, W, eps):
    """Gradients of sum(W * chain GLI) with respect to P and Q."""
    F = P.shape[0]
    S = start.shape[0]
    gP = np.zeros(P.shape)
    gQ = np.zeros(Q.shape)
    for f in range(F):
        for s in range(S):
            a = _v(P, f, start[s])
            b = _v(P, f, end[s])
            for t in range(S):
                w = W[f, chain[s], chain[t]]
                if w == 0.0:
                    continue
                ok, ga, gb, gc, gd = _writhe_grad(a, b, _v(Q, f, start[t]), _v(Q, f, end[t]), eps)
                if ok:
                    _accumulate(gP, f, start[s], ga, w)
                    _accumulate(gP, f, end[s], gb, w)
                    _accumulate(gQ, f, start[t], gc, w)
                    _accumulate(gQ, f, end[t], gd, w)
    return gP, gQ
