"""
Gauss linking integral
======================

Closed-form linking contribution of segment pairs, chain-pair sums, a
midpoint-rule quadrature oracle of the double line integral, and gradients.

Values are normalized so that two disjoint closed polygons give their
integer linking number; each segment pair contributes a value in
[-0.5, 0.5]. The sign follows the line integral

    G = 1/(4 pi) * int int (dr1 x dr2) . (r1 - r2) / |r1 - r2|^3

so a right-handed Hopf link evaluates to +1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .geometry import segment_distance
from .motion import DimensionError, Skeleton

try:
    from . import _gli_kernels
except ImportError:  # pragma: no cover - numba missing, fall back to numpy
    _gli_kernels = None

EPS = 1e-9
_FOUR_PI = 4.0 * np.pi


class GliFlag(enum.IntFlag):
    OK = 0
    DEGENERATE = 1  # zero-length segment
    SINGULAR = 2  # segments touch, integrand undefined


class SingularGeometryError(ValueError):
    """Raised by the quadrature oracle when the two chains touch."""


def _cross(u, v):
    # component-first layout: u, v are sequences (x, y, z) of arrays
    return (u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0])


def _dot(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def _sub(u, v):
    return (u[0] - v[0], u[1] - v[1], u[2] - v[2])


def _scale(u, s):
    return (u[0] * s, u[1] * s, u[2] * s)


def _components(p):
    return (p[..., 0], p[..., 1], p[..., 2])


def _flags(a, b, c, d, parts, eps):
    shape = parts["omega"].shape
    len_ab = np.sqrt(_dot(parts["v_ab"], parts["v_ab"]))
    len_cd = np.sqrt(_dot(parts["v_cd"], parts["v_cd"]))
    degenerate = np.broadcast_to((len_ab <= eps) | (len_cd <= eps), shape)
    # touching segments are coplanar (|triple| small) or parallel; only test those
    cross_norm = np.sqrt(_dot(parts["cross_abcd"], parts["cross_abcd"]))
    cand = (np.abs(parts["triple"]) <= eps * cross_norm + eps**2) & ~degenerate
    flags = np.where(degenerate, int(GliFlag.DEGENERATE), 0)
    if np.any(cand):
        cand = np.atleast_1d(cand)
        pts = [np.broadcast_to(p, shape + (3,)).reshape(-1, 3)[cand.ravel()] for p in (a, b, c, d)]
        hit = np.zeros(cand.size, dtype=bool)
        # segments whose bounding spheres are apart cannot touch
        gap = np.linalg.norm(pts[0] + pts[1] - pts[2] - pts[3], axis=-1) * 0.5
        reach = 0.5 * (np.linalg.norm(pts[1] - pts[0], axis=-1) + np.linalg.norm(pts[3] - pts[2], axis=-1)) + eps
        near = gap <= reach
        idx = np.flatnonzero(cand.ravel())[near]
        hit[idx] = segment_distance(*(q[near] for q in pts)) <= eps
        flags = flags | np.where(hit.reshape(flags.shape), int(GliFlag.SINGULAR), 0)
    return flags


def _writhe_parts(a, b, c, d, normals: bool = False):
    a, b, c, d = (_components(p) for p in (a, b, c, d))
    v_ab = _sub(b, a)
    v_cd = _sub(d, c)
    v_ac = _sub(c, a)
    v_ad = _sub(d, a)
    v_bc = _sub(c, b)
    v_bd = _sub(d, b)
    # face normals of the tetrahedron abcd
    pq = ((v_ac, v_ad), (v_ad, v_bd), (v_bd, v_bc), (v_bc, v_ac))
    u = [_cross(p, q) for p, q in pq]
    norms = [np.sqrt(_dot(uk, uk)) for uk in u]
    inv = [1.0 / np.where(nk > 0, nk, 1.0) for nk in norms]
    x = [np.clip(_dot(u[k], u[(k + 1) % 4]) * (inv[k] * inv[(k + 1) % 4]), -1.0, 1.0) for k in range(4)]
    # asin of the normalized dot product, written as atan2 to stay accurate near +-1
    omega = sum(
        np.arctan2(_dot(u[k], u[(k + 1) % 4]), np.sqrt(_dot(w, w)))
        for k in range(4)
        for w in [_cross(u[k], u[(k + 1) % 4])]
    )
    cross_abcd = _cross(v_cd, v_ab)
    triple = _dot(cross_abcd, v_ac)
    parts = dict(v_ab=v_ab, v_cd=v_cd, pq=pq, inv=inv, x=x, omega=omega, sign=np.sign(triple), triple=triple, cross_abcd=cross_abcd)
    if normals:
        parts["n"] = [_scale(uk, ik) for uk, ik in zip(u, inv)]
    return parts


def segment_writhe(a, b, c, d, eps: float = EPS, return_flags: bool = False):
    """Linking contribution of segments ab and cd.

    Broadcasts over leading dimensions of the (..., 3) endpoint arrays.
    Zero-length or touching segments contribute 0 and are flagged.
    """
    a, b, c, d = (np.asarray(p, dtype=float) for p in (a, b, c, d))
    parts = _writhe_parts(a, b, c, d)
    value = parts["sign"] * parts["omega"] / _FOUR_PI
    flags = _flags(a, b, c, d, parts, eps)
    value = np.where(flags != 0, 0.0, value)
    if value.ndim == 0:
        value = float(value)
        flags = GliFlag(int(flags))
    if return_flags:
        return value, flags
    return value


def segment_writhe_gradient(a, b, c, d, eps: float = EPS, return_flags: bool = False):
    """Partial derivatives of :func:`segment_writhe`, shape (..., 4, 3) for (a, b, c, d).

    Flagged pairs and exactly coplanar pairs, where the face-angle formula
    is singular, get a zero gradient.
    """
    a, b, c, d = (np.asarray(p, dtype=float) for p in (a, b, c, d))
    parts = _writhe_parts(a, b, c, d, normals=True)
    n, x, inv, pq = parts["n"], parts["x"], parts["inv"], parts["pq"]

    with np.errstate(divide="ignore", invalid="ignore"):
        # coplanar configurations have |x| = 1; their gradients are masked below
        g = [1.0 / np.sqrt(1.0 - xk * xk) for xk in x]
        # dOmega/dn_k: n_k appears in the terms (k-1, k) and (k, k+1)
        dn = [
            tuple(g[k] * n[(k + 1) % 4][i] + g[(k - 1) % 4] * n[(k - 1) % 4][i] for i in range(3))
            for k in range(4)
        ]
        # project through normalization: d n / d u = (I - n n^T) / |u|
        w = []
        for k in range(4):
            proj = _dot(dn[k], n[k])
            w.append(tuple((dn[k][i] - proj * n[k][i]) * inv[k] for i in range(3)))

        scale = parts["sign"] / _FOUR_PI
        zero = np.zeros_like(scale)
        ga, gb, gc, gd = ([zero] * 3 for _ in range(4))

        def add(acc, v, sgn=1.0):
            return [acc[i] + sgn * v[i] for i in range(3)]

        # u = p x q: d(w.u)/dp = q x w, d(w.u)/dq = w x p
        (p0, q0), (p1, q1), (p2, q2), (p3, q3) = pq
        gp, gq = _cross(q0, w[0]), _cross(w[0], p0)  # p = c-a, q = d-a
        gc, gd = add(gc, gp), add(gd, gq)
        ga = add(add(ga, gp, -1.0), gq, -1.0)
        gp, gq = _cross(q1, w[1]), _cross(w[1], p1)  # p = d-a, q = d-b
        gd = add(add(gd, gp), gq)
        ga, gb = add(ga, gp, -1.0), add(gb, gq, -1.0)
        gp, gq = _cross(q2, w[2]), _cross(w[2], p2)  # p = d-b, q = c-b
        gd, gc = add(gd, gp), add(gc, gq)
        gb = add(add(gb, gp, -1.0), gq, -1.0)
        gp, gq = _cross(q3, w[3]), _cross(w[3], p3)  # p = c-b, q = c-a
        gc = add(add(gc, gp), gq)
        gb, ga = add(gb, gp, -1.0), add(ga, gq, -1.0)

        grad = np.stack([np.stack(gv, axis=-1) for gv in (ga, gb, gc, gd)], axis=-2) * scale[..., None, None]
    flags = _flags(a, b, c, d, parts, eps)
    bad = (flags != 0) | ~np.all(np.isfinite(grad), axis=(-2, -1))
    grad = np.where(bad[..., None, None], 0.0, grad)
    if flags.ndim == 0:
        flags = GliFlag(int(flags))
    if return_flags:
        return grad, flags
    return grad


def finite_difference_writhe_gradient(a, b, c, d, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of :func:`segment_writhe`, for debugging. Shape (4, 3)."""
    pts = np.array([a, b, c, d], dtype=float)
    grad = np.zeros((4, 3))
    for i in range(4):
        for k in range(3):
            hi = pts.copy()
            lo = pts.copy()
            hi[i, k] += h
            lo[i, k] -= h
            grad[i, k] = (segment_writhe(*hi) - segment_writhe(*lo)) / (2 * h)
    return grad


def _polyline(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[1] != 3 or p.shape[0] < 1:
        raise DimensionError(f"polyline must be (k>=1, 3), got {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("polyline has non-finite coordinates")
    return p


def chain_gli(s1, s2, eps: float = EPS, return_flags: bool = False):
    """GLI of two polylines as the sum of all segment-pair contributions.

    Polylines with fewer than two points have no segments and give 0.
    """
    p1, p2 = _polyline(s1), _polyline(s2)
    if len(p1) < 2 or len(p2) < 2:
        return (0.0, GliFlag.OK) if return_flags else 0.0
    t, flags = segment_writhe(
        p1[:-1, None, :], p1[1:, None, :], p2[None, :-1, :], p2[None, 1:, :], eps=eps, return_flags=True
    )
    value = float(np.sum(t))
    if return_flags:
        return value, GliFlag(int(np.bitwise_or.reduce(flags, axis=None)))
    return value


def gli_numeric_oracle(s1, s2, subdivisions: int, eps: float = EPS) -> float:
    """Midpoint-rule quadrature of the linking double integral.

    Each segment is split into ``subdivisions`` equal pieces. Raises
    :class:`SingularGeometryError` if the chains come within ``eps``.
    """
    if subdivisions < 1:
        raise ValueError("subdivisions must be >= 1")
    p1, p2 = _polyline(s1), _polyline(s2)
    if len(p1) < 2 or len(p2) < 2:
        return 0.0
    dist = segment_distance(p1[:-1, None], p1[1:, None], p2[None, :-1], p2[None, 1:])
    if np.min(dist) <= eps:
        raise SingularGeometryError(f"chains touch (min distance {np.min(dist):.3g})")

    def midpoints(p):
        seg = p[1:] - p[:-1]
        frac = (np.arange(subdivisions) + 0.5) / subdivisions
        pts = p[:-1, None, :] + frac[None, :, None] * seg[:, None, :]
        dr = np.repeat(seg / subdivisions, subdivisions, axis=0)
        return pts.reshape(-1, 3), dr

    r1, dr1 = midpoints(p1)
    r2, dr2 = midpoints(p2)
    total = 0.0
    # block over r1 to bound memory
    block = max(1, 2_000_000 // max(len(r2), 1))
    for start in range(0, len(r1), block):
        sl = slice(start, start + block)
        diff = r1[sl, None, :] - r2[None, :, :]
        crs = np.cross(dr1[sl, None, :], dr2[None, :, :])
        num = np.einsum("ijk,ijk->ij", crs, diff)
        total += float(np.sum(num / np.linalg.norm(diff, axis=-1) ** 3))
    return total / _FOUR_PI


@dataclass(frozen=True)
class GliMatrix:
    """5x5 chain-pair GLI values; entry (a, b) pairs chain a of one character with chain b of the other."""

    values: np.ndarray
    flags: np.ndarray

    @property
    def T(self) -> "GliMatrix":
        return GliMatrix(self.values.T.copy(), self.flags.T.copy())


class ChainSegments:
    """Segment tables for a skeleton's chains, used for batched chain-pair GLI."""

    def __init__(self, skeleton: Skeleton):
        start, end, chain = [], [], []
        for k, c in enumerate(skeleton.chains):
            for u, v in zip(c[:-1], c[1:]):
                start.append(u)
                end.append(v)
                chain.append(k)
        self.skeleton = skeleton
        self.start = np.array(start, dtype=int)
        self.end = np.array(end, dtype=int)
        self.chain = np.array(chain, dtype=int)
        n_chains = len(skeleton.chains)
        self.onehot = np.zeros((len(start), n_chains))
        self.onehot[np.arange(len(start)), self.chain] = 1.0
        J = skeleton.joint_count
        self.scatter_start = np.zeros((len(start), J))
        self.scatter_start[np.arange(len(start)), self.start] = 1.0
        self.scatter_end = np.zeros((len(start), J))
        self.scatter_end[np.arange(len(start)), self.end] = 1.0

    def __len__(self):
        return len(self.start)


_SEGMENT_CACHE: dict[int, ChainSegments] = {}


def chain_segments(skeleton: Skeleton) -> ChainSegments:
    key = id(skeleton)
    cached = _SEGMENT_CACHE.get(key)
    if cached is None or cached.skeleton is not skeleton:
        cached = _SEGMENT_CACHE[key] = ChainSegments(skeleton)
    return cached


def _flat_frames(pos_i, pos_j, lead):
    J = pos_i.shape[-2:]
    P = np.ascontiguousarray(np.broadcast_to(pos_i, lead + J), dtype=float).reshape(-1, *J)
    Q = np.ascontiguousarray(np.broadcast_to(pos_j, lead + pos_j.shape[-2:]), dtype=float).reshape(-1, *pos_j.shape[-2:])
    return P, Q


def batch_pair_gli(pos_i: np.ndarray, pos_j: np.ndarray, skeleton: Skeleton, eps: float = EPS):
    """Chain-pair GLI for matching frames of two characters.

    ``pos_i`` and ``pos_j`` are (..., J, 3). Returns (values, flags) with
    shape (..., 5, 5).
    """
    seg = chain_segments(skeleton)
    n = len(skeleton.chains)
    lead = np.broadcast_shapes(pos_i.shape[:-2], pos_j.shape[:-2])
    if len(seg) == 0:
        return np.zeros(lead + (n, n)), np.zeros(lead + (n, n), dtype=int)
    if _gli_kernels is not None:
        P, Q = _flat_frames(pos_i, pos_j, lead)
        vals, flags = _gli_kernels.batch_chain_gli(P, Q, seg.start, seg.end, seg.chain, n, float(eps))
        return vals.reshape(lead + (n, n)), flags.reshape(lead + (n, n))
    a = pos_i[..., seg.start, None, :]
    b = pos_i[..., seg.end, None, :]
    c = pos_j[..., None, seg.start, :]
    d = pos_j[..., None, seg.end, :]
    t, flags = segment_writhe(a, b, c, d, eps=eps, return_flags=True)
    values = seg.onehot.T @ t @ seg.onehot
    fl = np.zeros(lead + (n, n), dtype=int)
    if np.any(flags):
        oh = seg.onehot.astype(bool)
        for ka in range(n):
            for kb in range(n):
                sub = flags[..., oh[:, ka], :][..., oh[:, kb]]
                if sub.size:
                    fl[..., ka, kb] = np.bitwise_or.reduce(sub.reshape(lead + (-1,)), axis=-1)
    return values, fl


def batch_pair_gli_grad(pos_i: np.ndarray, pos_j: np.ndarray, weights: np.ndarray, skeleton: Skeleton, eps: float = EPS):
    """Gradients of sum(weights * GLI) with respect to both characters' joints.

    ``weights`` has shape (..., 5, 5) matching :func:`batch_pair_gli`.
    Returns (grad_i, grad_j), each shaped like the joint arrays.
    """
    seg = chain_segments(skeleton)
    grad_i = np.zeros(np.broadcast_shapes(pos_i.shape, weights.shape[:-2] + pos_i.shape[-2:]))
    grad_j = np.zeros(np.broadcast_shapes(pos_j.shape, weights.shape[:-2] + pos_j.shape[-2:]))
    if len(seg) == 0:
        return grad_i, grad_j
    if _gli_kernels is not None:
        lead = grad_i.shape[:-2]
        P, Q = _flat_frames(pos_i, pos_j, lead)
        W = np.ascontiguousarray(np.broadcast_to(weights, lead + weights.shape[-2:]), dtype=float).reshape(-1, *weights.shape[-2:])
        gP, gQ = _gli_kernels.batch_chain_gli_grad(P, Q, seg.start, seg.end, seg.chain, W, float(eps))
        return gP.reshape(grad_i.shape), gQ.reshape(grad_j.shape)
    a = pos_i[..., seg.start, None, :]
    b = pos_i[..., seg.end, None, :]
    c = pos_j[..., None, seg.start, :]
    d = pos_j[..., None, seg.end, :]
    g = segment_writhe_gradient(a, b, c, d, eps=eps)  # (..., S, S, 4, 3)
    wseg = seg.onehot @ weights @ seg.onehot.T
    # contract over the partner's segments, then scatter segment ends to joints
    ga = np.einsum("...st,...stk->...sk", wseg, g[..., 0, :])
    gb = np.einsum("...st,...stk->...sk", wseg, g[..., 1, :])
    gc = np.einsum("...st,...stk->...tk", wseg, g[..., 2, :])
    gd = np.einsum("...st,...stk->...tk", wseg, g[..., 3, :])
    grad_i = grad_i + seg.scatter_start.T @ ga + seg.scatter_end.T @ gb
    grad_j = grad_j + seg.scatter_start.T @ gc + seg.scatter_end.T @ gd
    return grad_i, grad_j


def pose_pair_gli(pose_i, pose_j, skeleton: Skeleton, eps: float = EPS) -> GliMatrix:
    """5x5 matrix of chain-pair GLI between two characters' poses."""
    pi = np.asarray(pose_i, dtype=float)
    pj = np.asarray(pose_j, dtype=float)
    for p in (pi, pj):
        if p.shape != (skeleton.joint_count, 3):
            raise DimensionError(f"pose shape {p.shape} does not match skeleton ({skeleton.joint_count}, 3)")
    values, flags = batch_pair_gli(pi, pj, skeleton, eps=eps)
    return GliMatrix(values, flags)
