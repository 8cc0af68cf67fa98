"""
Guidance losses
===============

Temporal GLI-consistency loss for connected characters, bounding-box
proxemics loss for unconnected characters, and the simple box-overlap
contact loss used as an ablation baseline. Every loss returns its value
together with the gradient with respect to the first character's joints;
the partner motion is treated as a constant.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np

from .gli import batch_pair_gli, batch_pair_gli_grad
from .graph import GraphError, PairwiseInteractionGraph
from .motion import DimensionError, MotionSequence, MultiPersonMotion, Skeleton


@dataclass(frozen=True)
class GuidanceLossConfig:
    """Loss weights and per-loss timestep windows ``[low, high)``."""

    gli_threshold: float = 0.4
    gli_weight: float = 1.0
    proxemics_weight: float = 1.0
    contact_weight: float = 0.0
    aabb_padding: float = 0.0
    root_distance_min: float = 0.0
    softness: float = 0.01
    gli_window: tuple[int, int] = (0, 100)
    proxemics_window: tuple[int, int] = (0, 700)
    contact_window: tuple[int, int] = (0, 100)

    def validate(self, T: int | None = None) -> None:
        if self.gli_threshold < 0:
            raise ValueError("gli_threshold must be >= 0")
        for name in ("gli_weight", "proxemics_weight", "contact_weight", "softness", "root_distance_min"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("gli_window", "proxemics_window", "contact_window"):
            low, high = getattr(self, name)
            upper = T + 1 if T is not None else np.inf
            if not 0 <= low <= high <= upper:
                raise ValueError(f"{name} {low, high} must satisfy 0 <= low <= high <= T + 1")

    def active(self, loss: str, timestep: int | None) -> bool:
        if timestep is None:
            return True
        low, high = getattr(self, f"{loss}_window")
        return low <= timestep < high

    @classmethod
    def from_dict(cls, d: dict) -> "GuidanceLossConfig":
        kw = dict(d)
        for name in ("gli_window", "proxemics_window", "contact_window"):
            if name in kw:
                kw[name] = tuple(int(x) for x in kw[name])
        return cls(**kw)

    def to_dict(self) -> dict:
        return asdict(self)


def _as_positions(motion) -> np.ndarray:
    if isinstance(motion, MotionSequence):
        return motion.positions
    arr = np.asarray(motion, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 3:
        raise DimensionError(f"motion must be (frames, joints, 3), got {arr.shape}")
    return arr


def _check_pair(pi: np.ndarray, pj: np.ndarray) -> None:
    if pi.shape[0] != pj.shape[0]:
        raise DimensionError(f"motions differ in length: {pi.shape[0]} vs {pj.shape[0]}")


# ---------------------------------------------------------------------------
# GLI loss


def gli_loss_pair(pi: np.ndarray, pj: np.ndarray, skeleton: Skeleton, threshold: float, frame_mask=None):
    """Hinge on frame-to-frame GLI jumps; returns (value, grad_i, grad_j, flagged_entries).

    A transition f-1 -> f is counted when both frames are in ``frame_mask``.
    """
    _check_pair(pi, pj)
    L = pi.shape[0]
    if L < 2:
        raise DimensionError("GLI loss needs at least 2 frames")
    G, flags = batch_pair_gli(pi, pj, skeleton)
    delta = G[1:] - G[:-1]
    excess = np.abs(delta) - threshold
    valid = (flags[1:] == 0) & (flags[:-1] == 0)
    if frame_mask is not None:
        m = np.asarray(frame_mask, dtype=bool)
        valid &= (m[1:] & m[:-1])[:, None, None]
    active = (excess > 0) & valid
    value = float(np.sum(excess[active]))
    grad_i = np.zeros_like(pi)
    grad_j = np.zeros_like(pj)
    if value > 0:
        s = np.where(active, np.sign(delta), 0.0)
        w = np.zeros_like(G)
        w[1:] += s
        w[:-1] -= s
        frames = np.flatnonzero(np.any(w != 0, axis=(1, 2)))
        gi, gj = batch_pair_gli_grad(pi[frames], pj[frames], w[frames], skeleton)
        grad_i[frames] = gi
        grad_j[frames] = gj
    return value, grad_i, grad_j, int(np.count_nonzero(flags))


def gli_loss(motion_i, motion_j, skeleton: Skeleton, cfg: GuidanceLossConfig = GuidanceLossConfig(), frame_mask=None):
    """Sum over consecutive frames and chain pairs of relu(|dGLI| - threshold).

    Returns ``(value, gradient)`` with the gradient taken w.r.t. ``motion_i``.
    """
    value, gi, _, _ = gli_loss_pair(_as_positions(motion_i), _as_positions(motion_j), skeleton, cfg.gli_threshold, frame_mask)
    return value, gi


# ---------------------------------------------------------------------------
# Bounding-box losses


def soft_max(x: np.ndarray, tau: float, axis: int = -1):
    """Boltzmann-weighted mean along ``axis`` and its derivative.

    Equals the exact max when the maximum is unique or tied and the other
    entries sit many ``tau`` below it; ``tau = 0`` gives the exact max with
    an argmax subgradient.
    """
    x = np.asarray(x, dtype=float)
    xmax = np.max(x, axis=axis, keepdims=True)
    if tau == 0:
        w = (x == xmax).astype(float)
        w /= w.sum(axis=axis, keepdims=True)
        return np.squeeze(xmax, axis=axis), w
    e = np.exp((x - xmax) / tau)
    p = e / e.sum(axis=axis, keepdims=True)
    val = np.sum(p * x, axis=axis, keepdims=True)
    deriv = p * (1.0 + (x - val) / tau)
    return np.squeeze(val, axis=axis), deriv


def soft_min(x: np.ndarray, tau: float, axis: int = -1):
    val, deriv = soft_max(-np.asarray(x, dtype=float), tau, axis)
    return -val, deriv


def _soft_boxes(p: np.ndarray, tau: float, padding: float):
    """Per-frame soft AABBs of (L, J, 3) joints; returns lo, hi (L, 3) and their joint derivatives (L, J, 3)."""
    hi, dhi = soft_max(p, tau, axis=1)
    lo, dlo = soft_min(p, tau, axis=1)
    return lo - padding, hi + padding, dlo, dhi


def overlap_pair(pi: np.ndarray, pk: np.ndarray, tau: float, padding: float, boxes=None):
    """Per-frame soft overlap volume of two characters' boxes with joint gradients.

    ``boxes`` optionally supplies precomputed :func:`_soft_boxes` results for
    (pi, pk). Returns (volumes (L,), grad_i (L, J, 3), grad_k (L, J, 3)).
    """
    _check_pair(pi, pk)
    box_i, box_k = boxes if boxes is not None else (_soft_boxes(pi, tau, padding), _soft_boxes(pk, tau, padding))
    lo_i, hi_i, dlo_i, dhi_i = box_i
    lo_k, hi_k, dlo_k, dhi_k = box_k
    top, dtop = soft_min(np.stack([hi_i, hi_k], axis=-1), tau, axis=-1)
    bot, dbot = soft_max(np.stack([lo_i, lo_k], axis=-1), tau, axis=-1)
    side = top - bot
    pos = np.clip(side, 0.0, None)
    vol = np.prod(pos, axis=-1)
    # d vol / d side_axis = product of the other two sides (zero where side <= 0)
    others = np.stack([pos[:, 1] * pos[:, 2], pos[:, 0] * pos[:, 2], pos[:, 0] * pos[:, 1]], axis=-1)
    dside = np.where(side > 0, others, 0.0)
    grad_i = dside[:, None, :] * (dtop[:, None, :, 0] * dhi_i - dbot[:, None, :, 0] * dlo_i)
    grad_k = dside[:, None, :] * (dtop[:, None, :, 1] * dhi_k - dbot[:, None, :, 1] * dlo_k)
    return vol, grad_i, grad_k


def root_distance_pair(pi: np.ndarray, pk: np.ndarray, min_distance: float):
    """Per-frame relu(min_distance - |root_i - root_k|) with joint gradients."""
    diff = pi[:, 0] - pk[:, 0]
    dist = np.linalg.norm(diff, axis=-1)
    pen = np.clip(min_distance - dist, 0.0, None)
    unit = diff / np.where(dist > 0, dist, 1.0)[:, None]
    g = np.where((pen > 0)[:, None], -unit, 0.0)
    grad_i = np.zeros_like(pi)
    grad_k = np.zeros_like(pk)
    grad_i[:, 0] = g
    grad_k[:, 0] = -g
    return pen, grad_i, grad_k


def proxemics_loss_pair(pi, pk, cfg: GuidanceLossConfig, frame_mask=None, boxes=None):
    """Returns (value, grad_i, grad_k) of the proxemics loss summed over masked frames."""
    vol, gi, gk = overlap_pair(pi, pk, cfg.softness, cfg.aabb_padding, boxes)
    per_frame = vol
    if cfg.root_distance_min > 0:
        pen, ri, rk = root_distance_pair(pi, pk, cfg.root_distance_min)
        per_frame = vol + pen
        gi = gi + ri
        gk = gk + rk
    if frame_mask is not None:
        m = np.asarray(frame_mask, dtype=bool)
        per_frame = np.where(m, per_frame, 0.0)
        gi = np.where(m[:, None, None], gi, 0.0)
        gk = np.where(m[:, None, None], gk, 0.0)
    return float(np.sum(per_frame)), gi, gk


def proxemics_loss(motion_i, motion_k, skeleton: Skeleton | None = None, cfg: GuidanceLossConfig = GuidanceLossConfig(), frame_mask=None):
    """Per-frame box overlap volume plus optional root-distance hinge, summed over frames."""
    value, gi, _ = proxemics_loss_pair(_as_positions(motion_i), _as_positions(motion_k), cfg, frame_mask)
    return value, gi


def simple_contact_loss_pair(pi, pj, cfg: GuidanceLossConfig, frame_mask=None, boxes=None):
    vol, gi, gj = overlap_pair(pi, pj, cfg.softness, cfg.aabb_padding, boxes)
    if frame_mask is not None:
        m = np.asarray(frame_mask, dtype=bool)
        vol = np.where(m, vol, 0.0)
        gi = np.where(m[:, None, None], gi, 0.0)
        gj = np.where(m[:, None, None], gj, 0.0)
    return float(np.sum(vol)), gi, gj


def simple_contact_loss(motion_i, motion_j, skeleton: Skeleton | None = None, cfg: GuidanceLossConfig = GuidanceLossConfig(), frame_mask=None):
    """Box-overlap volume between directly interacting characters (no root term)."""
    value, gi, _ = simple_contact_loss_pair(_as_positions(motion_i), _as_positions(motion_j), cfg, frame_mask)
    return value, gi


# ---------------------------------------------------------------------------
# Graph-level sum and reporting


@dataclass
class GuidanceRecord:
    timestep: int | None
    pair: tuple[str, str]
    loss: str
    value: float | None
    grad_norm: float
    active: bool = True

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pair"] = list(self.pair)
        return d


@dataclass
class GuidanceReport:
    records: list[GuidanceRecord] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)

    def add(self, record: GuidanceRecord) -> None:
        self.records.append(record)

    def extend(self, other: "GuidanceReport") -> None:
        self.records.extend(other.records)
        self.events.extend(other.events)

    def select(self, loss: str | None = None, pair: tuple[str, str] | None = None) -> list[GuidanceRecord]:
        return [r for r in self.records if (loss is None or r.loss == loss) and (pair is None or r.pair == tuple(pair))]

    def to_jsonl(self) -> str:
        lines = [json.dumps(r.to_dict()) for r in self.records]
        lines += [json.dumps({"event": e}) for e in self.events]
        return "\n".join(lines) + ("\n" if lines else "")

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_jsonl())


def sum_graph_losses(
    multi: MultiPersonMotion | dict[str, np.ndarray],
    graph: PairwiseInteractionGraph,
    skeleton: Skeleton,
    cfg: GuidanceLossConfig = GuidanceLossConfig(),
    timestep: int | None = None,
    record: bool = True,
    fixed: Iterable[str] = (),
) -> tuple[dict[str, np.ndarray], GuidanceReport]:
    """Weighted guidance gradients per character for predicted clean motions.

    GLI (and the optional contact baseline) apply on frames where a pair is
    linked by a factor; proxemics applies on frames where it is not. Losses
    outside their timestep window are skipped and reported with zero
    gradient. Characters in ``fixed`` receive no gradient.
    """
    if isinstance(multi, MultiPersonMotion):
        pos = {c: m.positions for c, m in multi.characters}
    else:
        pos = {c: np.asarray(m, dtype=float) for c, m in multi.items()}
    if set(pos) != set(graph.characters):
        raise GraphError(f"graph characters {sorted(graph.characters)} do not match motions {sorted(pos)}")
    for c, p in pos.items():
        if p.shape[0] != graph.total_frames:
            raise GraphError(f"character {c!r} has {p.shape[0]} frames, graph expects {graph.total_frames}")
    fixed = set(fixed)
    grads = {c: np.zeros_like(p) for c, p in pos.items()}
    report = GuidanceReport()

    def emit(pair, loss, value, gi, gj, weight, active=True):
        a, b = pair
        norm = 0.0
        if active and weight > 0 and value:
            if a not in fixed:
                grads[a] += weight * gi
            if b not in fixed:
                grads[b] += weight * gj
            norm = float(np.sqrt(np.sum((weight * gi) ** 2) + np.sum((weight * gj) ** 2)))
        if record:
            report.add(GuidanceRecord(timestep, pair, loss, value, norm, active))

    box_cache = {}

    def boxes(a, b):
        for c in (a, b):
            if c not in box_cache:
                box_cache[c] = _soft_boxes(pos[c], cfg.softness, cfg.aabb_padding)
        return box_cache[a], box_cache[b]

    for a, b in graph.pairs():
        if a in fixed and b in fixed:
            continue
        linked = graph.connected_mask(a, b)
        pa, pb = pos[a], pos[b]
        if linked.any():
            if cfg.gli_weight > 0:
                if cfg.active("gli", timestep):
                    v, gi, gj, _ = gli_loss_pair(pa, pb, skeleton, cfg.gli_threshold, linked)
                    emit((a, b), "gli", v, gi, gj, cfg.gli_weight)
                else:
                    emit((a, b), "gli", None, None, None, cfg.gli_weight, active=False)
            if cfg.contact_weight > 0:
                if cfg.active("contact", timestep):
                    v, gi, gj = simple_contact_loss_pair(pa, pb, cfg, linked, boxes(a, b))
                    emit((a, b), "contact", v, gi, gj, cfg.contact_weight)
                else:
                    emit((a, b), "contact", None, None, None, cfg.contact_weight, active=False)
        if not linked.all() and cfg.proxemics_weight > 0:
            if cfg.active("proxemics", timestep):
                v, gi, gj = proxemics_loss_pair(pa, pb, cfg, ~linked, boxes(a, b))
                emit((a, b), "proxemics", v, gi, gj, cfg.proxemics_weight)
            else:
                emit((a, b), "proxemics", None, None, None, cfg.proxemics_weight, active=False)
    return grads, report
