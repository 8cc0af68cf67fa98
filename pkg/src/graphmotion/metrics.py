"""
Interaction and motion-quality metrics
======================================

Bone penetration (PeneBone), contact counts, contact-frame rate, foot
skating and jitter, all computed on joint positions.

Bones are modelled as capsules: a segment between parent and child joint
with a fixed radius. Two bones of different characters penetrate by
``max(0, 2 * radius - d)`` where ``d`` is the segment-to-segment distance.

Normalization of PeneBone: per character pair, depths are summed over
bone pairs and frames and divided by the frame count; the scene value is
the sum over character pairs.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np

from .geometry import segment_distance
from .motion import DEFAULT_SKELETON, MotionSequence, MultiPersonMotion, Skeleton

BONE_RADIUS = 0.02
FOOT_HEIGHT = 0.05
SLIDE_DISTANCE = 0.025
UP_AXIS = 1


class MetricsWarning(UserWarning):
    """Pairwise metrics were skipped (fewer than two characters)."""


class MetricsConfigError(ValueError):
    """The skeleton lacks what a metric needs, e.g. foot joints."""


@dataclass
class PairMetrics:
    pene_bone: float
    contact: float
    cframe: float


@dataclass
class MetricsReport:
    """Scene-level metrics; skating and jitter are averaged over characters."""

    pene_bone: float
    contact: float
    cframe: float
    skating_ratio: float
    jitter: float
    pairs: dict[str, PairMetrics] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        # names carry the capsule qualifier since no body mesh is involved
        d["contact_bone"] = d.pop("contact")
        d["cframe_bone"] = d.pop("cframe")
        return d


def _characters(multi) -> list[tuple[str, np.ndarray]]:
    if isinstance(multi, MultiPersonMotion):
        return [(c, m.positions) for c, m in multi.characters]
    if isinstance(multi, Mapping):
        return [(str(c), np.asarray(m.positions if isinstance(m, MotionSequence) else m, dtype=float)) for c, m in multi.items()]
    raise TypeError(f"expected MultiPersonMotion or mapping, got {type(multi).__name__}")


def _bone_endpoints(pos: np.ndarray, skeleton: Skeleton):
    bones = np.array(skeleton.bones, dtype=int).reshape(-1, 2)
    return pos[:, bones[:, 0]], pos[:, bones[:, 1]]


def pair_penetration(pos_a: np.ndarray, pos_b: np.ndarray, skeleton: Skeleton = DEFAULT_SKELETON, radius: float = BONE_RADIUS) -> np.ndarray:
    """Penetration depth of every inter-character bone pair, shape (L, B, B)."""
    if pos_a.shape != pos_b.shape:
        raise ValueError(f"character shapes differ: {pos_a.shape} vs {pos_b.shape}")
    if pos_a.shape[1] != skeleton.joint_count:
        raise ValueError(f"motion has {pos_a.shape[1]} joints, skeleton has {skeleton.joint_count}")
    a0, a1 = _bone_endpoints(pos_a, skeleton)
    b0, b1 = _bone_endpoints(pos_b, skeleton)
    d = segment_distance(a0[:, :, None], a1[:, :, None], b0[:, None, :], b1[:, None, :])
    return np.maximum(0.0, 2.0 * radius - d)


def _pair_depths(multi, skeleton: Skeleton, radius: float):
    chars = _characters(multi)
    if len(chars) < 2:
        warnings.warn("pairwise metrics need at least two characters; returning 0", MetricsWarning, stacklevel=3)
        return []
    out = []
    # sorted ids make the result independent of character order
    for (ca, pa), (cb, pb) in itertools.combinations(sorted(chars, key=lambda x: x[0]), 2):
        out.append((ca, cb, pair_penetration(pa, pb, skeleton, radius)))
    return out


def _pair_metrics(depth: np.ndarray) -> PairMetrics:
    L = depth.shape[0]
    per_frame = (depth > 0).sum(axis=(1, 2))
    return PairMetrics(
        pene_bone=float(depth.sum() / L),
        contact=float(per_frame.mean()),
        cframe=float(100.0 * np.mean(per_frame > 0)),
    )


def pene_bone(multi, skeleton: Skeleton = DEFAULT_SKELETON, radius: float = BONE_RADIUS) -> float:
    """Summed bone penetration depth in meters, normalized per frame and summed over pairs."""
    return float(sum(_pair_metrics(d).pene_bone for _, _, d in _pair_depths(multi, skeleton, radius)))


def contact_and_cframe(multi, skeleton: Skeleton = DEFAULT_SKELETON, radius: float = BONE_RADIUS) -> tuple[float, float]:
    """Mean penetrating bone pairs per frame and percent of frames with any penetration."""
    return _contact_counts(_pair_depths(multi, skeleton, radius))


def _contact_counts(depths) -> tuple[float, float]:
    if not depths:
        return 0.0, 0.0
    count = sum((d > 0).sum(axis=(1, 2)) for _, _, d in depths)
    return float(count.mean()), float(100.0 * np.mean(count > 0))


def skating_ratio(motion, skeleton: Skeleton = DEFAULT_SKELETON, height: float = FOOT_HEIGHT, slide: float = SLIDE_DISTANCE) -> float:
    """Fraction of frame transitions in which a grounded foot slides.

    A transition counts when either foot joint is below ``height`` and moved
    more than ``slide`` horizontally since the previous frame.
    """
    pos = motion.positions if isinstance(motion, MotionSequence) else np.asarray(motion, dtype=float)
    if not skeleton.foot_joints:
        raise MetricsConfigError(f"skeleton {skeleton.name!r} defines no foot joints")
    if pos.shape[0] < 2:
        raise ValueError("skating ratio needs at least 2 frames")
    feet = pos[:, list(skeleton.foot_joints)]
    horiz = [k for k in range(3) if k != UP_AXIS]
    step = np.linalg.norm(np.diff(feet[..., horiz], axis=0), axis=-1)
    grounded = feet[1:, :, UP_AXIS] < height
    skating = np.any(grounded & (step > slide), axis=1)
    return float(skating.mean())


def jitter(motion, fps: float | None = None) -> float:
    """Mean magnitude of the third finite difference, in m/s^3 (scaled by fps^3)."""
    if isinstance(motion, MotionSequence):
        pos, fps = motion.positions, motion.fps if fps is None else fps
    else:
        pos = np.asarray(motion, dtype=float)
        fps = 30.0 if fps is None else fps
    if pos.shape[0] < 4:
        raise ValueError(f"jitter needs at least 4 frames, got {pos.shape[0]}")
    jerk = np.diff(pos, n=3, axis=0) * fps**3
    return float(np.linalg.norm(jerk, axis=-1).mean())


def evaluate(multi, skeleton: Skeleton = DEFAULT_SKELETON, radius: float = BONE_RADIUS) -> MetricsReport:
    """All metrics for a scene. Single-character scenes report zeros for pairwise metrics."""
    chars = _characters(multi)
    fps = multi.characters[0][1].fps if isinstance(multi, MultiPersonMotion) and len(multi) else 30.0
    notes = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", MetricsWarning)
        depths = _pair_depths(multi, skeleton, radius)
    for w in caught:
        notes.append(str(w.message))
        warnings.warn(w.message, w.category, stacklevel=2)
    pairs = {f"{a}|{b}": _pair_metrics(d) for a, b, d in depths}
    contact, cframe = _contact_counts(depths)
    skate = [skating_ratio(p, skeleton) for _, p in chars] if skeleton.foot_joints else []
    jit = [jitter(p, fps) for _, p in chars if p.shape[0] >= 4]
    return MetricsReport(
        pene_bone=float(sum(p.pene_bone for p in pairs.values())),
        contact=contact,
        cframe=cframe,
        skating_ratio=float(np.mean(skate)) if skate else 0.0,
        jitter=float(np.mean(jit)) if jit else 0.0,
        pairs=pairs,
        warnings=notes,
    )


def per_frame_penetration(multi, skeleton: Skeleton = DEFAULT_SKELETON, radius: float = BONE_RADIUS) -> list[dict]:
    """Rows (frame, pair, depth) of summed bone penetration, for CSV export."""
    rows = []
    for a, b, d in _pair_depths(multi, skeleton, radius):
        for f, v in enumerate(d.sum(axis=(1, 2))):
            rows.append({"frame": f, "pair": f"{a}|{b}", "depth": float(v)})
    return rows
