"""
Analytic denoisers
==================

Stand-ins for pretrained two-person models that satisfy the x0-prediction
contract exactly, so the sampling machinery can be verified end to end.

``GaussianPriorDenoiser`` returns the exact posterior mean E[x0 | x_t] for
an independent Gaussian prior. ``SyntheticInteractionDenoiser`` places a
rigid pose at a fixed offset from its conditioning partner; it is affine in
(x_t, condition) so coupled fixed points can be solved by hand.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .diffusion import ConditionSpec, NoiseSchedule


class DenoiserContractError(ValueError):
    """The denoiser was called without the inputs its contract requires."""


def gaussian_predict_x0(x_t, t: int, condition: ConditionSpec | None, schedule: NoiseSchedule, mean, std):
    """Posterior mean of x0 ~ N(mean, std^2) given x_t; the condition is ignored."""
    ab = schedule.alpha_bars[t]
    s2 = np.square(std)
    return (np.sqrt(ab) * s2 * x_t + (1.0 - ab) * mean) / (ab * s2 + (1.0 - ab))


class GaussianPriorDenoiser:
    def __init__(self, schedule: NoiseSchedule, mean=0.0, std=1.0):
        if np.any(np.asarray(std) <= 0):
            raise ValueError("std must be positive")
        self.schedule = schedule
        self.mean = np.asarray(mean, dtype=float)
        self.std = np.asarray(std, dtype=float)

    def predict_x0(self, x_t, t, condition=None):
        return gaussian_predict_x0(np.asarray(x_t, dtype=float), t, condition, self.schedule, self.mean, self.std)


def synthetic_predict_x0(x_t, t: int, condition: ConditionSpec | None, base_pose, offset, gain: float):
    """Rigid ``base_pose`` whose root moves ``gain`` of the way from the pose's implied root to partner root + offset.

    The implied root of a pose is its joint centroid minus the base pose's
    centroid-to-root offset, so every joint of x_t (not just joint 0)
    shifts the prediction. ``offset`` is (3,) or per-frame (l, 3).
    """
    if condition is None or condition.other_motion is None:
        raise DenoiserContractError("the synthetic interaction denoiser needs a condition motion")
    base = np.asarray(base_pose, dtype=float)
    rel = base - base[0]
    centroid_offset = rel.mean(axis=0)
    x_t = np.asarray(x_t, dtype=float)
    other = np.asarray(condition.other_motion, dtype=float)
    if other.shape[:-2] != x_t.shape[:-2] or x_t.shape[-2:] != base.shape:
        raise DenoiserContractError(f"shape mismatch: x_t {x_t.shape}, condition {other.shape}, base {base.shape}")
    current = x_t.mean(axis=-2) - centroid_offset
    partner = other.mean(axis=-2) - centroid_offset
    target = partner + offset
    root = current + gain * (target - current)
    return rel + root[..., None, :]


class SyntheticInteractionDenoiser:
    """Affine interaction model: each character settles at an offset from its partner.

    ``offsets`` maps ``(source, target)`` to a (3,) displacement or a
    (total_frames, 3) per-frame displacement, falling back to
    ``default_offset``. ``base_poses`` optionally gives a target character
    its own rigid pose.
    """

    def __init__(
        self,
        base_pose,
        default_offset=(1.0, 0.0, 0.0),
        offsets: Mapping[tuple[str, str], np.ndarray] | None = None,
        gain: float = 0.5,
        base_poses: Mapping[str, np.ndarray] | None = None,
    ):
        if not 0 < gain <= 1:
            raise ValueError("gain must lie in (0, 1]")
        self.base_pose = np.asarray(base_pose, dtype=float)
        self.base_poses = {str(k): np.asarray(v, dtype=float) for k, v in (base_poses or {}).items()}
        self.default_offset = np.asarray(default_offset, dtype=float)
        self.offsets = {tuple(k): np.asarray(v, dtype=float) for k, v in (offsets or {}).items()}
        self.gain = float(gain)

    def offset_for(self, condition: ConditionSpec) -> np.ndarray:
        off = self.offsets.get((condition.source, condition.target), self.default_offset)
        if off.ndim == 2:
            if condition.frame_window is not None:
                start, end = condition.frame_window
                off = off[start:end]
            return off
        return off

    def predict_x0(self, x_t, t, condition):
        if condition is None:
            raise DenoiserContractError("the synthetic interaction denoiser needs a condition")
        base = self.base_poses.get(condition.target, self.base_pose)
        return synthetic_predict_x0(x_t, t, condition, base, self.offset_for(condition), self.gain)


def build_denoiser(spec: dict, schedule: NoiseSchedule, base_pose=None):
    """Construct a denoiser from a config section ``{"kind": ..., params}``."""
    kind = spec.get("kind", "synthetic")
    if kind == "gaussian":
        return GaussianPriorDenoiser(schedule, mean=spec.get("mean", 0.0), std=spec.get("std", 1.0))
    if kind == "synthetic":
        if base_pose is None:
            raise ValueError("synthetic denoiser needs a base pose")
        offsets = {}
        for key, val in spec.get("offsets", {}).items():
            src, tgt = key.split("->")
            offsets[(src.strip(), tgt.strip())] = np.asarray(val, dtype=float)
        return SyntheticInteractionDenoiser(
            base_pose,
            default_offset=spec.get("default_offset", (1.0, 0.0, 0.0)),
            offsets=offsets,
            gain=float(spec.get("gain", 0.5)),
        )
    raise ValueError(f"unknown denoiser kind {kind!r}")
