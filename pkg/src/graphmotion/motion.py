"""
Skeletal motion data model
==========================

Joint-position motion sequences, skeleton topology with the five serial
chains used for linking-number analysis, bounding boxes and motion file I/O.

All positions are world-space meters with +Y up and the ground at y = 0.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class DimensionError(ValueError):
    """Raised when array shapes disagree with a skeleton or with each other."""


class MotionParseError(ValueError):
    """Raised when a motion file is malformed."""


@dataclass(frozen=True)
class Skeleton:
    """Joint tree plus the five serial chains (torso+head, l-arm, r-arm, l-leg, r-leg)."""

    name: str
    joint_names: tuple[str, ...]
    parents: tuple[int | None, ...]
    chains: tuple[tuple[int, ...], ...]
    foot_joints: tuple[int, ...] = ()
    bones: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "joint_names", tuple(self.joint_names))
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "chains", tuple(tuple(int(j) for j in c) for c in self.chains))
        object.__setattr__(self, "foot_joints", tuple(int(j) for j in self.foot_joints))
        self._validate()
        bones = tuple((p, j) for j, p in enumerate(self.parents) if p is not None)
        object.__setattr__(self, "bones", bones)

    @property
    def joint_count(self) -> int:
        return len(self.joint_names)

    def _validate(self):
        n = len(self.joint_names)
        if len(self.parents) != n:
            raise ValueError("parents must have one entry per joint")
        if len(set(self.joint_names)) != n:
            raise ValueError("joint names must be unique")
        if n == 0 or self.parents[0] is not None:
            raise ValueError("joint 0 must be the root (parent None)")
        for j, p in enumerate(self.parents[1:], start=1):
            if p is None or not 0 <= p < j:
                # parent-before-child ordering guarantees a single tree rooted at 0
                raise ValueError(f"joint {j} must have a parent index in [0, {j})")
        if len(self.chains) != 5:
            raise ValueError("a skeleton needs exactly 5 serial chains")
        covered = set()
        for chain in self.chains:
            if not chain:
                raise ValueError("chains must be nonempty")
            for j in chain:
                if not 0 <= j < n:
                    raise ValueError(f"chain joint {j} out of range")
            for u, v in zip(chain[:-1], chain[1:]):
                if self.parents[v] != u and self.parents[u] != v:
                    raise ValueError(f"chain step {u}->{v} is not a bone")
            covered.update(chain)
        if covered != set(range(n)):
            raise ValueError(f"chains do not cover joints {sorted(set(range(n)) - covered)}")
        for j in self.foot_joints:
            if not 0 <= j < n:
                raise ValueError(f"foot joint {j} out of range")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "joint_names": list(self.joint_names),
            "parents": list(self.parents),
            "chains": [list(c) for c in self.chains],
            "foot_joints": list(self.foot_joints),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Skeleton":
        return cls(
            name=d.get("name", "inline"),
            joint_names=d["joint_names"],
            parents=d["parents"],
            chains=d["chains"],
            foot_joints=d.get("foot_joints", ()),
        )


# Default 22-joint humanoid. Index layout follows the common joint-based
# two-person datasets (pelvis-rooted, SMPL-like ordering).
_DEFAULT_JOINTS = (
    ("pelvis", None, (0.00, 0.95, 0.00)),
    ("left_hip", 0, (0.09, 0.88, 0.00)),
    ("right_hip", 0, (-0.09, 0.88, 0.00)),
    ("spine1", 0, (0.00, 1.07, 0.00)),
    ("left_knee", 1, (0.10, 0.50, 0.00)),
    ("right_knee", 2, (-0.10, 0.50, 0.00)),
    ("spine2", 3, (0.00, 1.20, 0.00)),
    ("left_ankle", 4, (0.10, 0.08, 0.00)),
    ("right_ankle", 5, (-0.10, 0.08, 0.00)),
    ("spine3", 6, (0.00, 1.33, 0.00)),
    ("left_foot", 7, (0.10, 0.02, 0.12)),
    ("right_foot", 8, (-0.10, 0.02, 0.12)),
    ("neck", 9, (0.00, 1.50, 0.00)),
    ("left_collar", 9, (0.08, 1.42, 0.00)),
    ("right_collar", 9, (-0.08, 1.42, 0.00)),
    ("head", 12, (0.00, 1.65, 0.00)),
    ("left_shoulder", 13, (0.18, 1.42, 0.00)),
    ("right_shoulder", 14, (-0.18, 1.42, 0.00)),
    ("left_elbow", 16, (0.45, 1.42, 0.00)),
    ("right_elbow", 17, (-0.45, 1.42, 0.00)),
    ("left_wrist", 18, (0.70, 1.42, 0.00)),
    ("right_wrist", 19, (-0.70, 1.42, 0.00)),
)

DEFAULT_CHAINS = (
    (0, 3, 6, 9, 12, 15),  # torso + head
    (13, 16, 18, 20),  # left arm
    (14, 17, 19, 21),  # right arm
    (1, 4, 7, 10),  # left leg
    (2, 5, 8, 11),  # right leg
)
CHAIN_NAMES = ("torso", "left_arm", "right_arm", "left_leg", "right_leg")

DEFAULT_SKELETON = Skeleton(
    name="default22",
    joint_names=tuple(j[0] for j in _DEFAULT_JOINTS),
    parents=tuple(j[1] for j in _DEFAULT_JOINTS),
    chains=DEFAULT_CHAINS,
    foot_joints=(10, 11),
)

_REGISTRY: dict[str, Skeleton] = {DEFAULT_SKELETON.name: DEFAULT_SKELETON}


def register_skeleton(skeleton: Skeleton) -> None:
    _REGISTRY[skeleton.name] = skeleton


def get_skeleton(name: str) -> Skeleton:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown skeleton {name!r}; known: {sorted(_REGISTRY)}") from None


def t_pose(skeleton: Skeleton = DEFAULT_SKELETON) -> np.ndarray:
    """Rest pose of the default skeleton, shape (J, 3)."""
    if skeleton.name != DEFAULT_SKELETON.name:
        raise ValueError("a rest pose is only defined for the default skeleton")
    return np.array([j[2] for j in _DEFAULT_JOINTS], dtype=float)


@dataclass(frozen=True)
class MotionSequence:
    """Joint positions over time, ``positions`` has shape (L, J, 3)."""

    positions: np.ndarray
    fps: float = 30.0

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 3 or pos.shape[2] != 3:
            raise DimensionError(f"positions must be (frames, joints, 3), got {pos.shape}")
        if not np.all(np.isfinite(pos)):
            f, j = np.argwhere(~np.isfinite(pos))[0][:2]
            raise ValueError(f"non-finite coordinate at frame {f}, joint {j}")
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def frame_count(self) -> int:
        return self.positions.shape[0]

    @property
    def joint_count(self) -> int:
        return self.positions.shape[1]

    @property
    def duration(self) -> float:
        return self.frame_count / self.fps

    def check_skeleton(self, skeleton: Skeleton) -> None:
        if self.joint_count != skeleton.joint_count:
            raise DimensionError(
                f"motion has {self.joint_count} joints, skeleton {skeleton.name!r} has {skeleton.joint_count}"
            )


@dataclass(frozen=True)
class MultiPersonMotion:
    characters: tuple[tuple[str, MotionSequence], ...]

    def __post_init__(self):
        chars = tuple((str(c), m) for c, m in self.characters)
        ids = [c for c, _ in chars]
        if len(set(ids)) != len(ids):
            raise ValueError("character ids must be unique")
        if chars:
            L, fps = chars[0][1].frame_count, chars[0][1].fps
            for cid, m in chars:
                if m.frame_count != L or m.fps != fps:
                    raise DimensionError(f"character {cid!r} differs in length or fps")
        object.__setattr__(self, "characters", chars)

    @property
    def ids(self) -> list[str]:
        return [c for c, _ in self.characters]

    def __getitem__(self, cid: str) -> MotionSequence:
        for c, m in self.characters:
            if c == cid:
                return m
        raise KeyError(cid)

    def __len__(self):
        return len(self.characters)

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray], fps: float = 30.0) -> "MultiPersonMotion":
        return cls(tuple((cid, MotionSequence(a, fps)) for cid, a in arrays.items()))


@dataclass(frozen=True)
class Aabb:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo, hi = np.asarray(self.min, dtype=float), np.asarray(self.max, dtype=float)
        if lo.shape != (3,) or hi.shape != (3,):
            raise DimensionError("Aabb corners must be 3D points")
        if np.any(lo > hi):
            raise ValueError("Aabb min must be <= max componentwise")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @property
    def volume(self) -> float:
        return float(np.prod(self.max - self.min))

    def overlap_volume(self, other: "Aabb") -> float:
        side = np.minimum(self.max, other.max) - np.maximum(self.min, other.min)
        return float(np.prod(np.clip(side, 0.0, None)))


def _pose_array(pose) -> np.ndarray:
    p = np.asarray(pose, dtype=float)
    if p.ndim != 2 or p.shape[1] != 3:
        raise DimensionError(f"pose must be (joints, 3), got {p.shape}")
    return p


def decompose_chains(pose, skeleton: Skeleton) -> list[np.ndarray]:
    """Split a pose into its five serial-chain polylines, each (k, 3)."""
    p = _pose_array(pose)
    if p.shape[0] != skeleton.joint_count:
        raise DimensionError(f"pose has {p.shape[0]} joints, skeleton has {skeleton.joint_count}")
    return [p[list(chain)] for chain in skeleton.chains]


def frame_aabb(pose, padding: float = 0.0) -> Aabb:
    p = _pose_array(pose)
    if p.shape[0] == 0:
        raise DimensionError("cannot bound an empty pose")
    return Aabb(p.min(axis=0) - padding, p.max(axis=0) + padding)


def root_trajectory(motion: MotionSequence) -> np.ndarray:
    return motion.positions[:, 0, :].copy()


# ---------------------------------------------------------------------------
# File I/O

BINARY_MAGIC = b"GMO1"
_BIN_HEADER = struct.Struct("<4sIId")


def save_motion(path, motion: MotionSequence, skeleton: Skeleton | str = DEFAULT_SKELETON, binary: bool | None = None):
    """Write a motion as JSON text, or the ``GMO1`` binary container for ``.gmo`` paths."""
    path = Path(path)
    if binary is None:
        binary = path.suffix == ".gmo"
    if binary:
        L, J, _ = motion.positions.shape
        with open(path, "wb") as fh:
            fh.write(_BIN_HEADER.pack(BINARY_MAGIC, J, L, float(motion.fps)))
            fh.write(np.ascontiguousarray(motion.positions, dtype="<f8").tobytes())
        return path
    if isinstance(skeleton, str):
        skeleton = get_skeleton(skeleton)
    motion.check_skeleton(skeleton)
    skel_field = skeleton.name if _REGISTRY.get(skeleton.name) == skeleton else skeleton.to_dict()
    fps = int(motion.fps) if float(motion.fps).is_integer() else motion.fps
    doc = {
        "fps": fps,
        "skeleton": skel_field,
        "joints": list(skeleton.joint_names),
        "frames": motion.positions.tolist(),
    }
    path.write_text(json.dumps(doc))
    return path


def load_motion(path) -> tuple[Skeleton | None, MotionSequence]:
    """Read a motion file; returns the resolved skeleton (None for unknown binary layouts)."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == BINARY_MAGIC:
        return _load_binary(path)
    try:
        doc = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MotionParseError(f"{path}: not a motion file ({exc})") from exc
    for key in ("fps", "skeleton", "frames"):
        if key not in doc:
            raise MotionParseError(f"{path}: missing field {key!r}")
    skel = doc["skeleton"]
    skeleton = get_skeleton(skel) if isinstance(skel, str) else Skeleton.from_dict(skel)
    if "joints" in doc and list(doc["joints"]) != list(skeleton.joint_names):
        raise MotionParseError(f"{path}: joint names do not match skeleton {skeleton.name!r}")
    frames = doc["frames"]
    J = skeleton.joint_count
    for f, pose in enumerate(frames):
        if len(pose) != J:
            raise MotionParseError(f"{path}: frame {f} has {len(pose)} joints, expected {J}")
        for j, xyz in enumerate(pose):
            if len(xyz) != 3 or any(v is None or not math.isfinite(v) for v in xyz):
                raise MotionParseError(f"{path}: invalid coordinate at frame {f}, joint {j}: {xyz}")
    arr = np.array(frames, dtype=float).reshape(len(frames), J, 3)
    return skeleton, MotionSequence(arr, float(doc["fps"]))


def _load_binary(path: Path) -> tuple[Skeleton | None, MotionSequence]:
    raw = path.read_bytes()
    if len(raw) < _BIN_HEADER.size:
        raise MotionParseError(f"{path}: truncated header")
    _, J, L, fps = _BIN_HEADER.unpack_from(raw)
    body = raw[_BIN_HEADER.size:]
    if len(body) != L * J * 3 * 8:
        raise MotionParseError(f"{path}: expected {L}x{J}x3 float64 payload, got {len(body)} bytes")
    arr = np.frombuffer(body, dtype="<f8").reshape(L, J, 3).astype(float)
    bad = np.argwhere(~np.isfinite(arr))
    if len(bad):
        f, j = bad[0][:2]
        raise MotionParseError(f"{path}: non-finite coordinate at frame {f}, joint {j}")
    skeleton = DEFAULT_SKELETON if J == DEFAULT_SKELETON.joint_count else None
    return skeleton, MotionSequence(arr, fps)


def stack_positions(motions: Sequence[MotionSequence]) -> np.ndarray:
    return np.stack([m.positions for m in motions])
