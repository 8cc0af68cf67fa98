"""
Canonical test motions and synthetic scenarios
==============================================

Small geometric fixtures with exactly known answers (Hopf links, unit
cubes, sliding feet, parallel bones, wrap-around arms) and multi-character
scenes built on :class:`~graphmotion.denoisers.SyntheticInteractionDenoiser`.

Values marked "derived" were computed once with the closed-form GLI,
cross-checked against the quadrature oracle, and frozen here.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .denoisers import SyntheticInteractionDenoiser
from .graph import Factor, PairwiseInteractionGraph
from .motion import DEFAULT_SKELETON, MotionSequence, Skeleton, register_skeleton, save_motion, t_pose

# 5-joint closed path: joint 4 is placed on joint 0 so chain 0 is a closed loop.
LOOP_SKELETON = Skeleton(
    name="loop5",
    joint_names=("p0", "p1", "p2", "p3", "p4"),
    parents=(None, 0, 1, 2, 3),
    chains=((0, 1, 2, 3, 4), (0,), (0,), (0,), (0,)),
)

# unit-cube corners as a joint tree
CUBE_SKELETON = Skeleton(
    name="cube8",
    joint_names=tuple(f"c{i}" for i in range(8)),
    parents=(None, 0, 1, 2, 0, 4, 5, 6),
    chains=((0, 1, 2, 3), (0, 4, 5, 6, 7), (0,), (0,), (0,)),
)

# single bone
BONE_SKELETON = Skeleton(
    name="bone2",
    joint_names=("a", "b"),
    parents=(None, 0),
    chains=((0, 1), (0,), (0,), (1,), (1,)),
    foot_joints=(0, 1),
)

for _s in (LOOP_SKELETON, CUBE_SKELETON, BONE_SKELETON):
    register_skeleton(_s)

CUBE_CORNERS = np.array(
    [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]], dtype=float
)

# Arc span (radians) at which A's left arm, wrapped around B's torso, has
# chain GLI exactly -0.3 (derived: root of the closed form, oracle 0.3000025).
SIGN_FLIP_SPAN = 2.038747890397469
# GLI(left arm of A, torso of B) for a 270 degree wrap (derived; the
# quadrature oracle gives -0.709810 at 64 and -0.709793 at 256 subdivisions)
WRAP_GLI = -0.709791900428387


# ---------------------------------------------------------------------------
# Closed loops


def hopf_link() -> tuple[np.ndarray, np.ndarray]:
    """Two closed squares forming a right-handed Hopf link (linking number +1)."""
    s1 = np.array([[-1, -1, 0], [1, -1, 0], [1, 1, 0], [-1, 1, 0], [-1, -1, 0]], dtype=float)
    s2 = np.array([[0, 0, -1], [0, 0, 1], [2, 0, 1], [2, 0, -1], [0, 0, -1]], dtype=float)
    return s1, s2


def unlinked_loops(distance: float = 10.0) -> tuple[np.ndarray, np.ndarray]:
    s1, s2 = hopf_link()
    return s1, s2 + [distance, 0.0, 0.0]


def hopf_motions(frames: int = 1) -> dict[str, np.ndarray]:
    """Hopf-link squares as two ``loop5`` characters."""
    s1, s2 = hopf_link()
    return {"A": np.repeat(s1[None], frames, axis=0), "B": np.repeat(s2[None], frames, axis=0)}


# ---------------------------------------------------------------------------
# Boxes, feet, bones


def cube_motions(frames: int = 10, shift=(0.0, 0.0, 0.0)) -> dict[str, np.ndarray]:
    """Unit-cube point clouds; B is A moved by ``shift``."""
    a = np.repeat(CUBE_CORNERS[None], frames, axis=0)
    return {"A": a, "B": a + np.asarray(shift, dtype=float)}


def skating_motion(frames: int = 30, height: float = 0.03, slide: float = 0.03) -> np.ndarray:
    """Rest pose translated so the feet sit at ``height`` and slide ``slide`` m per frame along x."""
    pose = t_pose()
    pose = pose + [0.0, height - pose[list(DEFAULT_SKELETON.foot_joints), 1].min(), 0.0]
    steps = np.arange(frames)[:, None, None] * np.array([slide, 0.0, 0.0])
    return pose[None] + steps


def constant_velocity_motion(frames: int = 30, velocity=(0.5, 0.0, 0.2), fps: float = 30.0) -> np.ndarray:
    t = np.arange(frames)[:, None, None] / fps
    return t_pose()[None] + t * np.asarray(velocity, dtype=float)


def parallel_bones(frames: int = 4, distance: float = 0.02) -> dict[str, np.ndarray]:
    """Two unit bones along x, ``distance`` apart along y."""
    a = np.repeat(np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])[None], frames, axis=0)
    return {"A": a, "B": a + [0.0, distance, 0.0]}


def coincident_skeletons(frames: int = 4) -> dict[str, np.ndarray]:
    pose = np.repeat(t_pose()[None], frames, axis=0)
    return {"A": pose, "B": pose.copy()}


def shared_joint_bone_pairs(skeleton: Skeleton = DEFAULT_SKELETON) -> int:
    """Ordered (bone of A, bone of B) pairs at distance 0 when two copies coincide.

    Two bones touch exactly when they are the same bone or share a joint.
    """
    bones = skeleton.bones
    return sum(1 for p in bones for q in bones if set(p) & set(q))


# ---------------------------------------------------------------------------
# Wrap-around poses


def wrap_around_pose(span: float = 1.5 * np.pi, radius: float = 0.15, height: float = 1.3):
    """A's left arm bent into an arc of angle ``span`` around B's torso axis.

    B stands in the rest pose at the origin; A faces it from +z at 0.45 m.
    Returns (pose_a, pose_b), each (J, 3).
    """
    b = t_pose()
    a = t_pose() + [0.0, 0.0, 0.45]
    ang = np.pi / 2 + np.linspace(0.0, span, 4)
    a[[13, 16, 18, 20]] = np.stack([radius * np.cos(ang), np.full(4, height), radius * np.sin(ang)], axis=-1)
    return a, b


def gli_jump_motions() -> dict[str, np.ndarray]:
    """Two frames whose (left arm A, torso B) GLI flips from +0.3 to -0.3.

    Frame 0 is the mirror image (z -> -z) of frame 1; B is static.
    """
    a1, b = wrap_around_pose(SIGN_FLIP_SPAN)
    a0 = a1 * [1.0, 1.0, -1.0]
    return {"A": np.stack([a0, a1]), "B": np.stack([b, b])}


# ---------------------------------------------------------------------------
# Synthetic multi-character scenes


def ring_positions(n: int = 3, radius: float = 1.2) -> np.ndarray:
    ang = np.deg2rad(90.0 + 360.0 / n * np.arange(n))
    return np.stack([radius * np.cos(ang), np.zeros(n), radius * np.sin(ang)], axis=-1)


def three_cycle(frames: int = 64, radius: float = 1.2, gain: float = 0.5):
    """A -> B -> C -> A cycle whose fixed point places the roots on a ring.

    Returns (graph, denoiser, relative_roots) where ``relative_roots`` are
    the fixed-point roots minus their mean. The cycle's offsets sum to zero,
    so the denoiser preserves the mean root and only relative positions are
    determined.
    """
    ids = ("A", "B", "C")
    ring = ring_positions(3, radius)
    factors = [Factor(ids[k], ids[(k + 1) % 3]) for k in range(3)]
    offsets = {(f.source, f.target): ring[ids.index(f.target)] - ring[ids.index(f.source)] for f in factors}
    den = SyntheticInteractionDenoiser(t_pose(), offsets=offsets, gain=gain)
    graph = PairwiseInteractionGraph(ids, factors, frames, "three people pass a ball around")
    return graph, den, ring - ring.mean(axis=0)


def two_versus_one(frames: int = 64, gap: float = 0.15, distance: float = 1.0):
    """Ch.1 faces Ch.2 and Ch.3; the unconnected pair (2, 3) lands ``gap`` apart and collides."""
    ids = ("1", "2", "3")
    factors = [Factor("2", "1"), Factor("1", "2"), Factor("1", "3")]
    offsets = {
        ("2", "1"): [0.0, 0.0, -distance],
        ("1", "2"): [0.0, 0.0, distance],
        ("1", "3"): [gap, 0.0, distance],
    }
    den = SyntheticInteractionDenoiser(t_pose(), offsets=offsets)
    return PairwiseInteractionGraph(ids, factors, frames, "two people fight against one"), den


def four_character(frames: int = 64, gap: float = 0.15, distance: float = 1.0):
    """Ch.1 at the centre of a star; Ch.2-4 all want the same spot and collide pairwise."""
    ids = ("1", "2", "3", "4")
    factors = [Factor("2", "1"), Factor("1", "2"), Factor("1", "3"), Factor("1", "4")]
    offsets = {
        ("2", "1"): [0.0, 0.0, -distance],
        ("1", "2"): [0.0, 0.0, distance],
        ("1", "3"): [gap, 0.0, distance],
        ("1", "4"): [-gap, 0.0, distance],
    }
    den = SyntheticInteractionDenoiser(t_pose(), offsets=offsets)
    return PairwiseInteractionGraph(ids, factors, frames, "three people surround one"), den


def hook_approach(angle: float, r_end: float, frames: int = 64, approach_frames: int = 48, start: float = 0.8):
    """Two-person scene: B walks into A's hooked left arm (the wrap-around pose).

    B's root moves from ``start`` m to ``r_end`` m from the hook centre along
    direction ``angle`` (radians, in the xz-plane) over ``approach_frames``
    frames, then holds. Ending inside the arc (``r_end`` = 0) from the closed
    side forces B's torso through A's arm; ending at about 0.18 m grazes it.
    Returns (graph, denoiser).
    """
    a_pose, b_pose = wrap_around_pose()
    ca = a_pose.mean(axis=0) - a_pose[0]
    cb = b_pose.mean(axis=0) - b_pose[0]
    hold = frames - approach_frames
    d = np.concatenate([np.linspace(start, r_end, approach_frames), np.full(hold, r_end)])
    rel = (b_pose[0] - a_pose[0]) + d[:, None] * np.array([np.cos(angle), 0.0, np.sin(angle)])
    # offsets are measured from the partner's implied root, see synthetic_predict_x0
    offsets = {("A", "B"): rel - (ca - cb), ("B", "A"): -rel - (cb - ca)}
    den = SyntheticInteractionDenoiser(t_pose(), offsets=offsets, base_poses={"A": a_pose, "B": b_pose})
    graph = PairwiseInteractionGraph(("A", "B"), [Factor("A", "B"), Factor("B", "A")], frames, "hug")
    return graph, den


def time_varying_graph(frames: int = 200) -> PairwiseInteractionGraph:
    """Ch.1 follows Ch.2 for the first half and Ch.3 for the second."""
    half = frames // 2
    factors = [
        Factor("2", "1", (0, half), "talk"),
        Factor("3", "1", (half, frames), "dance"),
        Factor("1", "2"),
        Factor("1", "3"),
    ]
    return PairwiseInteractionGraph(("1", "2", "3"), factors, frames, "switch partners")


# ---------------------------------------------------------------------------
# Fixture set on disk

_README = """# Fixture set

Deterministic fixtures written by `graphmotion make-fixtures`.

| file | skeleton | expected | provenance |
|------|----------|----------|------------|
| hopf_A.json, hopf_B.json | loop5 | GLI(chain 0, chain 0) = +1 | linking number of a Hopf link |
| unlinked_A.json, unlinked_B.json | loop5 | GLI = 0 | disjoint unlinked loops |
| cube_A.json, cube_B.json | cube8 | proxemics loss 10.0 (10 frames x unit overlap) | box geometry |
| skating.json | default22 | skating ratio 1.0 | feet at 0.03 m sliding 0.03 m/frame |
| parallel_A.json, parallel_B.json | bone2 | PeneBone 0.02 | 2 x 0.02 - 0.02 per frame |
| coincident_A.json, coincident_B.json | default22 | cframe 100, contact {pairs} | shared-joint bone-pair count |
| wrap_A.json, wrap_B.json | default22 | GLI(left arm A, torso B) = {wrap:.6f} | closed form, quadrature-checked |
| jump_A.json, jump_B.json | default22 | GLI loss 0.2 (threshold 0.4) | +0.3 -> -0.3 sign flip |
"""


def make_fixtures(out_dir) -> dict[str, Path]:
    """Write the canonical fixture set and a README of expected values."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    def put(name, arr, skeleton):
        written[name] = save_motion(out / f"{name}.json", MotionSequence(arr), skeleton)

    for k, v in hopf_motions().items():
        put(f"hopf_{k}", v, LOOP_SKELETON)
    s1, s2 = unlinked_loops()
    put("unlinked_A", s1[None], LOOP_SKELETON)
    put("unlinked_B", s2[None], LOOP_SKELETON)
    for k, v in cube_motions().items():
        put(f"cube_{k}", v, CUBE_SKELETON)
    put("skating", skating_motion(), DEFAULT_SKELETON)
    for k, v in parallel_bones().items():
        put(f"parallel_{k}", v, BONE_SKELETON)
    for k, v in coincident_skeletons().items():
        put(f"coincident_{k}", v, DEFAULT_SKELETON)
    a, b = wrap_around_pose()
    put("wrap_A", a[None], DEFAULT_SKELETON)
    put("wrap_B", b[None], DEFAULT_SKELETON)
    for k, v in gli_jump_motions().items():
        put(f"jump_{k}", v, DEFAULT_SKELETON)

    expected = {
        "hopf": 1.0,
        "unlinked": 0.0,
        "cube_proxemics": 10.0,
        "skating_ratio": 1.0,
        "parallel_pene_bone": 0.02,
        "coincident_cframe": 100.0,
        "coincident_contact": shared_joint_bone_pairs(),
        "wrap_gli": WRAP_GLI,
        "jump_gli_loss": 0.2,
    }
    (out / "expected.json").write_text(json.dumps(expected, indent=2))
    (out / "README.md").write_text(_README.format(pairs=shared_joint_bone_pairs(), wrap=WRAP_GLI))
    written["expected"] = out / "expected.json"
    written["README"] = out / "README.md"
    return written
