"""
Pairwise Interaction Graph
==========================

Directed conditioning factors between characters, optionally restricted to
half-open frame windows [start, end). A factor ``A -> B`` means B's motion
is denoised conditioned on A's.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CONDITION_MODES = ("noisy", "clean")


class GraphError(ValueError):
    """Raised for graph/motion mismatches or invalid graph usage."""


class CoverageError(GraphError):
    """A character has frames that no factor prediction covers."""


@dataclass(frozen=True)
class Factor:
    source: str
    target: str
    window: tuple[int, int] | None = None
    prompt: str | None = None
    condition: str = "noisy"
    clean_motion: str | None = None

    def frames(self, total_frames: int) -> tuple[int, int]:
        return self.window if self.window is not None else (0, total_frames)

    def covers(self, frame: int, total_frames: int) -> bool:
        start, end = self.frames(total_frames)
        return start <= frame < end

    @property
    def key(self) -> str:
        return f"{self.source}->{self.target}"


@dataclass(frozen=True)
class PairwiseInteractionGraph:
    characters: tuple[str, ...]
    factors: tuple[Factor, ...]
    total_frames: int
    prompt: str = ""

    def __post_init__(self):
        object.__setattr__(self, "characters", tuple(str(c) for c in self.characters))
        object.__setattr__(self, "factors", tuple(self.factors))

    def prompt_for(self, factor: Factor) -> str:
        return factor.prompt if factor.prompt is not None else self.prompt

    @property
    def fixed_characters(self) -> tuple[str, ...]:
        """Characters supplied as clean motions (sources of clean-mode factors)."""
        fixed = {f.source for f in self.factors if f.condition == "clean"}
        return tuple(c for c in self.characters if c in fixed)

    def sorted_factors(self) -> list[Factor]:
        # canonical order so averaging and reports do not depend on input order
        return sorted(self.factors, key=lambda f: (f.target, f.source, f.frames(self.total_frames)))

    def connected_mask(self, a: str, b: str) -> np.ndarray:
        """Per-frame mask of frames where a factor links a and b in either direction."""
        mask = np.zeros(self.total_frames, dtype=bool)
        for f in self.factors:
            if {f.source, f.target} == {a, b}:
                start, end = f.frames(self.total_frames)
                mask[max(start, 0):min(end, self.total_frames)] = True
        return mask

    def pairs(self) -> list[tuple[str, str]]:
        ids = sorted(self.characters)
        return list(itertools.combinations(ids, 2))

    @classmethod
    def from_dict(cls, doc: dict) -> "PairwiseInteractionGraph":
        factors = []
        for f in doc.get("factors", []):
            frames = f.get("frames")
            factors.append(
                Factor(
                    source=str(f["from"]),
                    target=str(f["to"]),
                    window=tuple(int(x) for x in frames) if frames is not None else None,
                    prompt=f.get("prompt"),
                    condition=f.get("condition", "noisy"),
                    clean_motion=f.get("clean_motion"),
                )
            )
        return cls(
            characters=tuple(doc["characters"]),
            factors=tuple(factors),
            total_frames=int(doc["frames"]),
            prompt=doc.get("prompt", ""),
        )

    def to_dict(self) -> dict:
        out = []
        for f in self.factors:
            d = {"from": f.source, "to": f.target}
            if f.window is not None:
                d["frames"] = list(f.window)
            if f.prompt is not None:
                d["prompt"] = f.prompt
            d["condition"] = f.condition
            if f.clean_motion is not None:
                d["clean_motion"] = f.clean_motion
            out.append(d)
        return {"frames": self.total_frames, "prompt": self.prompt, "characters": list(self.characters), "factors": out}


def load_graph(path) -> PairwiseInteractionGraph:
    return PairwiseInteractionGraph.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    severity: str = "error"
    character: str | None = None
    frames: tuple[int, int] | None = None

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open [start, end) runs of True values."""
    padded = np.concatenate([[False], mask, [False]]).astype(int)
    edges = np.flatnonzero(np.diff(padded))
    return [(int(s), int(e)) for s, e in zip(edges[::2], edges[1::2])]


def validate_graph(graph: PairwiseInteractionGraph, allow_uncovered: bool = False) -> list[Violation]:
    """Check a graph and return every problem found (errors and warnings)."""
    out: list[Violation] = []
    L = graph.total_frames
    ids = list(graph.characters)
    seen = set()
    for c in ids:
        if c in seen:
            out.append(Violation("duplicate_id", f"character id {c!r} appears more than once", character=c))
        seen.add(c)
    if L <= 0:
        out.append(Violation("frames", f"total frames must be positive, got {L}"))
    known = set(ids)
    for f in graph.factors:
        if f.source not in known or f.target not in known:
            out.append(Violation("unknown_id", f"factor {f.key} references an unknown character"))
        if f.source == f.target:
            out.append(Violation("self_loop", f"factor {f.key} conditions a character on itself", character=f.source))
        if f.window is not None:
            start, end = f.window
            if not (0 <= start < end <= L):
                out.append(Violation("window", f"factor {f.key} window [{start}, {end}) outside [0, {L})", frames=(start, end)))
        if f.condition not in CONDITION_MODES:
            out.append(Violation("condition", f"factor {f.key} has unknown condition mode {f.condition!r}"))

    fixed = set(graph.fixed_characters)
    for c in fixed:
        if any(f.source == c and f.condition != "clean" for f in graph.factors):
            out.append(Violation("mixed_condition", f"character {c!r} is both a clean and a noisy condition source", character=c))

    if L > 0:
        for c in ids:
            if c in fixed:
                continue
            covered = np.zeros(L, dtype=bool)
            for f in graph.factors:
                if f.target == c:
                    start, end = f.frames(L)
                    covered[max(start, 0):min(end, L)] = True
            for start, end in _runs(~covered):
                out.append(
                    Violation(
                        "uncovered",
                        f"character {c!r} has no incoming factor for frames [{start}, {end})",
                        severity="warning" if allow_uncovered else "error",
                        character=c,
                        frames=(start, end),
                    )
                )

    components = connected_components(graph)
    if len(components) > 1:
        out.append(
            Violation(
                "disconnected",
                f"graph has {len(components)} components {components}; characters in different components "
                "receive no correlation from the sampling factors",
                severity="warning",
            )
        )
    return out


def connected_components(graph: PairwiseInteractionGraph) -> list[list[str]]:
    parent = {c: c for c in graph.characters}

    def find(c):
        while parent[c] != c:
            parent[c] = parent[parent[c]]
            c = parent[c]
        return c

    for f in graph.factors:
        if f.source in parent and f.target in parent:
            parent[find(f.source)] = find(f.target)
    groups: dict[str, list[str]] = {}
    for c in graph.characters:
        groups.setdefault(find(c), []).append(c)
    return list(groups.values())


def incoming_factors(graph: PairwiseInteractionGraph, character: str, frame: int) -> list[Factor]:
    if character not in graph.characters:
        raise KeyError(f"unknown character {character!r}")
    return [f for f in graph.sorted_factors() if f.target == character and f.covers(frame, graph.total_frames)]


@dataclass(frozen=True)
class FactorPrediction:
    factor: Factor
    target: str
    window: tuple[int, int]
    segment: np.ndarray = field(repr=False)

    def __post_init__(self):
        start, end = self.window
        if self.segment.shape[0] != end - start:
            raise ValueError(f"segment has {self.segment.shape[0]} frames, window spans {end - start}")


def average_predictions(preds: list[FactorPrediction], total_frames: int) -> np.ndarray:
    """Per-frame mean of the clean predictions covering each frame."""
    if not preds:
        raise CoverageError("no predictions to average")
    if len(preds) == 1 and preds[0].window == (0, total_frames):
        return preds[0].segment
    shape = (total_frames,) + preds[0].segment.shape[1:]
    total = np.zeros(shape)
    count = np.zeros(total_frames)
    for p in preds:
        start, end = p.window
        total[start:end] += p.segment
        count[start:end] += 1
    if np.any(count == 0):
        gaps = _runs(count == 0)
        raise CoverageError(f"character {preds[0].target!r} has uncovered frames {gaps}")
    return total / count.reshape((-1,) + (1,) * (len(shape) - 1))


def unconnected_pairs(graph: PairwiseInteractionGraph, frame: int | None = None) -> list[tuple[str, str]]:
    """Unordered character pairs with no factor in either direction.

    With ``frame`` given, connectivity is evaluated at that frame only.
    """
    out = []
    for a, b in graph.pairs():
        mask = graph.connected_mask(a, b)
        linked = mask[frame] if frame is not None else mask.any()
        if not linked:
            out.append((a, b))
    return out


def unconnected_windows(graph: PairwiseInteractionGraph) -> dict[tuple[str, str], list[tuple[int, int]]]:
    """For each pair, the frame windows during which it is unconnected."""
    out = {}
    for a, b in graph.pairs():
        runs = _runs(~graph.connected_mask(a, b))
        if runs:
            out[(a, b)] = runs
    return out
