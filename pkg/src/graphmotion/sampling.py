"""
Graph-driven multi-character sampling
=====================================

Runs one reverse-diffusion chain per character. At every timestep each
factor of the interaction graph is evaluated with the denoiser, the clean
predictions covering a frame are averaged per character, every character
takes one reverse step, guidance gradients are applied, and all states are
committed together before the next timestep.
"""

from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Mapping

import numpy as np

from .diffusion import ConditionSpec, Denoiser, SamplerConfig, ddim_update, ddpm_update, guided_update
from .graph import (
    Factor,
    FactorPrediction,
    GraphError,
    PairwiseInteractionGraph,
    Violation,
    _runs,
    average_predictions,
    validate_graph,
)
from .losses import GuidanceReport, sum_graph_losses
from .motion import MultiPersonMotion, MotionSequence, Skeleton


class GraphValidationError(GraphError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(v.message for v in violations))


class NumericAbort(RuntimeError):
    """A character's state became non-finite; carries the offending timestep."""

    def __init__(self, timestep: int, character: str, snapshot: dict[str, np.ndarray]):
        self.timestep = timestep
        self.character = character
        self.snapshot = snapshot
        super().__init__(f"non-finite state for character {character!r} at timestep {timestep}")


def character_rng(seed: int, character: str) -> np.random.Generator:
    """Per-character stream derived from the run seed and the character id."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(character.encode())]))


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("GRAPHMOTION_THREADS", "1")))
    except ValueError:
        return 1


def sample_multi(
    graph: PairwiseInteractionGraph,
    denoiser: Denoiser,
    config: SamplerConfig,
    skeleton: Skeleton,
    fixed_motions: Mapping[str, np.ndarray] | None = None,
    x_T: Mapping[str, np.ndarray] | None = None,
    character_seeds: Mapping[str, int] | None = None,
    callback: Callable[[int, dict[str, np.ndarray]], None] | None = None,
    record: bool = True,
    fps: float = 30.0,
) -> tuple[MultiPersonMotion, GuidanceReport]:
    """Sample all characters of ``graph`` jointly.

    ``fixed_motions`` supplies the clean motion of each clean-mode source
    character; those characters are not denoised. ``x_T`` overrides the
    initial noise per character. ``callback(t_prev, states)`` is invoked
    after every commit.
    """
    violations = validate_graph(graph, allow_uncovered=config.relax_coverage)
    errors = [v for v in violations if v.is_error]
    if errors:
        raise GraphValidationError(errors)

    L, J = graph.total_frames, skeleton.joint_count
    fixed_ids = set(graph.fixed_characters)
    fixed_motions = dict(fixed_motions or {})
    missing = fixed_ids - set(fixed_motions)
    if missing:
        raise GraphError(f"clean-mode source characters {sorted(missing)} need a supplied motion")
    free = [c for c in graph.characters if c not in fixed_ids]

    states: dict[str, np.ndarray] = {}
    for c in graph.characters:
        if c in fixed_ids:
            m = fixed_motions[c]
            states[c] = np.asarray(m.positions if isinstance(m, MotionSequence) else m, dtype=float)
        elif x_T is not None and c in x_T:
            states[c] = np.array(x_T[c], dtype=float)
        else:
            seed = character_seeds[c] if character_seeds and c in character_seeds else None
            rng = np.random.default_rng(seed) if seed is not None else character_rng(config.seed, c)
            states[c] = rng.standard_normal((L, J, 3))
        if states[c].shape != (L, J, 3):
            raise GraphError(f"character {c!r} state has shape {states[c].shape}, expected {(L, J, 3)}")
    rngs = {}
    for c in free:
        if character_seeds and c in character_seeds:
            # separate stream from the one that drew x_T
            rngs[c] = np.random.default_rng(np.random.SeedSequence([int(character_seeds[c]), 1]))
        else:
            rngs[c] = np.random.default_rng(np.random.SeedSequence([int(config.seed), zlib.crc32(c.encode()), 1]))

    factors = [f for f in graph.sorted_factors() if f.target in free]
    report = GuidanceReport()
    gaps = {}
    if config.relax_coverage:
        for c in free:
            covered = np.zeros(L, dtype=bool)
            for f in factors:
                if f.target == c:
                    s, e = f.frames(L)
                    covered[s:e] = True
            if not covered.all():
                gaps[c] = _runs(~covered)
                report.events.append({"event": "unconditioned_frames", "character": c, "windows": gaps[c]})

    workers = _thread_count()
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    schedule = config.schedule
    cfg = config.guidance

    def predict(current: dict[str, np.ndarray], t: int) -> dict[str, np.ndarray]:
        jobs: list[tuple[str, Factor | None, tuple[int, int], ConditionSpec]] = []
        for f in factors:
            s, e = f.frames(L)
            clean = f.condition == "clean"
            cond = ConditionSpec(
                other_motion=current[f.source][s:e],
                noisiness="clean" if clean else "noisy_at_t",
                text=graph.prompt_for(f),
                frame_window=(s, e),
                source=f.source,
                target=f.target,
            )
            jobs.append((f.target, f, (s, e), cond))
        for c, windows in gaps.items():
            for s, e in windows:
                cond = ConditionSpec(np.zeros((e - s, J, 3)), "clean", graph.prompt, (s, e), None, c)
                jobs.append((c, None, (s, e), cond))

        def run(job):
            c, _, (s, e), cond = job
            return denoiser.predict_x0(current[c][s:e], t, cond)

        outs = list(pool.map(run, jobs)) if pool is not None else [run(j) for j in jobs]
        preds: dict[str, list[FactorPrediction]] = {c: [] for c in free}
        for (c, f, win, _), seg in zip(jobs, outs):
            preds[c].append(FactorPrediction(f, c, win, np.asarray(seg, dtype=float)))
        return {c: average_predictions(preds[c], L) for c in free}

    def guide(x0_hat: dict[str, np.ndarray], new: dict[str, np.ndarray], t: int) -> dict[str, np.ndarray]:
        full = dict(x0_hat)
        for c in fixed_ids:
            full[c] = states[c]
        grads, rep = sum_graph_losses(full, graph, skeleton, cfg, timestep=t, record=record, fixed=fixed_ids)
        report.extend(rep)
        # losses are evaluated on x0_hat; d x0_hat / d x_t is frozen at 1 / sqrt(abar_t)
        scale = config.lam(t) / np.sqrt(schedule.alpha_bars[t])
        return guided_update(new, {c: grads[c] * scale for c in free}, 1.0, report, t)

    try:
        for t, t_prev in config.timesteps():
            x0_hat = predict(states, t)
            new = {}
            for c in free:
                if config.mode == "ddim":
                    new[c] = ddim_update(x0_hat[c], states[c], t, t_prev, schedule)
                else:
                    new[c] = ddpm_update(x0_hat[c], states[c], t, schedule, rngs[c], config.variance_scale)
            if config.guided:
                new = guide(x0_hat, new, t)
                for _ in range(config.guidance_iters - 1):
                    if t_prev < 1:
                        break
                    trial = dict(states)
                    trial.update(new)
                    new = guide(predict(trial, t_prev), new, t_prev)
            for c in free:
                if not np.all(np.isfinite(new[c])):
                    raise NumericAbort(t, c, {k: v.copy() for k, v in states.items()})
            # commit all characters at once
            states = {**states, **new}
            if callback is not None:
                callback(t_prev, states)
    finally:
        if pool is not None:
            pool.shutdown()

    multi = MultiPersonMotion(tuple((c, MotionSequence(states[c], fps)) for c in graph.characters))
    return multi, report
