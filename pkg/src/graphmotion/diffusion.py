"""
Diffusion engine
================

Noise schedule, forward noising, x0-parameterized DDPM and DDIM reverse
steps, and the gradient-guided correction applied after each step.

All step functions operate on plain arrays of any shape so a batch of
independent chains can be advanced at once; they also accept
:class:`~graphmotion.motion.MotionSequence` where noted.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Protocol

import numpy as np

from .losses import GuidanceLossConfig, GuidanceReport
from .motion import MotionSequence

NOISE_MODES = ("noisy_at_t", "clean")


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    """Arrays indexed by timestep 0..T; index 0 is the clean end (alpha_bar = 1)."""

    betas: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.betas, dtype=float)
        if b.ndim != 1 or b[0] != 0.0:
            raise ValueError("betas must be 1-D with betas[0] == 0")
        if np.any(b[1:] <= 0) or np.any(b[1:] >= 1):
            raise ValueError("betas must lie in (0, 1) for t >= 1")
        b.setflags(write=False)
        object.__setattr__(self, "betas", b)
        alphas = 1.0 - b
        alpha_bars = np.cumprod(alphas)
        alphas.setflags(write=False)
        alpha_bars.setflags(write=False)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "alpha_bars", alpha_bars)

    @property
    def T(self) -> int:
        return len(self.betas) - 1

    @classmethod
    def linear(cls, T: int = 1000, beta_start: float = 1e-4, beta_end: float = 2e-2) -> "NoiseSchedule":
        return cls(np.concatenate([[0.0], np.linspace(beta_start, beta_end, T)]))

    def check_t(self, t: int, allow_zero: bool = False) -> None:
        low = 0 if allow_zero else 1
        if not low <= t <= self.T:
            raise ValueError(f"timestep {t} outside [{low}, {self.T}]")


@dataclass(frozen=True)
class ConditionSpec:
    """What a denoiser is conditioned on for one factor evaluation."""

    other_motion: np.ndarray | None
    noisiness: str = "noisy_at_t"
    text: str = ""
    frame_window: tuple[int, int] | None = None
    source: str | None = None
    target: str | None = None

    def __post_init__(self):
        if self.noisiness not in NOISE_MODES:
            raise ValueError(f"noisiness must be one of {NOISE_MODES}")
        if self.frame_window is not None:
            start, end = self.frame_window
            if not 0 <= start < end:
                raise ValueError(f"invalid frame window {self.frame_window}")
            if self.other_motion is not None and len(self.other_motion) != end - start:
                raise ValueError("condition motion length must match its frame window")


class Denoiser(Protocol):
    """x0-predicting denoiser: same-shape clean estimate from a noisy sample."""

    def predict_x0(self, x_t: np.ndarray, t: int, condition: ConditionSpec) -> np.ndarray: ...


def _unwrap(x):
    if isinstance(x, MotionSequence):
        return x.positions, lambda arr: MotionSequence(arr, x.fps)
    return np.asarray(x, dtype=float), lambda arr: arr


def forward_diffuse(x0, t: int, noise, schedule: NoiseSchedule):
    """Sample x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) noise."""
    schedule.check_t(t)
    arr, wrap = _unwrap(x0)
    noise = np.asarray(noise, dtype=float)
    if noise.shape != arr.shape:
        raise ValueError(f"noise shape {noise.shape} != data shape {arr.shape}")
    ab = schedule.alpha_bars[t]
    return wrap(np.sqrt(ab) * arr + np.sqrt(1.0 - ab) * noise)


def posterior_coefficients(t: int, schedule: NoiseSchedule) -> tuple[float, float]:
    """Weights of (x0_hat, x_t) in the reverse-step mean."""
    ab_t = schedule.alpha_bars[t]
    ab_prev = schedule.alpha_bars[t - 1]
    c0 = np.sqrt(ab_prev) * schedule.betas[t] / (1.0 - ab_t)
    ct = np.sqrt(schedule.alphas[t]) * (1.0 - ab_prev) / (1.0 - ab_t)
    return float(c0), float(ct)


def posterior_mean(x0_hat, x_t, t: int, schedule: NoiseSchedule):
    schedule.check_t(t, allow_zero=True)
    x0, wrap = _unwrap(x0_hat)
    if t == 0:
        return wrap(x0)
    xt, _ = _unwrap(x_t)
    c0, ct = posterior_coefficients(t, schedule)
    return wrap(c0 * x0 + ct * xt)


def ddpm_update(x0_hat: np.ndarray, x_t: np.ndarray, t: int, schedule: NoiseSchedule, rng: np.random.Generator | None, variance_scale: float = 1.0) -> np.ndarray:
    """One reverse step toward a given clean prediction; no noise at t = 1."""
    mu = posterior_mean(x0_hat, x_t, t, schedule)
    if t > 1 and variance_scale > 0:
        if rng is None:
            raise ValueError("a random generator is required for stochastic steps")
        mu = mu + np.sqrt(variance_scale * schedule.betas[t]) * rng.standard_normal(np.shape(mu))
    return mu


def ddpm_step(x_t, t: int, denoiser: Denoiser, condition: ConditionSpec, schedule: NoiseSchedule, rng=None, variance_scale: float = 1.0):
    """x_{t-1} ~ N(mu(x0_hat, x_t), (1 - alpha_t) I) with x0_hat from the denoiser."""
    schedule.check_t(t)
    arr, wrap = _unwrap(x_t)
    x0 = denoiser.predict_x0(arr, t, condition)
    return wrap(ddpm_update(x0, arr, t, schedule, rng, variance_scale))


def ddim_update(x0_hat: np.ndarray, x_t: np.ndarray, t: int, t_prev: int, schedule: NoiseSchedule) -> np.ndarray:
    """Deterministic (eta = 0) DDIM jump from t to t_prev."""
    if not 0 <= t_prev < t:
        raise ValueError(f"need 0 <= t_prev < t, got t={t}, t_prev={t_prev}")
    ab_t = schedule.alpha_bars[t]
    ab_prev = schedule.alpha_bars[t_prev]
    eps = (x_t - np.sqrt(ab_t) * x0_hat) / np.sqrt(1.0 - ab_t)
    if t_prev == 0:
        return np.array(x0_hat, dtype=float, copy=True)
    return np.sqrt(ab_prev) * x0_hat + np.sqrt(1.0 - ab_prev) * eps


def ddim_step(x_t, t: int, t_prev: int, denoiser: Denoiser, condition: ConditionSpec, schedule: NoiseSchedule):
    schedule.check_t(t)
    arr, wrap = _unwrap(x_t)
    x0 = denoiser.predict_x0(arr, t, condition)
    return wrap(ddim_update(x0, arr, t, t_prev, schedule))


def ddim_timesteps(T: int, steps: int) -> list[tuple[int, int]]:
    """(t, t_prev) pairs for a uniform stride, e.g. 1000 -> 980 -> ... -> 20 -> 0."""
    if not 1 <= steps <= T:
        raise ValueError(f"ddim steps must be in [1, {T}]")
    stride = T // steps
    ts = [T - k * stride for k in range(steps)]
    return list(zip(ts, ts[1:] + [0]))


def ddpm_timesteps(T: int) -> list[tuple[int, int]]:
    return [(t, t - 1) for t in range(T, 0, -1)]


def guided_update(x_prev, grads, lam: float, report: GuidanceReport | None = None, timestep: int | None = None):
    """x_{t-1} <- x_{t-1} - lam * grad, per character.

    ``x_prev`` and ``grads`` are arrays or dicts keyed by character id.
    Characters with non-finite gradients are left unchanged and logged to
    ``report``.
    """
    if not isinstance(x_prev, dict):
        out = guided_update({"_": x_prev}, {"_": grads}, lam, report, timestep)
        return out["_"]
    out = {}
    for cid, x in x_prev.items():
        g = grads.get(cid)
        if g is None or lam == 0:
            out[cid] = x
            continue
        if not np.all(np.isfinite(g)):
            if report is not None:
                report.events.append({"timestep": timestep, "character": cid, "event": "non_finite_gradient_skipped"})
            out[cid] = x
            continue
        out[cid] = x - lam * g
    return out


@dataclass(frozen=True)
class SamplerConfig:
    schedule: NoiseSchedule = field(default_factory=NoiseSchedule.linear)
    mode: str = "ddpm"
    ddim_steps: int = 50
    guidance: GuidanceLossConfig = field(default_factory=GuidanceLossConfig)
    guidance_iters: int = 1
    lambda_rule: str = "constant"
    seed: int = 0
    variance_scale: float = 1.0
    relax_coverage: bool = False

    def __post_init__(self):
        if self.mode not in ("ddpm", "ddim"):
            raise ValueError(f"mode must be ddpm or ddim, got {self.mode!r}")
        if self.mode == "ddim" and not 1 <= self.ddim_steps <= self.schedule.T:
            raise ValueError("ddim_steps must be in [1, T]")
        if self.lambda_rule not in ("constant", "alpha_bar"):
            raise ValueError("lambda_rule must be 'constant' or 'alpha_bar'")
        if self.guidance_iters < 1:
            raise ValueError("guidance_iters must be >= 1")
        self.guidance.validate(self.schedule.T)

    @classmethod
    def default(cls, mode: str = "ddpm", T: int = 1000, **kw) -> "SamplerConfig":
        """Defaults per mode: DDPM guides proxemics for t < 700 and GLI for t < 100, DDIM guides every step."""
        schedule = kw.pop("schedule", None) or NoiseSchedule.linear(T)
        guidance = kw.pop("guidance", None) or GuidanceLossConfig()
        top = schedule.T + 1
        if mode == "ddim":
            full = (0, top)
            guidance = replace(guidance, gli_window=full, proxemics_window=full, contact_window=full)
        else:
            # short schedules: clip the default windows to the schedule length
            clip = {k: (min(lo, top), min(hi, top)) for k in ("gli_window", "proxemics_window", "contact_window") for lo, hi in [getattr(guidance, k)]}
            guidance = replace(guidance, **clip)
        return cls(schedule=schedule, mode=mode, guidance=guidance, **kw)

    def timesteps(self) -> list[tuple[int, int]]:
        if self.mode == "ddim":
            return ddim_timesteps(self.schedule.T, self.ddim_steps)
        return ddpm_timesteps(self.schedule.T)

    def lam(self, t: int) -> float:
        return 1.0 if self.lambda_rule == "constant" else float(self.schedule.alpha_bars[t])

    def with_guidance(self, which: str) -> "SamplerConfig":
        """Restrict guidance to ``on``, ``off``, ``proxemics-only`` or ``gli-only``."""
        g = self.guidance
        if which == "on":
            return self
        if which == "off":
            g = replace(g, gli_weight=0.0, proxemics_weight=0.0, contact_weight=0.0)
        elif which == "proxemics-only":
            g = replace(g, gli_weight=0.0, contact_weight=0.0)
        elif which == "gli-only":
            g = replace(g, proxemics_weight=0.0, contact_weight=0.0)
        else:
            raise ValueError(f"unknown guidance setting {which!r}")
        return replace(self, guidance=g)

    @property
    def guided(self) -> bool:
        g = self.guidance
        return g.gli_weight > 0 or g.proxemics_weight > 0 or g.contact_weight > 0

    @classmethod
    def from_dict(cls, d: dict) -> "SamplerConfig":
        T = int(d.get("T", 1000))
        schedule = NoiseSchedule.linear(T, float(d.get("beta_start", 1e-4)), float(d.get("beta_end", 2e-2)))
        mode = d.get("mode", "ddpm")
        base = cls.default(mode, schedule=schedule)
        guidance = base.guidance
        if "guidance" in d:
            merged = guidance.to_dict()
            merged.update(d["guidance"])
            guidance = GuidanceLossConfig.from_dict(merged)
        return cls(
            schedule=schedule,
            mode=mode,
            ddim_steps=int(d.get("ddim_steps", 50)),
            guidance=guidance,
            guidance_iters=int(d.get("guidance_iters", 1)),
            lambda_rule=d.get("lambda_rule", "constant"),
            seed=int(d.get("seed", 0)),
            variance_scale=float(d.get("variance_scale", 1.0)),
            relax_coverage=bool(d.get("relax_coverage", False)),
        )

    def to_dict(self) -> dict:
        b = self.schedule.betas
        return {
            "mode": self.mode,
            "T": self.schedule.T,
            "ddim_steps": self.ddim_steps,
            "beta_start": float(b[1]),
            "beta_end": float(b[-1]),
            "guidance": {k: list(v) if isinstance(v, tuple) else v for k, v in self.guidance.to_dict().items()},
            "guidance_iters": self.guidance_iters,
            "lambda_rule": self.lambda_rule,
            "seed": self.seed,
            "variance_scale": self.variance_scale,
            "relax_coverage": self.relax_coverage,
        }
