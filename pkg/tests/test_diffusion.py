import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphmotion.denoisers import GaussianPriorDenoiser
from graphmotion.diffusion import (
    ConditionSpec,
    NoiseSchedule,
    SamplerConfig,
    ddim_step,
    ddim_timesteps,
    ddim_update,
    ddpm_step,
    ddpm_timesteps,
    forward_diffuse,
    guided_update,
    posterior_coefficients,
    posterior_mean,
)
from graphmotion.losses import GuidanceLossConfig, GuidanceReport
from graphmotion.motion import MotionSequence

SCHED = NoiseSchedule.linear(1000)


def test_schedule_shape_and_checks():
    s = SCHED
    assert s.T == 1000
    assert s.alpha_bars[0] == 1.0
    assert np.all(np.diff(s.alpha_bars) < 0)
    with pytest.raises(ValueError):
        NoiseSchedule(np.array([0.0, 1.5]))
    with pytest.raises(ValueError):
        NoiseSchedule(np.array([0.1, 0.1]))
    with pytest.raises(ValueError):
        s.check_t(0)
    with pytest.raises(ValueError):
        s.betas[1] = 0.5


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 1000))
def test_posterior_coefficients_match_definition(t):
    c0, ct = posterior_coefficients(t, SCHED)
    ab, ab_prev, beta = SCHED.alpha_bars[t], SCHED.alpha_bars[t - 1], SCHED.betas[t]
    assert c0 == pytest.approx(np.sqrt(ab_prev) * beta / (1 - ab), rel=1e-12)
    assert ct == pytest.approx(np.sqrt(1 - beta) * (1 - ab_prev) / (1 - ab), rel=1e-12)
    # a noiseless x_t = sqrt(abar) x0 is mapped to sqrt(abar_prev) x0
    assert c0 + ct * np.sqrt(ab) == pytest.approx(np.sqrt(ab_prev), abs=1e-12)


def test_posterior_mean_at_zero_returns_prediction():
    x0 = np.ones((2, 3, 3))
    np.testing.assert_array_equal(posterior_mean(x0, np.zeros_like(x0), 0, SCHED), x0)


def test_forward_diffuse():
    x0 = np.ones((4, 3))
    out = forward_diffuse(x0, 1000, np.zeros_like(x0), SCHED)
    np.testing.assert_allclose(out, np.sqrt(SCHED.alpha_bars[1000]))
    m = forward_diffuse(MotionSequence(np.ones((2, 2, 3))), 10, np.zeros((2, 2, 3)), SCHED)
    assert isinstance(m, MotionSequence)
    with pytest.raises(ValueError):
        forward_diffuse(x0, 10, np.zeros(3), SCHED)


def test_ddpm_last_step_is_deterministic():
    den = GaussianPriorDenoiser(SCHED)
    x = np.ones((2, 3))
    a = ddpm_step(x, 1, den, None, SCHED)
    b = ddpm_step(x, 1, den, None, SCHED)
    np.testing.assert_array_equal(a, b)
    with pytest.raises(ValueError, match="random generator"):
        ddpm_step(x, 5, den, None, SCHED, rng=None)


def test_ddim_recovers_clean_signal_for_exact_predictor():
    x0 = np.random.default_rng(0).normal(size=(5, 3))

    class Oracle:
        def predict_x0(self, x_t, t, condition=None):
            return x0

    x = forward_diffuse(x0, 1000, np.random.default_rng(1).normal(size=x0.shape), SCHED)
    for t, t_prev in ddim_timesteps(1000, 50):
        x = ddim_step(x, t, t_prev, Oracle(), None, SCHED)
    np.testing.assert_allclose(x, x0, atol=1e-12)


def test_ddim_update_preserves_noise_direction():
    x0 = np.zeros(3)
    eps = np.array([1.0, -2.0, 0.5])
    xt = forward_diffuse(x0, 500, eps, SCHED)
    x_prev = ddim_update(x0, xt, 500, 480, SCHED)
    np.testing.assert_allclose(x_prev, np.sqrt(1 - SCHED.alpha_bars[480]) * eps, atol=1e-12)


def test_timesteps():
    ts = ddim_timesteps(1000, 50)
    assert ts[0] == (1000, 980) and ts[-1] == (20, 0) and len(ts) == 50
    assert ddpm_timesteps(3) == [(3, 2), (2, 1), (1, 0)]
    with pytest.raises(ValueError):
        ddim_timesteps(10, 11)


def test_guided_update_skips_non_finite():
    rep = GuidanceReport()
    x = {"A": np.zeros(3), "B": np.zeros(3)}
    g = {"A": np.ones(3), "B": np.array([np.nan, 0, 0])}
    out = guided_update(x, g, 0.5, rep, timestep=7)
    np.testing.assert_array_equal(out["A"], -0.5 * np.ones(3))
    np.testing.assert_array_equal(out["B"], np.zeros(3))
    assert rep.events == [{"timestep": 7, "character": "B", "event": "non_finite_gradient_skipped"}]
    np.testing.assert_array_equal(guided_update(np.ones(2), np.ones(2), 1.0), np.zeros(2))


def test_sampler_defaults_per_mode():
    ddpm = SamplerConfig.default("ddpm")
    assert ddpm.guidance.proxemics_window == (0, 700)
    assert ddpm.guidance.gli_window == (0, 100)
    ddim = SamplerConfig.default("ddim")
    assert ddim.guidance.gli_window == (0, 1001)
    assert len(ddim.timesteps()) == 50
    assert len(ddpm.timesteps()) == 1000


def test_sampler_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(mode="euler")
    with pytest.raises(ValueError):
        SamplerConfig(lambda_rule="cosine")
    with pytest.raises(ValueError):
        SamplerConfig(guidance=GuidanceLossConfig(gli_window=(0, 5000)))
    with pytest.raises(ValueError):
        SamplerConfig(guidance_iters=0)


def test_sampler_config_roundtrip_and_guidance_modes():
    cfg = SamplerConfig.from_dict({"mode": "ddim", "seed": 3, "guidance": {"gli_weight": 2.0}})
    assert cfg.seed == 3 and cfg.guidance.gli_weight == 2.0
    again = SamplerConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()
    off = cfg.with_guidance("off")
    assert not off.guided
    prox = cfg.with_guidance("proxemics-only").guidance
    assert prox.gli_weight == 0 and prox.proxemics_weight == 1.0
    assert cfg.with_guidance("gli-only").guidance.proxemics_weight == 0
    with pytest.raises(ValueError):
        cfg.with_guidance("sometimes")
    assert SamplerConfig(lambda_rule="alpha_bar").lam(1000) == pytest.approx(SCHED.alpha_bars[1000])


def test_condition_spec_checks():
    with pytest.raises(ValueError):
        ConditionSpec(None, noisiness="blurry")
    with pytest.raises(ValueError):
        ConditionSpec(np.zeros((3, 2, 3)), frame_window=(0, 4))
    with pytest.raises(ValueError):
        ConditionSpec(None, frame_window=(4, 4))
