import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphmotion.fixtures import CUBE_SKELETON, cube_motions, gli_jump_motions, two_versus_one
from graphmotion.graph import Factor, GraphError, PairwiseInteractionGraph
from graphmotion.losses import (
    GuidanceLossConfig,
    GuidanceReport,
    gli_loss,
    gli_loss_pair,
    overlap_pair,
    proxemics_loss,
    simple_contact_loss,
    soft_max,
    soft_min,
    sum_graph_losses,
)
from graphmotion.motion import DEFAULT_SKELETON, DimensionError, MotionSequence, t_pose

HARD = GuidanceLossConfig(softness=0.0)


def _fd(f, x, h=1e-6, idx=None):
    idx = idx if idx is not None else list(np.ndindex(x.shape))
    out = {}
    for i in idx:
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (f(x + e) - f(x - e)) / (2 * h)
    return out


def test_soft_max_limits():
    x = np.array([[0.0, 1.0, 5.0]])
    v, d = soft_max(x, 0.01)
    assert v[0] == pytest.approx(5.0)
    np.testing.assert_allclose(d, [[0, 0, 1]], atol=1e-12)
    v, d = soft_max(np.array([2.0, 2.0]), 0.0)
    assert v == 2.0 and np.allclose(d, 0.5)
    v, _ = soft_min(x, 0.01)
    assert v[0] == pytest.approx(0.0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=2, max_size=6), st.floats(0.05, 1.0))
def test_soft_max_derivative(xs, tau):
    x = np.array(xs)
    _, d = soft_max(x, tau)
    fd = _fd(lambda y: soft_max(y, tau)[0], x)
    np.testing.assert_allclose(d, [fd[(i,)] for i in range(len(x))], atol=1e-6)


def test_cube_overlap_exact():
    m = cube_motions(frames=10)
    v, _ = proxemics_loss(m["A"], m["B"], CUBE_SKELETON, HARD)
    assert v == pytest.approx(10.0, abs=1e-12)
    v, _ = proxemics_loss(m["A"], m["B"], CUBE_SKELETON, GuidanceLossConfig())
    assert v == pytest.approx(10.0, abs=1e-12)  # unique extrema: soft box equals hard box
    half = cube_motions(frames=10, shift=(0.5, 0.0, 0.0))
    v, _ = proxemics_loss(half["A"], half["B"], CUBE_SKELETON, HARD)
    assert v == pytest.approx(5.0, abs=1e-12)
    apart = cube_motions(frames=10, shift=(2.0, 0.0, 0.0))
    v, g = proxemics_loss(apart["A"], apart["B"], CUBE_SKELETON, HARD)
    assert v == 0.0 and not g.any()


def test_overlap_gradient_pushes_apart():
    m = cube_motions(frames=1, shift=(0.5, 0.0, 0.0))
    _, gi, gk = overlap_pair(m["A"], m["B"], 0.0, 0.0)
    # moving A toward -x or B toward +x shrinks the overlap
    assert gi[..., 0].sum() > 0 and gk[..., 0].sum() < 0
    assert gi[..., 0].sum() == pytest.approx(1.0)


def test_padding_and_root_hinge():
    m = cube_motions(frames=2, shift=(1.2, 0.0, 0.0))
    cfg = GuidanceLossConfig(softness=0.0, aabb_padding=0.2)
    v, _ = proxemics_loss(m["A"], m["B"], cfg=cfg)
    assert v == pytest.approx(2 * 0.2 * 1.4 * 1.4)
    cfg = GuidanceLossConfig(softness=0.0, root_distance_min=1.5)
    v, g = proxemics_loss(m["A"], m["B"], cfg=cfg)
    assert v == pytest.approx(2 * 0.3)
    # A sits at -x of B, so moving A toward +x deepens the hinge
    np.testing.assert_allclose(g[:, 0], [[1, 0, 0]] * 2)


def test_frame_mask():
    m = cube_motions(frames=4)
    v, g = simple_contact_loss(m["A"], m["B"], cfg=HARD, frame_mask=[True, False, True, False])
    assert v == pytest.approx(2.0)
    assert not g[1].any()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_proxemics_gradient(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(scale=0.5, size=(2, 6, 3))
    b = a.mean(axis=1, keepdims=True) + rng.normal(scale=0.5, size=(2, 6, 3))
    cfg = GuidanceLossConfig(softness=0.1, root_distance_min=0.5)
    _, g = proxemics_loss(a, b, cfg=cfg)
    fd = _fd(lambda x: proxemics_loss(x, b, cfg=cfg)[0], a)
    num = np.array([fd[i] for i in np.ndindex(a.shape)]).reshape(a.shape)
    np.testing.assert_allclose(g, num, atol=1e-5)


def test_gli_loss_fixture():
    m = gli_jump_motions()
    cfg = GuidanceLossConfig()
    v, g = gli_loss(m["A"], m["B"], DEFAULT_SKELETON, cfg)
    assert v == pytest.approx(0.2, abs=1e-9)
    assert np.linalg.norm(g) > 0
    v, _ = gli_loss(m["A"], m["B"], DEFAULT_SKELETON, GuidanceLossConfig(gli_threshold=0.7))
    assert v == 0.0
    v, _ = gli_loss(m["A"], m["B"], DEFAULT_SKELETON, cfg, frame_mask=[True, False])
    assert v == 0.0


def test_gli_loss_gradient_matches_fd():
    m = gli_jump_motions()
    a, b = m["A"], m["B"]
    v, gi, gj, _ = gli_loss_pair(a, b, DEFAULT_SKELETON, 0.4)
    idx = [(1, 16, 0), (1, 18, 2), (0, 20, 1), (1, 13, 2)]
    fd = _fd(lambda x: gli_loss_pair(x, b, DEFAULT_SKELETON, 0.4)[0], a, idx=idx)
    for i in idx:
        assert gi[i] == pytest.approx(fd[i], rel=1e-4, abs=1e-7)
    fd = _fd(lambda x: gli_loss_pair(a, x, DEFAULT_SKELETON, 0.4)[0], b, idx=[(0, 9, 0), (1, 6, 2)])
    for i, val in fd.items():
        assert gj[i] == pytest.approx(val, rel=1e-4, abs=1e-7)


def test_gli_loss_checks():
    with pytest.raises(DimensionError):
        gli_loss(np.zeros((1, 22, 3)), np.zeros((1, 22, 3)), DEFAULT_SKELETON)
    with pytest.raises(DimensionError):
        gli_loss(np.zeros((3, 22, 3)), np.zeros((2, 22, 3)), DEFAULT_SKELETON)
    with pytest.raises(DimensionError):
        proxemics_loss(np.zeros((3, 22)), np.zeros((3, 22, 3)))
    v, _ = gli_loss(MotionSequence(np.zeros((3, 22, 3)) + t_pose()), np.zeros((3, 22, 3)) + t_pose(), DEFAULT_SKELETON)
    assert v == 0.0  # coincident: every entry flagged, nothing counted


def test_config_validation_and_windows():
    with pytest.raises(ValueError):
        GuidanceLossConfig(gli_weight=-1).validate()
    with pytest.raises(ValueError):
        GuidanceLossConfig(gli_window=(0, 1002)).validate(1000)
    GuidanceLossConfig(gli_window=(0, 1001)).validate(1000)
    cfg = GuidanceLossConfig()
    assert cfg.active("proxemics", 699) and not cfg.active("proxemics", 700)
    assert cfg.active("gli", 99) and not cfg.active("gli", 100)
    assert GuidanceLossConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_sum_graph_losses_routes_by_connection():
    graph, _ = two_versus_one(frames=4)
    pos = {c: t_pose()[None].repeat(4, axis=0) for c in graph.characters}
    pos["3"] = pos["3"] + [0.1, 0.0, 0.0]
    grads, rep = sum_graph_losses(pos, graph, DEFAULT_SKELETON, GuidanceLossConfig(), timestep=50)
    prox = rep.select("proxemics")
    assert [r.pair for r in prox] == [("2", "3")]
    assert prox[0].value > 0 and prox[0].grad_norm > 0
    assert {r.pair for r in rep.select("gli")} == {("1", "2"), ("1", "3")}
    assert not grads["1"].any()
    assert grads["2"].any() and grads["3"].any()
    # outside the proxemics window the loss is recorded as inactive
    _, rep = sum_graph_losses(pos, graph, DEFAULT_SKELETON, GuidanceLossConfig(), timestep=800)
    r = rep.select("proxemics")[0]
    assert not r.active and r.grad_norm == 0.0
    # fixed characters get no gradient
    grads, _ = sum_graph_losses(pos, graph, DEFAULT_SKELETON, GuidanceLossConfig(), timestep=50, fixed=["3"])
    assert not grads["3"].any()


def test_sum_graph_losses_checks_inputs():
    graph = PairwiseInteractionGraph(("A", "B"), (Factor("A", "B"), Factor("B", "A")), 4)
    with pytest.raises(GraphError):
        sum_graph_losses({"A": np.zeros((4, 22, 3))}, graph, DEFAULT_SKELETON)
    with pytest.raises(GraphError):
        sum_graph_losses({"A": np.zeros((4, 22, 3)), "B": np.zeros((5, 22, 3))}, graph, DEFAULT_SKELETON)


def test_report_jsonl(tmp_path):
    graph, _ = two_versus_one(frames=4)
    pos = {c: t_pose()[None].repeat(4, axis=0) for c in graph.characters}
    _, rep = sum_graph_losses(pos, graph, DEFAULT_SKELETON, GuidanceLossConfig(), timestep=5)
    rep.events.append({"event": "x"})
    path = tmp_path / "g.jsonl"
    rep.write(path)
    lines = [json.loads(x) for x in path.read_text().splitlines()]
    assert len(lines) == len(rep.records) + 1
    assert lines[0]["timestep"] == 5
    assert GuidanceReport().to_jsonl() == ""
