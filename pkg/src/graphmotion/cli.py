"""Command-line interface: ``graphmotion {sample, eval, gli, make-fixtures}``.

Exit codes: 0 success, 2 validation or configuration error, 3 numeric
abort. Errors are written to stderr as a single JSON object.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import platform
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .denoisers import build_denoiser
from .diffusion import SamplerConfig
from .fixtures import make_fixtures
from .gli import batch_pair_gli
from .graph import GraphError, PairwiseInteractionGraph
from .metrics import MetricsWarning, evaluate, per_frame_penetration
from .motion import (
    DEFAULT_SKELETON,
    MotionParseError,
    MotionSequence,
    MultiPersonMotion,
    Skeleton,
    get_skeleton,
    load_motion,
    save_motion,
    t_pose,
)
from .sampling import GraphValidationError, NumericAbort, sample_multi

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


class CliError(Exception):
    def __init__(self, code: int, payload: dict):
        self.code = code
        self.payload = payload
        super().__init__(payload.get("message", ""))


def _fail(kind: str, message: str, code: int = EXIT_VALIDATION, **extra):
    raise CliError(code, {"error": kind, "message": message, **extra})


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        _fail("config", f"cannot read {path}: {exc}")


def _config_hash(doc: dict) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def _load_characters(paths: list[str]) -> tuple[Skeleton, list[tuple[str, MotionSequence]]]:
    skeleton = None
    motions = []
    for p in paths:
        try:
            skel, motion = load_motion(p)
        except (MotionParseError, OSError, ValueError) as exc:
            _fail("motion", str(exc))
        skel = skel or DEFAULT_SKELETON
        if skeleton is not None and skel.name != skeleton.name:
            _fail("motion", f"{p} uses skeleton {skel.name!r}, expected {skeleton.name!r}")
        skeleton = skel
        motions.append((Path(p).stem, motion))
    return skeleton, motions


def _scene_characters(scene_path: Path) -> tuple[Skeleton, list[tuple[str, MotionSequence]]]:
    scene = _read_json(scene_path)
    skeleton, motions = _load_characters([str(scene_path.parent / f) for f in scene["characters"].values()])
    return skeleton, [(cid, m) for cid, (_, m) in zip(scene["characters"], motions)]


# ---------------------------------------------------------------------------
# sample


def cmd_sample(args) -> int:
    graph_doc = _read_json(args.graph)
    cfg_doc = _read_json(args.config) if args.config else {}
    sampler_doc = {k: v for k, v in cfg_doc.items() if k not in ("denoiser", "skeleton", "fps")}
    if args.mode:
        sampler_doc["mode"] = args.mode
    if args.seed is not None:
        sampler_doc["seed"] = args.seed
    try:
        graph = PairwiseInteractionGraph.from_dict(graph_doc)
        config = SamplerConfig.from_dict(sampler_doc).with_guidance(args.guidance)
        skeleton = get_skeleton(cfg_doc.get("skeleton", DEFAULT_SKELETON.name))
        base = t_pose(skeleton) if skeleton.name == DEFAULT_SKELETON.name else None
        denoiser = build_denoiser(cfg_doc.get("denoiser", {"kind": "synthetic"}), config.schedule, base)
    except (KeyError, TypeError, ValueError) as exc:
        _fail("config", str(exc))

    fixed = {}
    for f in graph.factors:
        if f.condition == "clean" and f.clean_motion:
            _, m = load_motion(Path(args.graph).parent / f.clean_motion)
            fixed[f.source] = m
    fps = float(cfg_doc.get("fps", 30.0))

    start = time.time()
    try:
        multi, report = sample_multi(graph, denoiser, config, skeleton, fixed_motions=fixed, fps=fps)
    except GraphValidationError as exc:
        violations = [v.to_dict() for v in exc.violations]
        _fail("validation", str(exc), violations=violations)
    except GraphError as exc:
        _fail("validation", str(exc))
    except NumericAbort as exc:
        _fail("numeric", str(exc), code=EXIT_NUMERIC, timestep=exc.timestep, character=exc.character)
    elapsed = time.time() - start

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for cid, motion in multi.characters:
        name = f"{cid}.json"
        save_motion(out / name, motion, skeleton)
        files[cid] = name
    scene = {"graph": graph.to_dict(), "skeleton": skeleton.name, "characters": files}
    (out / "scene.json").write_text(json.dumps(scene, indent=2))
    report.write(out / "guidance.jsonl")
    resolved = {"sampler": config.to_dict(), "denoiser": cfg_doc.get("denoiser", {"kind": "synthetic"}),
                "skeleton": skeleton.name, "fps": fps}
    manifest = {
        "config_hash": _config_hash({"graph": graph.to_dict(), **resolved}),
        "seed": config.seed,
        "graph": str(args.graph),
        "config": resolved,
        "guidance": args.guidance,
        "outputs": sorted(files.values()) + ["scene.json", "guidance.jsonl"],
        "versions": {"graphmotion": __version__, "numpy": np.__version__, "python": platform.python_version()},
        "wall_clock_s": round(elapsed, 3),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    print(json.dumps({"out": str(out), "characters": list(files)}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval


def cmd_eval(args) -> int:
    paths = [Path(p) for p in args.inputs]
    if len(paths) == 1 and (paths[0].is_dir() or paths[0].name == "scene.json"):
        scene = paths[0] / "scene.json" if paths[0].is_dir() else paths[0]
        skeleton, motions = _scene_characters(scene)
    else:
        skeleton, motions = _load_characters([str(p) for p in paths])
    try:
        multi = MultiPersonMotion(tuple(motions))
    except ValueError as exc:
        _fail("motion", str(exc))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", MetricsWarning)
        report = evaluate(multi, skeleton, radius=args.radius)
    for w in caught:
        print(json.dumps({"warning": str(w.message)}), file=sys.stderr)
    doc = report.to_dict()
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    if args.csv and len(multi) >= 2:
        rows = per_frame_penetration(multi, skeleton, args.radius)
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["frame", "pair", "depth"])
            w.writeheader()
            w.writerows(rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# gli


def cmd_gli(args) -> int:
    skeleton, motions = _load_characters([args.motion_a, args.motion_b])
    (_, a), (_, b) = motions
    if a.positions.shape != b.positions.shape:
        _fail("motion", f"motions differ in shape: {a.positions.shape} vs {b.positions.shape}")
    values, flags = batch_pair_gli(a.positions, b.positions, skeleton)
    n = values.shape[-1]
    rows = [
        {"frame": f, "chain_i": i, "chain_j": j, "gli": repr(float(values[f, i, j])), "flags": int(flags[f, i, j])}
        for f in range(values.shape[0])
        for i in range(n)
        for j in range(n)
    ]
    target = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(target, fieldnames=["frame", "chain_i", "chain_j", "gli", "flags"])
        w.writeheader()
        w.writerows(rows)
    finally:
        if args.out:
            target.close()
    delta = np.abs(np.diff(values, axis=0)) if values.shape[0] > 1 else np.zeros((0, n, n))
    flagged = [
        {"frame": int(f + 1), "chain_i": int(i), "chain_j": int(j), "delta": float(delta[f, i, j])}
        for f, i, j in zip(*np.nonzero(delta > args.threshold))
    ]
    summary = {
        "frames": int(values.shape[0]),
        "max_abs_gli": float(np.abs(values).max()),
        "max_abs_delta": (delta.max(axis=0) if len(delta) else np.zeros((n, n))).tolist(),
        "threshold": args.threshold,
        "jumps": flagged,
        "flagged_entries": int(np.count_nonzero(flags)),
    }
    print(json.dumps(summary), file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


# ---------------------------------------------------------------------------
# make-fixtures


def cmd_make_fixtures(args) -> int:
    try:
        written = make_fixtures(args.out)
    except OSError as exc:
        _fail("io", str(exc))
    print(json.dumps({k: str(v) for k, v in written.items()}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graphmotion", description="Graph-driven multi-character motion sampling and evaluation")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="sample all characters of an interaction graph")
    s.add_argument("--graph", required=True, help="graph spec JSON")
    s.add_argument("--config", help="sampler/denoiser config JSON")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int)
    s.add_argument("--mode", choices=["ddpm", "ddim"])
    s.add_argument("--guidance", choices=["on", "off", "proxemics-only", "gli-only"], default="on")
    s.set_defaults(func=cmd_sample)

    e = sub.add_parser("eval", help="compute metrics for motion files or a scene")
    e.add_argument("inputs", nargs="+", help="motion files, a scene.json, or a sample output directory")
    e.add_argument("--radius", type=float, default=0.02, help="bone capsule radius in meters")
    e.add_argument("--csv", help="write per-frame, per-pair penetration depths")
    e.add_argument("--out", help="also write the report JSON here")
    e.set_defaults(func=cmd_eval)

    g = sub.add_parser("gli", help="per-frame chain-pair GLI matrices of two motions")
    g.add_argument("motion_a")
    g.add_argument("motion_b")
    g.add_argument("--out", help="CSV path (default stdout; summary then goes to stderr)")
    g.add_argument("--threshold", type=float, default=0.4)
    g.set_defaults(func=cmd_gli)

    f = sub.add_parser("make-fixtures", help="write the canonical fixture set")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_make_fixtures)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(json.dumps(exc.payload), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
