"""Command-line pipeline: extract, describe, match, evaluate.

Every command writes a ``manifest.json`` (config snapshot, inputs, seed)
into the output directory before any other artifact, so a run can always be
reproduced from its outputs. Config fields are overridable one-to-one by
flags of the same name.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import evaluation
from .config import OscConfig
from .dataset import read_labels, read_point_cloud, read_poses
from .descriptor import load_descriptors, save_descriptors
from .errors import (ConfigError, DataFormatError, DatasetLayoutError,
                     EvaluationError, OscError)
from .filtering import match_frames, write_place_matches_csv
from .objects import extract_main_objects, write_objects_csv
from .recognizer import describe_frame

_ERROR_CATEGORIES = [
    (ConfigError, "config"),
    (DatasetLayoutError, "missing-input"),
    (DataFormatError, "bad-data"),
    (EvaluationError, "evaluation"),
    (OscError, "internal"),
]

SYNTHETIC_PLACE_SPACING = 200.0  # metres between synthetic places


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("config overrides")
    group.add_argument("--config", metavar="FILE", help="flat key = value config file")
    for field in dataclasses.fields(OscConfig):
        flag = "--" + field.name.replace("_", "-")
        group.add_argument(flag, dest=f"cfg_{field.name}", metavar="V", default=None)


def _build_config(args: argparse.Namespace) -> OscConfig:
    cfg = config_mod.load_config(args.config) if args.config else OscConfig()
    overrides = {}
    for field in dataclasses.fields(OscConfig):
        raw = getattr(args, f"cfg_{field.name}", None)
        if raw is not None:
            overrides[field.name] = config_mod._parse_field(field.name, raw)
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return config_mod.validate(cfg)


def _dataset_frames(dataset_dir: Path) -> list[tuple[int, Path, Path]]:
    velodyne = dataset_dir / "velodyne"
    labels = dataset_dir / "labels"
    missing = [str(p) for p in (velodyne, labels, dataset_dir / "poses.txt",
                                dataset_dir / "calib.txt") if not p.exists()]
    if missing:
        raise DatasetLayoutError(f"missing dataset components: {', '.join(missing)}")
    frames = []
    for bin_path in sorted(velodyne.glob("*.bin")):
        label_path = labels / (bin_path.stem + ".label")
        if not label_path.exists():
            raise DatasetLayoutError(f"missing label file: {label_path}")
        frames.append((int(bin_path.stem), bin_path, label_path))
    if not frames:
        raise DatasetLayoutError(f"no .bin frames under {velodyne}")
    return frames


def _load_frame(frame_id: int, bin_path: Path, label_path: Path):
    try:
        cloud = read_point_cloud(bin_path, frame_id=frame_id)
        labels = read_labels(label_path, len(cloud), frame_id=frame_id)
    except DataFormatError as exc:
        raise DataFormatError(f"frame {frame_id}: {exc}") from exc
    return cloud, labels


def _write_manifest(out_dir: Path, command: str, cfg: OscConfig, inputs: dict,
                    seed: int | None = None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "inputs": inputs,
        "output_dir": str(out_dir),
        "seed": seed,
        "config": config_mod.to_dict(cfg),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def cmd_extract(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    dataset_dir, out_dir = Path(args.dataset), Path(args.out)
    frames = _dataset_frames(dataset_dir)
    _write_manifest(out_dir, "extract", cfg, {"dataset": str(dataset_dir)})
    for frame_id, bin_path, label_path in frames:
        cloud, labels = _load_frame(frame_id, bin_path, label_path)
        objects = extract_main_objects(cloud, labels, cfg)
        write_objects_csv(out_dir / f"objects_{frame_id:06d}.csv", objects)
    return 0


def cmd_describe(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    dataset_dir, out_dir = Path(args.dataset), Path(args.out)
    frames = _dataset_frames(dataset_dir)
    _write_manifest(out_dir, "describe", cfg, {"dataset": str(dataset_dir)})
    descriptors = []
    for frame_id, bin_path, label_path in frames:
        cloud, labels = _load_frame(frame_id, bin_path, label_path)
        descriptors.extend(describe_frame(cloud, labels, cfg))
    save_descriptors(out_dir / "descriptors.bin", descriptors)
    return 0


def cmd_match(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    out_dir = Path(args.out)
    descriptors = load_descriptors(args.descriptors)
    by_frame: dict[int, list] = {}
    for osc in descriptors:
        by_frame.setdefault(osc.object.frame_id, []).append(osc)
    for frame in (args.frame_a, args.frame_b):
        if frame not in by_frame:
            raise EvaluationError(f"frame {frame} has no descriptors in {args.descriptors}")
    _write_manifest(out_dir, "match", cfg, {
        "descriptors": str(args.descriptors),
        "frame_a": args.frame_a, "frame_b": args.frame_b,
    })
    pm = match_frames(by_frame[args.frame_a], by_frame[args.frame_b], cfg,
                      frame_q=args.frame_a, frame_c=args.frame_b)
    write_place_matches_csv(out_dir / "place_matches.csv", [pm])
    print(f"frames {pm.frame_q} vs {pm.frame_c}: accepted={pm.accepted} "
          f"similarity={pm.similarity:.4f} support={pm.support}")
    return 0


def _synthetic_sequence(cfg: OscConfig, seed: int, places: int):
    """Two views of ``places`` distinct worlds; view-A frames first, so
    same-place pairs clear min_frame_gap whenever places >= min_frame_gap."""
    rng_views = np.random.default_rng(seed)
    descriptor_map: dict[int, list] = {}
    poses = []
    view_b_specs = []
    for p in range(places):
        scene = evaluation.generate_synthetic_scene(seed + 17 * p, num_objects=4)
        scene = evaluation.translate_scene(scene, SYNTHETIC_PLACE_SPACING * p, 0.0)
        base = (SYNTHETIC_PLACE_SPACING * p, 0.0, 0.0)
        angle = rng_views.uniform(0.0, 2.0 * math.pi)
        radius = rng_views.uniform(0.0, 8.0)
        yaw = rng_views.uniform(-math.pi, math.pi)
        view_b = (base[0] + radius * math.cos(angle),
                  base[1] + radius * math.sin(angle), yaw)
        cloud, labels = evaluation.view_scene(scene, base, frame_id=p)
        descriptor_map[p] = describe_frame(cloud, labels, cfg)
        poses.append(evaluation.sensor_frame_pose(base, p))
        view_b_specs.append((scene, view_b))
    for p, (scene, view_b) in enumerate(view_b_specs):
        frame_id = places + p
        cloud, labels = evaluation.view_scene(scene, view_b, frame_id=frame_id)
        descriptor_map[frame_id] = describe_frame(cloud, labels, cfg)
        poses.append(evaluation.sensor_frame_pose(view_b, frame_id))
    return descriptor_map, poses


def _dataset_sequence(cfg: OscConfig, dataset_dir: Path):
    frames = _dataset_frames(dataset_dir)
    poses = read_poses(dataset_dir / "poses.txt", dataset_dir / "calib.txt")
    if len(poses) < len(frames):
        raise DatasetLayoutError(
            f"{len(frames)} frames but only {len(poses)} poses in poses.txt"
        )
    descriptor_map = {}
    kept = []
    for frame_id, bin_path, label_path in frames:
        cloud, labels = _load_frame(frame_id, bin_path, label_path)
        descriptor_map[frame_id] = describe_frame(cloud, labels, cfg)
        kept.append(poses[frame_id])
    return descriptor_map, kept


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    out_dir = Path(args.out)
    if args.synthetic:
        inputs = {"synthetic_places": args.synthetic_places}
    else:
        if args.dataset is None:
            raise DatasetLayoutError("evaluate needs --dataset unless --synthetic is set")
        inputs = {"dataset": str(args.dataset)}
    _write_manifest(out_dir, "evaluate", cfg, inputs, seed=args.seed)

    if args.synthetic:
        descriptor_map, poses = _synthetic_sequence(cfg, args.seed, args.synthetic_places)
    else:
        descriptor_map, poses = _dataset_sequence(cfg, Path(args.dataset))

    pairs = evaluation.sample_pairs(poses, cfg, args.count_pos, args.count_neg, args.seed)
    matches, scores, errors = evaluation.evaluate_pairs(descriptor_map, pairs, cfg)
    curve = evaluation.pr_curve(scores)
    summary = evaluation.summarize(scores, errors)
    write_place_matches_csv(out_dir / "place_matches.csv", matches)
    evaluation.write_pr_csv(out_dir / "pr_curve.csv", curve)
    evaluation.write_summary_csv(out_dir / "summary.csv", summary)
    print(f"pairs={len(pairs)} f1_max={summary['f1_max']:.4f} "
          f"accepted_positives={summary['accepted_positives']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oscontext",
        description="Object-centric LiDAR place recognition pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="dump main objects per frame to CSV")
    p_extract.add_argument("--dataset", required=True, metavar="DIR")
    p_extract.add_argument("--out", required=True, metavar="DIR")
    _add_config_flags(p_extract)
    p_extract.set_defaults(func=cmd_extract)

    p_describe = sub.add_parser("describe", help="serialize descriptors for a sequence")
    p_describe.add_argument("--dataset", required=True, metavar="DIR")
    p_describe.add_argument("--out", required=True, metavar="DIR")
    _add_config_flags(p_describe)
    p_describe.set_defaults(func=cmd_describe)

    p_match = sub.add_parser("match", help="match two described frames")
    p_match.add_argument("--descriptors", required=True, metavar="FILE")
    p_match.add_argument("--frame-a", type=int, required=True)
    p_match.add_argument("--frame-b", type=int, required=True)
    p_match.add_argument("--out", required=True, metavar="DIR")
    _add_config_flags(p_match)
    p_match.set_defaults(func=cmd_match)

    p_eval = sub.add_parser("evaluate", help="run the sampling + PR/F1 protocol")
    p_eval.add_argument("--dataset", metavar="DIR")
    p_eval.add_argument("--out", required=True, metavar="DIR")
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--count-pos", type=int, default=2000)
    p_eval.add_argument("--count-neg", type=int, default=2000)
    p_eval.add_argument("--synthetic", action="store_true",
                        help="evaluate on generated scenes instead of a dataset")
    p_eval.add_argument("--synthetic-places", type=int, default=60,
                        help="number of synthetic places (two views each)")
    _add_config_flags(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OscError as exc:
        for cls, category in _ERROR_CATEGORIES:
            if isinstance(exc, cls):
                print(f"error: {category}: {exc}", file=sys.stderr)
                return 1
        raise AssertionError("unreachable")
    except OSError as exc:
        print(f"error: missing-input: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
