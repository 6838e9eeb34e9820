"""Evaluation protocol: pair sampling, PR curves, pose errors, synthetic scenes.

The synthetic generator doubles as a ground-truth oracle: it builds worlds of
pole-like objects plus angularly diverse clutter, renders them from arbitrary
planar sensor poses, and the known poses let every stage of the pipeline be
checked end to end without real data.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .config import OscConfig, validate
from .dataset import FramePose, PointCloud, SemanticLabels
from .descriptor import ObjectScanContext
from .errors import EvaluationError
from .filtering import PlaceMatch, match_frames
from .pose import RelativePose, wrap_angle

POLE_CLASS = 80
CLUTTER_CLASS = 40


@dataclass(frozen=True)
class LabeledPair:
    frame_a: int           # query side
    frame_b: int           # candidate side
    is_positive: bool
    gt_pose: RelativePose  # planar projection of the true frame_a <- frame_b transform


@dataclass(frozen=True)
class PrPoint:
    threshold: float
    precision: float
    recall: float


def planar_pose_delta(pose_a: FramePose, pose_b: FramePose) -> RelativePose:
    """Planar (x, y, yaw) projection of the relative transform a <- b."""
    rel_rot = pose_a.rotation.T @ pose_b.rotation
    rel_t = pose_a.rotation.T @ (pose_b.translation - pose_a.translation)
    yaw = math.atan2(rel_rot[1, 0], rel_rot[0, 0])
    return RelativePose(float(rel_t[0]), float(rel_t[1]), wrap_angle(yaw))


def sample_pairs(
    poses: Sequence[FramePose],
    config: OscConfig,
    count_pos: int,
    count_neg: int,
    rng_seed: int,
) -> list[LabeledPair]:
    """Sample labeled frame pairs from a trajectory, deterministically in the seed.

    Positives: ground-truth distance < positive_distance and frame gap >=
    min_frame_gap. Negatives: distance > positive_distance. Each pool is
    sampled uniformly without replacement; an undersized pool is returned
    whole. Pairs carry frame_a = later frame (query) and frame_b = earlier.
    """
    config = validate(config)
    if not poses:
        raise EvaluationError("cannot sample pairs from an empty trajectory")
    rng = np.random.default_rng(rng_seed)
    positions = np.array([p.translation for p in poses])
    n = len(poses)

    pos_pool = _positive_pool(positions, config)
    neg_pool, neg_is_exact = _negative_pool(positions, n, config, count_neg, rng)

    def take(pool: np.ndarray, count: int) -> np.ndarray:
        if pool.shape[0] <= count:
            return pool
        chosen = rng.choice(pool.shape[0], size=count, replace=False)
        return pool[chosen]

    pairs = []
    for i, j in take(pos_pool, count_pos):
        pairs.append(_make_pair(poses, int(i), int(j), True))
    neg_take = neg_pool if not neg_is_exact else take(neg_pool, count_neg)
    for i, j in neg_take:
        pairs.append(_make_pair(poses, int(i), int(j), False))
    return pairs


def _make_pair(poses: Sequence[FramePose], i: int, j: int, positive: bool) -> LabeledPair:
    a, b = max(i, j), min(i, j)
    return LabeledPair(
        frame_a=poses[a].frame_id,
        frame_b=poses[b].frame_id,
        is_positive=positive,
        gt_pose=planar_pose_delta(poses[a], poses[b]),
    )


def _positive_pool(positions: np.ndarray, config: OscConfig) -> np.ndarray:
    tree = cKDTree(positions)
    raw = tree.query_pairs(config.positive_distance, output_type="ndarray")
    if raw.size == 0:
        return raw.reshape(0, 2)
    i, j = raw[:, 0], raw[:, 1]
    dist = np.linalg.norm(positions[i] - positions[j], axis=1)
    keep = (dist < config.positive_distance) & (np.abs(i - j) >= config.min_frame_gap)
    pool = raw[keep]
    return pool[np.lexsort((pool[:, 1], pool[:, 0]))]


_BRUTE_FORCE_LIMIT = 1500  # frames; above this negatives are rejection-sampled


def _negative_pool(
    positions: np.ndarray,
    n: int,
    config: OscConfig,
    count_neg: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, bool]:
    """Negative pairs, plus whether the pool is the exact (enumerated) one."""
    if n <= _BRUTE_FORCE_LIMIT:
        i, j = np.triu_indices(n, k=1)
        dist = np.linalg.norm(positions[i] - positions[j], axis=1)
        keep = dist > config.positive_distance
        return np.column_stack([i[keep], j[keep]]), True
    # Large trajectory: the negative pool has millions of entries, so uniform
    # rejection sampling without replacement is equivalent and much cheaper.
    chosen: set[tuple[int, int]] = set()
    out = []
    attempts = 0
    while len(out) < count_neg and attempts < 200 * max(count_neg, 1):
        attempts += 1
        i, j = rng.integers(0, n, size=2)
        if i == j:
            continue
        i, j = (int(min(i, j)), int(max(i, j)))
        if (i, j) in chosen:
            continue
        if np.linalg.norm(positions[i] - positions[j]) > config.positive_distance:
            chosen.add((i, j))
            out.append((i, j))
    return np.array(out, dtype=np.intp).reshape(-1, 2), False


def pr_curve(scores: Sequence[tuple[float, bool]]) -> list[PrPoint]:
    """Precision-recall points swept over the distinct similarity values.

    At each threshold t a pair is predicted positive iff its similarity >= t.
    Points come back ordered by ascending recall. Raises when no positive
    label is present (recall would be undefined).
    """
    if not scores:
        raise EvaluationError("pr_curve needs at least one scored pair")
    sims = np.array([s for s, _ in scores], dtype=np.float64)
    labels = np.array([bool(p) for _, p in scores])
    total_pos = int(labels.sum())
    if total_pos == 0:
        raise EvaluationError("pr_curve needs at least one positive pair")
    order = np.argsort(-sims, kind="stable")
    sims, labels = sims[order], labels[order]
    # index of the last element of each run of equal scores
    last_of_run = np.flatnonzero(np.diff(sims) != 0)
    boundaries = np.r_[last_of_run, sims.size - 1]
    tp = np.cumsum(labels)[boundaries]
    predicted = boundaries + 1
    precision = np.where(predicted > 0, tp / predicted, 1.0)
    recall = tp / total_pos
    points = [
        PrPoint(float(sims[b]), float(p), float(r))
        for b, p, r in zip(boundaries, precision, recall)
    ]
    points.sort(key=lambda pt: pt.recall)
    return points


def f1_max(curve: Sequence[PrPoint]) -> float:
    """Best harmonic mean of precision and recall along the curve."""
    if not curve:
        raise EvaluationError("empty precision-recall curve")
    best = 0.0
    for pt in curve:
        denom = pt.precision + pt.recall
        if denom > 0:
            best = max(best, 2.0 * pt.precision * pt.recall / denom)
    return best


def pose_error(est: RelativePose, gt: RelativePose) -> tuple[float, float]:
    """Planar translation error [m] and absolute wrapped yaw error [rad]."""
    trans = math.hypot(est.dx - gt.dx, est.dy - gt.dy)
    rot = abs(wrap_angle(est.dtheta - gt.dtheta))
    return trans, rot


@dataclass(frozen=True)
class SyntheticScene:
    points: np.ndarray            # (N, 4) world frame: x, y, z, intensity
    class_ids: np.ndarray         # (N,) uint16
    object_positions: np.ndarray  # (num_objects, 2) world planar pole centers


_SCENE_RADIUS = 20.0   # clutter extent [m]
_POLE_SPREAD = 7.0     # poles inside this disk, so pairwise gaps stay <= 14 m
_POLE_MIN_GAP = 3.0
_ORIGIN_CLEARANCE = 2.0


def generate_synthetic_scene(
    rng_seed: int,
    num_objects: int,
    clutter_density: float = 0.032,
) -> SyntheticScene:
    """Random world of vertical poles plus clutter, deterministic in the seed.

    Poles (class 80) are tight vertical clusters of 60-79 points, pairwise
    3-14 m apart and >= 2 m from the origin. Clutter (class 40) comes as
    compact clusters with a per-cluster height level, which gives every
    angular region of the scene a distinct height signature;
    ``clutter_density`` is clusters per square metre of the scene disk.
    """
    if num_objects < 1:
        raise ValueError(f"num_objects must be >= 1, got {num_objects}")
    rng = np.random.default_rng(rng_seed)

    centers: list[np.ndarray] = []
    attempts = 0
    while len(centers) < num_objects:
        attempts += 1
        if attempts > 10_000:
            raise EvaluationError(
                f"cannot place {num_objects} poles 3-14 m apart; lower the count"
            )
        c = rng.uniform(-_POLE_SPREAD, _POLE_SPREAD, size=2)
        if np.hypot(*c) > _POLE_SPREAD or np.hypot(*c) < _ORIGIN_CLEARANCE:
            continue
        if any(np.hypot(*(c - prev)) < _POLE_MIN_GAP for prev in centers):
            continue
        centers.append(c)
    object_positions = np.array(centers)

    chunks, labels = [], []
    for c in centers:
        count = int(rng.integers(60, 80))
        height = 2.5 + rng.uniform(0.0, 1.5)
        z = np.linspace(0.0, height, count) + rng.uniform(-0.01, 0.01, count)
        xy = c + rng.normal(0.0, 0.05, size=(count, 2))
        chunks.append(np.column_stack([xy, z, np.zeros(count)]))
        labels.append(np.full(count, POLE_CLASS, dtype=np.uint16))

    n_clutter = int(round(clutter_density * math.pi * _SCENE_RADIUS ** 2))
    for _ in range(n_clutter):
        radius = _SCENE_RADIUS * math.sqrt(rng.uniform())
        angle = rng.uniform(0.0, 2.0 * math.pi)
        center = radius * np.array([math.cos(angle), math.sin(angle)])
        count = int(rng.integers(8, 25))
        level = rng.uniform(0.3, 5.0)
        xy = center + rng.normal(0.0, 0.4, size=(count, 2))
        z = rng.uniform(0.0, level, size=count)
        chunks.append(np.column_stack([xy, z, np.zeros(count)]))
        labels.append(np.full(count, CLUTTER_CLASS, dtype=np.uint16))

    points = np.vstack(chunks)
    class_ids = np.concatenate(labels)
    order = rng.permutation(points.shape[0])
    return SyntheticScene(points[order], class_ids[order], object_positions)


def translate_scene(scene: SyntheticScene, dx: float, dy: float) -> SyntheticScene:
    """Move a generated world to another planar location."""
    points = scene.points.copy()
    points[:, 0] += dx
    points[:, 1] += dy
    return SyntheticScene(points, scene.class_ids, scene.object_positions + (dx, dy))


def view_scene(
    scene: SyntheticScene,
    sensor_pose: tuple[float, float, float],
    frame_id: int = 0,
) -> tuple[PointCloud, SemanticLabels]:
    """Express the scene in the frame of a sensor at planar pose (x, y, yaw).

    No occlusion or range falloff is modeled; z and intensity pass through.
    """
    tx, ty, yaw = sensor_pose
    cos_y, sin_y = math.cos(yaw), math.sin(yaw)
    dx = scene.points[:, 0] - tx
    dy = scene.points[:, 1] - ty
    local = scene.points.copy()
    local[:, 0] = cos_y * dx + sin_y * dy
    local[:, 1] = -sin_y * dx + cos_y * dy
    return (
        PointCloud(frame_id, local),
        SemanticLabels(frame_id, scene.class_ids.copy()),
    )


def sensor_frame_pose(sensor_pose: tuple[float, float, float], frame_id: int) -> FramePose:
    """FramePose equivalent of a planar sensor pose, for ground-truth tables."""
    tx, ty, yaw = sensor_pose
    cos_y, sin_y = math.cos(yaw), math.sin(yaw)
    rotation = np.array([
        [cos_y, -sin_y, 0.0],
        [sin_y, cos_y, 0.0],
        [0.0, 0.0, 1.0],
    ])
    return FramePose(frame_id, rotation, np.array([tx, ty, 0.0]))


def evaluate_pairs(
    descriptor_map: Mapping[int, Sequence[ObjectScanContext]],
    pairs: Sequence[LabeledPair],
    config: OscConfig,
) -> tuple[list[PlaceMatch], list[tuple[float, bool]], list[tuple[float, float]]]:
    """Run the frame matcher over labeled pairs.

    Returns the per-pair decisions, (similarity, is_positive) scores for the
    PR sweep, and (translation, rotation) errors of accepted positives.
    """
    matches, scores, errors = [], [], []
    for pair in pairs:
        pm = match_frames(
            descriptor_map.get(pair.frame_a, ()),
            descriptor_map.get(pair.frame_b, ()),
            config,
            frame_q=pair.frame_a,
            frame_c=pair.frame_b,
        )
        matches.append(pm)
        scores.append((pm.similarity, pair.is_positive))
        if pm.accepted and pair.is_positive:
            errors.append(pose_error(pm.fused_pose, pair.gt_pose))
    return matches, scores, errors


def summarize(scores: Sequence[tuple[float, bool]], errors: Sequence[tuple[float, float]]) -> dict:
    curve = pr_curve(scores)
    trans = np.array([e[0] for e in errors]) if errors else np.array([])
    rot = np.array([e[1] for e in errors]) if errors else np.array([])
    return {
        "f1_max": f1_max(curve),
        "accepted_positives": len(errors),
        "mean_trans_err_m": float(trans.mean()) if trans.size else float("nan"),
        "median_trans_err_m": float(np.median(trans)) if trans.size else float("nan"),
        "mean_rot_err_rad": float(rot.mean()) if rot.size else float("nan"),
        "median_rot_err_rad": float(np.median(rot)) if rot.size else float("nan"),
    }


def write_pr_csv(path: str | Path, curve: Sequence[PrPoint]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["threshold", "precision", "recall"])
        for pt in curve:
            writer.writerow([repr(pt.threshold), repr(pt.precision), repr(pt.recall)])


def write_summary_csv(path: str | Path, summary: dict) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(list(summary.keys()))
        writer.writerow([v if isinstance(v, int) else repr(float(v)) for v in summary.values()])
