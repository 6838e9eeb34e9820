"""Frame-pair decision logic on top of pairwise descriptor matches.

All object pairs of two frames are matched, thinned by mutual-exclusion greedy
selection, thresholded on similarity, and the surviving pose hypotheses are
clustered; the pair is accepted only when the largest cluster carries enough
of the hypotheses, and its mean becomes the fused pose.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import OscConfig
from .descriptor import ObjectScanContext
from .matching import MatchResult, match_pair
from .objects import euclidean_cluster
from .pose import RelativePose, wrap_angle


@dataclass(frozen=True)
class PlaceMatch:
    frame_q: int
    frame_c: int
    accepted: bool
    similarity: float
    fused_pose: RelativePose | None  # present iff accepted
    support: int                     # size of the largest pose cluster
    hypotheses: tuple[MatchResult, ...]  # greedy picks that passed the threshold


def greedy_select(table: Sequence[Sequence[MatchResult]]) -> list[MatchResult]:
    """Mutually exclusive picks from an m x n match table, best first.

    Repeatedly takes the highest similarity among pairs whose query and
    candidate objects are both still unused, until one side is exhausted.
    Ties resolve to the smaller query index, then the smaller candidate index.
    """
    m, n = len(table), len(table[0])
    sims = np.array([[table[i][j].similarity for j in range(n)] for i in range(m)])
    picked = []
    for _ in range(min(m, n)):
        i, j = np.unravel_index(np.argmax(sims), sims.shape)  # first max, row-major
        picked.append(table[i][j])
        sims[i, :] = -np.inf
        sims[:, j] = -np.inf
    return picked


def threshold_filter(selected: list[MatchResult], threshold: float) -> list[MatchResult]:
    """Keep results with similarity >= threshold, order preserved."""
    return [r for r in selected if r.similarity >= threshold]


def required_support(hypothesis_count: int, fraction: float) -> int:
    return max(1, math.ceil(fraction * hypothesis_count))


def _largest_cluster(poses: Sequence[RelativePose], config: OscConfig) -> tuple[RelativePose, int]:
    """Fused mean pose and size of the largest single-linkage pose cluster.

    Poses embed as (dx, dy, pose_angle_scale * dtheta) with angles unwrapped
    against the first hypothesis so clusters cannot split across the +-pi
    seam. When sizes tie, the cluster holding the earliest hypothesis wins
    (hypotheses arrive ordered by decreasing similarity).
    """
    theta0 = poses[0].dtheta
    unwrapped = np.array([theta0 + wrap_angle(p.dtheta - theta0) for p in poses])
    embedded = np.column_stack([
        [p.dx for p in poses],
        [p.dy for p in poses],
        config.pose_angle_scale * unwrapped,
    ])
    clusters = euclidean_cluster(embedded, config.pose_cluster_tolerance, 1)
    sizes = [c.size for c in clusters]
    best = clusters[int(np.argmax(sizes))]  # clusters are ordered by earliest member
    fused = RelativePose(
        dx=float(np.mean(embedded[best, 0])),
        dy=float(np.mean(embedded[best, 1])),
        dtheta=wrap_angle(float(np.mean(unwrapped[best]))),
    )
    return fused, int(best.size)


def cluster_pose_hypotheses(
    poses: Sequence[RelativePose],
    config: OscConfig,
) -> tuple[RelativePose, int] | None:
    """Fuse pose hypotheses; None means the largest cluster is too small."""
    if not poses:
        return None
    fused, support = _largest_cluster(poses, config)
    if support < required_support(len(poses), config.pose_min_cluster_fraction):
        return None
    return fused, support


def match_frames(
    descriptors_q: Sequence[ObjectScanContext],
    descriptors_c: Sequence[ObjectScanContext],
    config: OscConfig,
    frame_q: int | None = None,
    frame_c: int | None = None,
) -> PlaceMatch:
    """Full frame-pair decision from the two frames' descriptor sets."""
    if frame_q is None:
        frame_q = descriptors_q[0].object.frame_id if descriptors_q else -1
    if frame_c is None:
        frame_c = descriptors_c[0].object.frame_id if descriptors_c else -1

    def rejected(support: int = 0, hypotheses: tuple = (), similarity: float = 0.0) -> PlaceMatch:
        return PlaceMatch(frame_q, frame_c, False, similarity, None, support, hypotheses)

    if not descriptors_q or not descriptors_c:
        return rejected()
    table = [[match_pair(q, c, config) for c in descriptors_c] for q in descriptors_q]
    surviving = threshold_filter(greedy_select(table), config.similarity_threshold)
    if not surviving:
        return rejected()
    fused, support = _largest_cluster([r.relative_pose for r in surviving], config)
    similarity = max(r.similarity for r in surviving)
    accepted = support >= required_support(len(surviving), config.pose_min_cluster_fraction)
    if not accepted:
        return rejected(support, tuple(surviving), similarity)
    return PlaceMatch(frame_q, frame_c, True, similarity, fused, support, tuple(surviving))


def write_place_matches_csv(path: str | Path, matches: list[PlaceMatch]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["frame_q", "frame_c", "accepted", "similarity",
                         "dx", "dy", "dtheta", "support"])
        for m in matches:
            pose = m.fused_pose
            writer.writerow([
                m.frame_q, m.frame_c, int(m.accepted), repr(m.similarity),
                repr(pose.dx) if pose else "",
                repr(pose.dy) if pose else "",
                repr(pose.dtheta) if pose else "",
                m.support,
            ])
