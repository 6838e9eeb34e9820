"""Descriptor retrieval and pairwise matching.

Retrieval is exact nearest-neighbor search over ring keys (rotation-invariant,
so viewpoint changes barely move them). Pairwise matching first estimates the
column shift from the sector keys, then refines it inside a circular window by
minimizing the mean per-column cosine distance between the query matrix and
the left-rotated candidate matrix.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import csv
import numpy as np
from pathlib import Path
from scipy.spatial import cKDTree

from .config import OscConfig
from .descriptor import ObjectScanContext
from .pose import RelativePose, relative_pose, shift_to_angle


@dataclass(frozen=True)
class MatchResult:
    query: ObjectScanContext
    candidate: ObjectScanContext
    offset: int          # columns the candidate was rotated left to align
    similarity: float
    relative_pose: RelativePose  # query <- candidate


def estimate_shift(sector_key_q: np.ndarray, sector_key_c: np.ndarray) -> int:
    """Left rotation of the candidate sector key that best matches the query's.

    Minimizes the L2 distance over all rotations; ties go to the smallest
    shift.
    """
    k_q = np.asarray(sector_key_q, dtype=np.float64)
    k_c = np.asarray(sector_key_c, dtype=np.float64)
    if k_q.shape != k_c.shape or k_q.ndim != 1:
        raise ValueError(f"sector keys must share one length, got {k_q.shape} vs {k_c.shape}")
    n = k_c.size
    idx = (np.arange(n)[None, :] + np.arange(n)[:, None]) % n
    dists = np.linalg.norm(k_c[idx] - k_q[None, :], axis=1)
    return int(np.argmin(dists))


def _column_units(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Columns normalized to unit length, plus a mask of nonzero columns."""
    norms = np.linalg.norm(matrix, axis=0)
    valid = norms > 0.0
    units = np.zeros_like(matrix, dtype=np.float64)
    units[:, valid] = matrix[:, valid] / norms[valid]
    return units, valid


def descriptor_distance(matrix_q: np.ndarray, matrix_c: np.ndarray) -> float:
    """Mean cosine distance over columns where both matrices are nonzero.

    Computed as 0.5*||u - v||^2 on unit columns, which equals 1 - cos(u, v)
    but is exactly 0 for identical columns. Columns empty on either side are
    skipped; if none remain the distance is 1.
    """
    if matrix_q.shape != matrix_c.shape:
        raise ValueError(f"matrix shapes differ: {matrix_q.shape} vs {matrix_c.shape}")
    units_q, valid_q = _column_units(np.asarray(matrix_q, dtype=np.float64))
    units_c, valid_c = _column_units(np.asarray(matrix_c, dtype=np.float64))
    valid = valid_q & valid_c
    if not valid.any():
        return 1.0
    diffs = units_q[:, valid] - units_c[:, valid]
    per_column = 0.5 * np.einsum("ij,ij->j", diffs, diffs)
    return float(per_column.mean())


def match_descriptors(
    osc_q: ObjectScanContext,
    osc_c: ObjectScanContext,
    config: OscConfig,
) -> tuple[int, float]:
    """Precise column offset and similarity of a descriptor pair.

    The search window spans ``shift_window_halfwidth`` columns either side of
    the sector-key estimate, circularly. Returns ``(n, 1 - min_distance)``
    where n is the left rotation applied to the candidate; distance ties are
    broken toward the window center, then toward the smaller n.
    """
    if osc_q.matrix.shape != osc_c.matrix.shape:
        raise ValueError(
            f"descriptor shapes differ: {osc_q.matrix.shape} vs {osc_c.matrix.shape}"
        )
    n_s = osc_q.num_sectors
    k = min(config.shift_window_halfwidth, (n_s - 1) // 2)
    shift = estimate_shift(osc_q.sector_key, osc_c.sector_key)

    units_q, valid_q = _column_units(osc_q.matrix.astype(np.float64, copy=False))
    units_c, valid_c = _column_units(osc_c.matrix.astype(np.float64, copy=False))

    best: tuple[float, int, int] | None = None
    for delta in range(-k, k + 1):
        n = (shift + delta) % n_s
        cols = (np.arange(n_s) + n) % n_s  # left rotation by n
        valid = valid_q & valid_c[cols]
        if valid.any():
            diffs = units_q[:, valid] - units_c[:, cols][:, valid]
            dist = float(0.5 * np.einsum("ij,ij->j", diffs, diffs).mean())
        else:
            dist = 1.0
        key = (dist, abs(delta), n)
        if best is None or key < best:
            best = key
    dist, _, n = best
    return n, 1.0 - dist


def match_pair(
    osc_q: ObjectScanContext,
    osc_c: ObjectScanContext,
    config: OscConfig,
) -> MatchResult:
    """Match one descriptor pair and derive the planar relative pose."""
    n, similarity = match_descriptors(osc_q, osc_c, config)
    gamma = shift_to_angle(n, osc_q.num_sectors)
    pose = relative_pose(osc_q.object.position, osc_c.object.position, gamma)
    return MatchResult(osc_q, osc_c, n, similarity, pose)


class DescriptorIndex:
    """Exact KD-tree retrieval over ring keys.

    Insertions invalidate the tree; it is rebuilt lazily on the next query,
    so the index supports one writer or many concurrent readers.
    """

    def __init__(self, num_rings: int):
        self.num_rings = num_rings
        self._keys: list[np.ndarray] = []
        self._owners: list[tuple[int, int]] = []
        self._tree: cKDTree | None = None

    def __len__(self) -> int:
        return len(self._keys)

    def insert(self, osc: ObjectScanContext) -> None:
        key = np.asarray(osc.ring_key, dtype=np.float64)
        if key.shape != (self.num_rings,):
            raise ValueError(
                f"ring key has length {key.size}, index expects {self.num_rings}"
            )
        self._keys.append(key)
        self._owners.append((osc.object.frame_id, osc.object.object_index))
        self._tree = None

    def insert_frame(self, descriptors: Iterable[ObjectScanContext]) -> None:
        for osc in descriptors:
            self.insert(osc)

    def query(self, ring_key: np.ndarray, k: int) -> list[tuple[float, int, int]]:
        """k nearest entries as (distance, frame_id, object_index), empty if unfilled."""
        if not self._keys:
            return []
        if self._tree is None:
            self._tree = cKDTree(np.vstack(self._keys))
        k = min(k, len(self._keys))
        dists, idxs = self._tree.query(np.asarray(ring_key, dtype=np.float64), k=k)
        dists, idxs = np.atleast_1d(dists), np.atleast_1d(idxs)
        return [(float(d), *self._owners[i]) for d, i in zip(dists, idxs)]

    def candidate_frames(
        self,
        descriptors: Sequence[ObjectScanContext],
        k: int,
        exclude: Callable[[int], bool] | None = None,
    ) -> set[int]:
        """Union of the frames owning each query descriptor's k nearest keys.

        Frames for which ``exclude`` returns True (e.g. temporal neighbors of
        the query) are left out.
        """
        frames: set[int] = set()
        for osc in descriptors:
            for _, frame_id, _ in self.query(osc.ring_key, k):
                if exclude is None or not exclude(frame_id):
                    frames.add(frame_id)
        return frames


def write_pair_matches_csv(path: str | Path, results: list[MatchResult]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["frame_q", "obj_q", "frame_c", "obj_c", "n", "similarity"])
        for r in results:
            writer.writerow([
                r.query.object.frame_id, r.query.object.object_index,
                r.candidate.object.frame_id, r.candidate.object.object_index,
                r.offset, repr(r.similarity),
            ])
