"""Main-object extraction: semantic filtering, Euclidean clustering, centroids."""
from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .config import OscConfig, validate
from .dataset import PointCloud, SemanticLabels
from .errors import DataFormatError


@dataclass(frozen=True)
class MainObject:
    frame_id: int
    object_index: int
    centroid_x: float
    centroid_y: float
    point_count: int

    @property
    def position(self) -> tuple[float, float]:
        return (self.centroid_x, self.centroid_y)


def filter_semantic(
    cloud: PointCloud,
    labels: SemanticLabels,
    classes: frozenset[int] | set[int],
) -> tuple[PointCloud, np.ndarray]:
    """Keep points whose class id is in ``classes``; also return their original indices."""
    if len(cloud) != len(labels):
        raise DataFormatError(
            f"frame {cloud.frame_id}: {len(cloud)} points but {len(labels)} labels"
        )
    if classes:
        mask = np.isin(labels.class_ids, np.fromiter(classes, dtype=np.int64))
    else:
        mask = np.zeros(len(cloud), dtype=bool)
    indices = np.flatnonzero(mask)
    return PointCloud(cloud.frame_id, cloud.points[indices]), indices


def euclidean_cluster(
    points: np.ndarray,
    tolerance: float,
    min_points: int,
) -> list[np.ndarray]:
    """Single-linkage clusters of a 3D point set.

    Two points share a cluster iff they are connected by a chain of points
    with consecutive distances <= tolerance. Clusters smaller than
    ``min_points`` are dropped; the rest come back as sorted index arrays,
    ordered by their smallest member index.
    """
    if tolerance <= 0:
        raise ValueError(f"tolerance must be > 0, got {tolerance}")
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if n == 0:
        return []
    tree = cKDTree(points)
    visited = np.zeros(n, dtype=bool)
    clusters = []
    for seed in range(n):
        if visited[seed]:
            continue
        visited[seed] = True
        members = []
        queue = deque([seed])
        while queue:
            i = queue.popleft()
            members.append(i)
            for j in tree.query_ball_point(points[i], tolerance):
                if not visited[j]:
                    visited[j] = True
                    queue.append(j)
        if len(members) >= min_points:
            clusters.append(np.array(sorted(members), dtype=np.intp))
    return clusters


def extract_main_objects(
    cloud: PointCloud,
    labels: SemanticLabels,
    config: OscConfig,
) -> list[MainObject]:
    """Filter by semantics, cluster, and reduce each cluster to a planar centroid.

    Objects whose centroid lies closer than ``min_object_range`` to the sensor
    are dropped (their bearing is ill-defined). Output is sorted by descending
    point count, then ascending object index.
    """
    config = validate(config)
    subset, _ = filter_semantic(cloud, labels, config.main_object_classes)
    clusters = euclidean_cluster(
        subset.points[:, :3], config.cluster_tolerance, config.cluster_min_points
    )
    objects = []
    for cluster in clusters:
        cx, cy = subset.points[cluster, :2].astype(np.float64).mean(axis=0)
        if float(np.hypot(cx, cy)) < config.min_object_range:
            continue
        objects.append(MainObject(
            frame_id=cloud.frame_id,
            object_index=len(objects),
            centroid_x=float(cx),
            centroid_y=float(cy),
            point_count=int(cluster.size),
        ))
    objects.sort(key=lambda o: (-o.point_count, o.object_index))
    return objects


def write_objects_csv(path: str | Path, objects: list[MainObject]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["frame_id", "object_index", "centroid_x", "centroid_y", "point_count"])
        for o in objects:
            writer.writerow([o.frame_id, o.object_index, repr(o.centroid_x),
                             repr(o.centroid_y), o.point_count])


def read_objects_csv(path: str | Path) -> list[MainObject]:
    objects = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            objects.append(MainObject(
                frame_id=int(row["frame_id"]),
                object_index=int(row["object_index"]),
                centroid_x=float(row["centroid_x"]),
                centroid_y=float(row["centroid_y"]),
                point_count=int(row["point_count"]),
            ))
    return objects
