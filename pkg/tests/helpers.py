"""Independent brute-force oracles used to pin expected values.

Everything here is deliberately written with plain loops and none of the
package's vectorized machinery, so tests compare two independent routes.
"""
from __future__ import annotations

import math

import numpy as np

from oscontext.descriptor import ObjectScanContext, rotate_columns
from oscontext.matching import descriptor_distance


def brute_force_clusters(points: np.ndarray, tolerance: float) -> set[frozenset]:
    """Connected components of the <=tolerance graph via union-find."""
    n = len(points)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i + 1, n):
            if math.dist(points[i], points[j]) <= tolerance:
                parent[find(i)] = find(j)
    groups: dict[int, set[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), set()).add(i)
    return {frozenset(g) for g in groups.values()}


def brute_force_shift(key_q, key_c) -> int:
    """Scalar-loop argmin over every left rotation of the candidate key."""
    n = len(key_c)
    best_shift, best_dist = 0, float("inf")
    for shift in range(n):
        total = 0.0
        for j in range(n):
            diff = key_q[j] - key_c[(j + shift) % n]
            total += diff * diff
        dist = math.sqrt(total)
        if dist < best_dist:
            best_shift, best_dist = shift, dist
    return best_shift


def exhaustive_match(osc_q: ObjectScanContext, osc_c: ObjectScanContext) -> tuple[int, float]:
    """Best offset over the full rotation range, no sector-key seeding."""
    n_s = osc_q.num_sectors
    best_n, best_dist = 0, float("inf")
    for n in range(n_s):
        d = descriptor_distance(osc_q.matrix, rotate_columns(osc_c.matrix, n))
        if d < best_dist:
            best_n, best_dist = n, d
    return best_n, 1.0 - best_dist


def scalar_osc_cell(point, obj_xy, num_rings, num_sectors, max_radius, height_offset):
    """Pure-scalar polar binning of one point; None when out of range."""
    px, py, pz = point
    ox, oy = obj_xy
    r = math.hypot(px - ox, py - oy)
    if r > max_radius:
        return None
    ring = min(int(r / (max_radius / num_rings)), num_rings - 1)
    angle = (math.atan2(py - oy, px - ox) - math.atan2(oy, ox)) % (2.0 * math.pi)
    sector = min(int(angle / (2.0 * math.pi / num_sectors)), num_sectors - 1)
    return ring, sector, pz + height_offset
