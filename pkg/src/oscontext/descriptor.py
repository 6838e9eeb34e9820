"""Object-centric polar descriptors.

A descriptor is an ``num_rings x num_sectors`` matrix built around one main
object: the plane within ``max_radius`` of the object is divided into
equal-width rings and equal-angle sectors, and each grid cell holds the mean
point height (plus ``height_offset``) of the points that fall inside it.

The angular reference (sector 0 boundary) is the bearing of the object as seen
from the sensor, counterclockwise positive. Because that reference co-rotates
with the viewpoint, two observations of the same object from different poses
produce matrices that differ by a circular column shift - which matching
recovers, and from which the full planar relative pose follows.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import OscConfig
from .dataset import PointCloud
from .errors import DataFormatError
from .objects import MainObject

_MAGIC = b"OSCD"
_VERSION = 1
_HEADER = struct.Struct("<4sII")
_RECORD = struct.Struct("<iiiddii")


@dataclass(frozen=True)
class ObjectScanContext:
    matrix: np.ndarray      # (num_rings, num_sectors) mean shifted heights
    ring_key: np.ndarray    # (num_rings,) row means; invariant to column rotation
    sector_key: np.ndarray  # (num_sectors,) column means; co-rotates with columns
    object: MainObject      # carries the observation position (centroid_x, centroid_y)

    @property
    def num_rings(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_sectors(self) -> int:
        return self.matrix.shape[1]


def compute_ring_key(matrix: np.ndarray) -> np.ndarray:
    # fsum makes each row mean independent of column order, so the ring key of
    # a column-rotated matrix is bitwise identical to the original's.
    return np.array([math.fsum(row) / matrix.shape[1] for row in matrix])


def compute_sector_key(matrix: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(col) / matrix.shape[0] for col in matrix.T])


def build_osc(cloud: PointCloud, obj: MainObject, config: OscConfig) -> ObjectScanContext:
    """Build the polar grid descriptor of ``obj`` from its frame's point cloud.

    Binning rules: a point at planar distance r <= max_radius from the object
    goes to ring min(floor(r / ring_width), num_rings - 1); its angle,
    measured counterclockwise from the sensor-to-object bearing and wrapped to
    [0, 2*pi), selects the sector the same way. Cell values are the mean of
    (z + height_offset) over the points assigned to the cell, 0 for empty
    cells. All of the frame's points contribute, including the object's own.
    """
    x_o, y_o = obj.centroid_x, obj.centroid_y
    if math.hypot(x_o, y_o) < config.min_object_range:
        raise ValueError(
            f"object {obj.object_index} of frame {obj.frame_id} lies within "
            f"{config.min_object_range} m of the sensor"
        )
    n_r, n_s = config.num_rings, config.num_sectors
    pts = cloud.points.astype(np.float64, copy=False)
    dx = pts[:, 0] - x_o
    dy = pts[:, 1] - y_o
    r = np.hypot(dx, dy)
    keep = r <= config.max_radius
    dx, dy, r = dx[keep], dy[keep], r[keep]
    heights = pts[keep, 2] + config.height_offset

    ring_width = config.max_radius / n_r
    sector_width = 2.0 * math.pi / n_s
    rings = np.minimum((r / ring_width).astype(np.intp), n_r - 1)
    angles = (np.arctan2(dy, dx) - math.atan2(y_o, x_o)) % (2.0 * math.pi)
    sectors = np.minimum((angles / sector_width).astype(np.intp), n_s - 1)

    flat = rings * n_s + sectors
    sums = np.bincount(flat, weights=heights, minlength=n_r * n_s)
    counts = np.bincount(flat, minlength=n_r * n_s)
    matrix = np.zeros(n_r * n_s)
    filled = counts > 0
    matrix[filled] = sums[filled] / counts[filled]
    matrix = matrix.reshape(n_r, n_s)
    return ObjectScanContext(
        matrix=matrix,
        ring_key=compute_ring_key(matrix),
        sector_key=compute_sector_key(matrix),
        object=obj,
    )


def rotate_columns(matrix: np.ndarray, n: int) -> np.ndarray:
    """Circularly shift columns left by ``n`` (taken mod the column count)."""
    return np.roll(matrix, -(n % matrix.shape[1]), axis=1)


def save_descriptors(path: str | Path, descriptors: list[ObjectScanContext]) -> None:
    """Serialize descriptors to the versioned OSCD binary format.

    Layout (all little-endian): magic ``OSCD``, uint32 version, uint32 count,
    then per descriptor an int32 triple (frame_id, object_index, point_count),
    two float64 (centroid_x, centroid_y), two int32 (num_rings, num_sectors),
    followed by num_rings*num_sectors float64 matrix entries, row-major.
    """
    with open(path, "wb") as f:
        f.write(_HEADER.pack(_MAGIC, _VERSION, len(descriptors)))
        for osc in descriptors:
            o = osc.object
            f.write(_RECORD.pack(o.frame_id, o.object_index, o.point_count,
                                 o.centroid_x, o.centroid_y,
                                 osc.num_rings, osc.num_sectors))
            f.write(np.ascontiguousarray(osc.matrix, dtype="<f8").tobytes())


def load_descriptors(path: str | Path) -> list[ObjectScanContext]:
    """Read descriptors written by ``save_descriptors``; keys are recomputed."""
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise DataFormatError(f"{path}: too short for a descriptor file header")
    magic, version, count = _HEADER.unpack_from(blob, 0)
    if magic != _MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    offset = _HEADER.size
    descriptors = []
    for k in range(count):
        if offset + _RECORD.size > len(blob):
            raise DataFormatError(f"{path}: truncated at descriptor {k}")
        frame_id, object_index, point_count, cx, cy, n_r, n_s = \
            _RECORD.unpack_from(blob, offset)
        offset += _RECORD.size
        n_bytes = n_r * n_s * 8
        if offset + n_bytes > len(blob):
            raise DataFormatError(f"{path}: truncated matrix in descriptor {k}")
        matrix = np.frombuffer(blob, dtype="<f8", count=n_r * n_s, offset=offset)
        matrix = matrix.reshape(n_r, n_s).copy()
        offset += n_bytes
        obj = MainObject(frame_id, object_index, cx, cy, point_count)
        descriptors.append(ObjectScanContext(
            matrix=matrix,
            ring_key=compute_ring_key(matrix),
            sector_key=compute_sector_key(matrix),
            object=obj,
        ))
    return descriptors
