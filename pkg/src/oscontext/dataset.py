"""Bit-exact readers for KITTI-odometry-style sequences.

File formats handled here:

* ``*.bin``   — point clouds, consecutive little-endian float32 quadruples
                (x, y, z, intensity), sensor frame.
* ``*.label`` — one little-endian uint32 per point; the low 16 bits carry the
                semantic class id, the high 16 bits an instance id (dropped).
* ``poses.txt`` — one pose per line, 12 ASCII floats forming a row-major 3x4
                camera-frame matrix.
* ``calib.txt`` — contains a ``Tr:`` line with 12 floats mapping LiDAR
                coordinates into the camera frame.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError

POINT_DTYPE = np.dtype("<f4")
LABEL_DTYPE = np.dtype("<u4")
POINT_RECORD_BYTES = 16


@dataclass(frozen=True)
class PointCloud:
    frame_id: int
    points: np.ndarray  # (N, 4): x, y, z, intensity

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class SemanticLabels:
    frame_id: int
    class_ids: np.ndarray  # (N,) uint16

    def __len__(self) -> int:
        return self.class_ids.shape[0]


@dataclass(frozen=True)
class FramePose:
    frame_id: int
    rotation: np.ndarray     # (3, 3), orthonormal, det +1
    translation: np.ndarray  # (3,) metres


def _frame_id_from_path(path: Path) -> int:
    stem = path.stem
    return int(stem) if stem.isdigit() else 0


def read_point_cloud(path: str | Path, frame_id: int | None = None) -> PointCloud:
    """Decode a .bin point cloud; rejects truncated files and non-finite points."""
    path = Path(path)
    size = path.stat().st_size
    if size % POINT_RECORD_BYTES != 0:
        raise DataFormatError(
            f"{path}: size {size} bytes is not a multiple of {POINT_RECORD_BYTES}"
        )
    raw = np.fromfile(path, dtype=POINT_DTYPE)
    points = raw.reshape(-1, 4)
    bad = ~np.isfinite(points).all(axis=1)
    if bad.any():
        first = int(np.flatnonzero(bad)[0])
        raise DataFormatError(f"{path}: non-finite value at point {first}")
    if frame_id is None:
        frame_id = _frame_id_from_path(path)
    return PointCloud(frame_id=frame_id, points=points)


def write_point_cloud(path: str | Path, cloud: PointCloud) -> None:
    """Write the .bin format back out; float32 values round-trip bit-exactly."""
    np.ascontiguousarray(cloud.points, dtype=POINT_DTYPE).tofile(path)


def read_labels(path: str | Path, expected_count: int, frame_id: int | None = None) -> SemanticLabels:
    """Decode a .label file, keeping the low 16 bits of every word."""
    path = Path(path)
    size = path.stat().st_size
    if size != LABEL_DTYPE.itemsize * expected_count:
        raise DataFormatError(
            f"{path}: {size} bytes hold {size // LABEL_DTYPE.itemsize} labels "
            f"but the paired cloud has {expected_count} points"
        )
    raw = np.fromfile(path, dtype=LABEL_DTYPE)
    class_ids = (raw & 0xFFFF).astype(np.uint16)
    if frame_id is None:
        frame_id = _frame_id_from_path(path)
    return SemanticLabels(frame_id=frame_id, class_ids=class_ids)


def _parse_matrix_line(values: list[str], where: str) -> np.ndarray:
    if len(values) != 12:
        raise DataFormatError(f"{where}: expected 12 floats, got {len(values)}")
    try:
        flat = np.array([float(v) for v in values], dtype=np.float64)
    except ValueError as exc:
        raise DataFormatError(f"{where}: {exc}") from exc
    mat = np.eye(4)
    mat[:3, :] = flat.reshape(3, 4)
    return mat


def read_calibration(calib_path: str | Path) -> np.ndarray:
    """Return the 4x4 LiDAR-to-camera transform from a calib.txt ``Tr:`` line."""
    calib_path = Path(calib_path)
    for raw in calib_path.read_text().splitlines():
        if raw.startswith("Tr:") or raw.startswith("Tr "):
            values = raw.split(":", 1)[-1].split()
            return _parse_matrix_line(values, f"{calib_path} (Tr)")
    raise DataFormatError(f"{calib_path}: no 'Tr:' entry found")


def read_poses(poses_path: str | Path, calib_path: str | Path) -> list[FramePose]:
    """Read camera-frame trajectory poses and convert them to the LiDAR frame.

    The camera-frame pose T_cam is mapped through the calibration transform:
    T_lidar = Tr^-1 @ T_cam @ Tr. Every returned rotation is checked to be
    orthonormal with determinant +1 (within 1e-6).
    """
    poses_path = Path(poses_path)
    tr = read_calibration(calib_path)
    tr_inv = np.linalg.inv(tr)
    poses = []
    for lineno, raw in enumerate(poses_path.read_text().splitlines(), start=1):
        if not raw.strip():
            continue
        t_cam = _parse_matrix_line(raw.split(), f"{poses_path}:{lineno}")
        t_lidar = tr_inv @ t_cam @ tr
        rotation = t_lidar[:3, :3]
        if (np.abs(rotation @ rotation.T - np.eye(3)).max() > 1e-6
                or abs(np.linalg.det(rotation) - 1.0) > 1e-6):
            raise DataFormatError(
                f"{poses_path}:{lineno}: rotation is not orthonormal with det +1"
            )
        poses.append(FramePose(
            frame_id=len(poses),
            rotation=rotation,
            translation=t_lidar[:3, 3].copy(),
        ))
    return poses
