import math
import struct

import numpy as np
import pytest

from oscontext.dataset import (FramePose, PointCloud, read_calibration,
                               read_labels, read_point_cloud, read_poses,
                               write_point_cloud)
from oscontext.errors import DataFormatError

from conftest import write_label_file


def write_bin(path, rows):
    np.array(rows, dtype="<f4").tofile(path)


def test_read_point_cloud_decodes_quadruples(tmp_path):
    path = tmp_path / "000007.bin"
    write_bin(path, [[1, 2, 3, 0.5], [4, 5, 6, 0.1]])
    cloud = read_point_cloud(path)
    assert cloud.frame_id == 7
    assert cloud.points.shape == (2, 4)
    np.testing.assert_array_equal(cloud.points,
                                  np.array([[1, 2, 3, 0.5], [4, 5, 6, 0.1]], dtype=np.float32))


def test_read_point_cloud_empty_file(tmp_path):
    path = tmp_path / "000000.bin"
    path.write_bytes(b"")
    cloud = read_point_cloud(path)
    assert len(cloud) == 0


def test_read_point_cloud_rejects_partial_record(tmp_path):
    path = tmp_path / "000000.bin"
    path.write_bytes(b"\x00" * 17)
    with pytest.raises(DataFormatError, match="17"):
        read_point_cloud(path)


def test_read_point_cloud_rejects_non_finite(tmp_path):
    path = tmp_path / "000000.bin"
    write_bin(path, [[1, 2, 3, 0], [np.nan, 0, 0, 0]])
    with pytest.raises(DataFormatError, match="point 1"):
        read_point_cloud(path)


def test_point_cloud_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    pts = rng.standard_normal((257, 4)).astype(np.float32) * 100
    path = tmp_path / "000004.bin"
    write_point_cloud(path, PointCloud(4, pts))
    back = read_point_cloud(path)
    assert back.points.tobytes() == pts.tobytes()


def test_read_labels_keeps_low_16_bits(tmp_path):
    path = tmp_path / "000000.label"
    path.write_bytes(struct.pack("<II", 0x00000050, 0x00010050))
    labels = read_labels(path, 2)
    assert labels.class_ids.tolist() == [80, 80]
    assert labels.class_ids.dtype == np.uint16


def test_read_labels_count_mismatch(tmp_path):
    path = tmp_path / "000000.label"
    write_label_file(path, [80, 80, 80])
    with pytest.raises(DataFormatError, match="2"):
        read_labels(path, 2)


def _write_sequence_files(tmp_path, pose_lines, tr_line="Tr: 1 0 0 0 0 1 0 0 0 0 1 0"):
    poses = tmp_path / "poses.txt"
    calib = tmp_path / "calib.txt"
    poses.write_text("\n".join(pose_lines) + "\n")
    calib.write_text("P0: 1 0 0 0 0 1 0 0 0 0 1 0\n" + tr_line + "\n")
    return poses, calib


def test_read_poses_identity(tmp_path):
    poses, calib = _write_sequence_files(tmp_path, ["1 0 0 0 0 1 0 0 0 0 1 0"])
    out = read_poses(poses, calib)
    assert len(out) == 1
    np.testing.assert_allclose(out[0].rotation, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(out[0].translation, 0, atol=1e-12)


def test_read_poses_translation_with_identity_tr(tmp_path):
    poses, calib = _write_sequence_files(tmp_path, ["1 0 0 5 0 1 0 -2 0 0 1 1.5"])
    out = read_poses(poses, calib)
    np.testing.assert_allclose(out[0].translation, [5, -2, 1.5], atol=1e-12)


def test_read_poses_rejects_short_line(tmp_path):
    poses, calib = _write_sequence_files(
        tmp_path, ["1 0 0 0 0 1 0 0 0 0 1 0", "1 0 0 0 0 1 0 0 0 0 1"])
    with pytest.raises(DataFormatError, match=":2"):
        read_poses(poses, calib)


def test_read_poses_requires_tr(tmp_path):
    poses = tmp_path / "poses.txt"
    poses.write_text("1 0 0 0 0 1 0 0 0 0 1 0\n")
    calib = tmp_path / "calib.txt"
    calib.write_text("P0: 1 0 0 0 0 1 0 0 0 0 1 0\n")
    with pytest.raises(DataFormatError, match="Tr"):
        read_poses(poses, calib)


def _rot_z(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rigid(rotation, translation):
    mat = np.eye(4)
    mat[:3, :3] = rotation
    mat[:3, 3] = translation
    return mat


def test_read_poses_applies_calibration(tmp_path):
    # Build T_cam = Tr @ T_lidar @ Tr^-1 by hand and check the reader inverts it.
    tr = _rigid(_rot_z(0.5), [0.1, -0.3, 0.8])
    t_lidar = _rigid(_rot_z(-1.2), [4.0, 2.0, -0.5])
    t_cam = tr @ t_lidar @ np.linalg.inv(tr)
    line = " ".join(repr(v) for v in t_cam[:3, :].reshape(-1))
    tr_line = "Tr: " + " ".join(repr(v) for v in tr[:3, :].reshape(-1))
    poses, calib = _write_sequence_files(tmp_path, [line], tr_line)
    out = read_poses(poses, calib)
    np.testing.assert_allclose(out[0].rotation, t_lidar[:3, :3], atol=1e-9)
    np.testing.assert_allclose(out[0].translation, t_lidar[:3, 3], atol=1e-9)


def test_read_poses_rotations_stay_orthonormal(tmp_path):
    rng = np.random.default_rng(7)
    lines = []
    for _ in range(25):
        yaw, pitch = rng.uniform(-math.pi, math.pi, 2)
        rot = _rot_z(yaw) @ np.array([
            [math.cos(pitch), 0, math.sin(pitch)],
            [0, 1, 0],
            [-math.sin(pitch), 0, math.cos(pitch)],
        ])
        mat = _rigid(rot, rng.uniform(-50, 50, 3))
        lines.append(" ".join(repr(v) for v in mat[:3, :].reshape(-1)))
    poses, calib = _write_sequence_files(tmp_path, lines)
    for pose in read_poses(poses, calib):
        np.testing.assert_allclose(pose.rotation @ pose.rotation.T, np.eye(3), atol=1e-6)
        assert abs(np.linalg.det(pose.rotation) - 1.0) < 1e-6


def test_read_poses_rejects_non_orthonormal(tmp_path):
    poses, calib = _write_sequence_files(tmp_path, ["2 0 0 0 0 1 0 0 0 0 1 0"])
    with pytest.raises(DataFormatError, match="orthonormal"):
        read_poses(poses, calib)


def test_read_calibration_parses_tr(tmp_path):
    _, calib = _write_sequence_files(tmp_path, ["1 0 0 0 0 1 0 0 0 0 1 0"],
                                     "Tr: 1 0 0 9 0 1 0 8 0 0 1 7")
    tr = read_calibration(calib)
    np.testing.assert_allclose(tr[:3, 3], [9, 8, 7])
