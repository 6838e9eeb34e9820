import math
from pathlib import Path

import numpy as np
import pytest

from oscontext.config import OscConfig
from oscontext.dataset import PointCloud, write_point_cloud
from oscontext.evaluation import generate_synthetic_scene, translate_scene, view_scene


@pytest.fixture
def config():
    return OscConfig()


def write_label_file(path: Path, class_ids, instance_ids=None):
    words = np.asarray(class_ids, dtype=np.uint32)
    if instance_ids is not None:
        words = words | (np.asarray(instance_ids, dtype=np.uint32) << 16)
    words.astype("<u4").tofile(path)


def make_toy_dataset(root: Path, seed: int = 11) -> Path:
    """Tiny KITTI-layout sequence: 4 frames, frame 3 revisits frame 0's place.

    Each frame views its own local world (three distinct places along x), so
    only the (0, 3) pair shares a scene. Poses use an identity calibration.
    """
    root.mkdir(parents=True, exist_ok=True)
    (root / "velodyne").mkdir(exist_ok=True)
    (root / "labels").mkdir(exist_ok=True)

    places = {0: (0.0, 0.0), 1: (30.0, 0.0), 2: (60.0, 0.0)}
    worlds = {
        pid: translate_scene(generate_synthetic_scene(seed + pid, num_objects=3), *xy)
        for pid, xy in places.items()
    }
    frames = [  # (frame_id, place, sensor planar pose)
        (0, 0, (0.0, 0.0, 0.0)),
        (1, 1, (30.0, 0.0, 0.2)),
        (2, 2, (60.0, 0.0, -0.1)),
        (3, 0, (0.5, 0.0, 0.3)),
    ]
    pose_lines = []
    for frame_id, place, pose in frames:
        cloud, labels = view_scene(worlds[place], pose, frame_id=frame_id)
        write_point_cloud(root / "velodyne" / f"{frame_id:06d}.bin", cloud)
        instances = np.arange(len(labels.class_ids), dtype=np.uint32) % 7
        write_label_file(root / "labels" / f"{frame_id:06d}.label",
                         labels.class_ids, instances)
        tx, ty, yaw = pose
        c, s = math.cos(yaw), math.sin(yaw)
        pose_lines.append(
            f"{c} {-s} 0 {tx} {s} {c} 0 {ty} 0 0 1 0"
        )
    (root / "poses.txt").write_text("\n".join(pose_lines) + "\n")
    (root / "calib.txt").write_text(
        "P0: 1 0 0 0 0 1 0 0 0 0 1 0\n"
        "Tr: 1 0 0 0 0 1 0 0 0 0 1 0\n"
    )
    return root


@pytest.fixture
def toy_dataset(tmp_path):
    return make_toy_dataset(tmp_path / "seq")
