"""Object-centric polar descriptors for LiDAR place recognition."""

from .config import OscConfig, load_config, save_config, validate
from .dataset import (FramePose, PointCloud, SemanticLabels, read_labels,
                      read_point_cloud, read_poses, write_point_cloud)
from .descriptor import (ObjectScanContext, build_osc, load_descriptors,
                         rotate_columns, save_descriptors)
from .errors import (ConfigError, DataFormatError, DatasetLayoutError,
                     EvaluationError, OscError)
from .evaluation import (LabeledPair, PrPoint, SyntheticScene, f1_max,
                         generate_synthetic_scene, pose_error, pr_curve,
                         sample_pairs, view_scene)
from .filtering import PlaceMatch, match_frames
from .matching import (DescriptorIndex, MatchResult, descriptor_distance,
                       estimate_shift, match_descriptors, match_pair)
from .objects import MainObject, euclidean_cluster, extract_main_objects, filter_semantic
from .pose import RelativePose, relative_pose, shift_to_angle, wrap_angle
from .recognizer import OscDescriptorExtractor, OscPlaceRecognizer, describe_frame

__version__ = "0.1.0"

__all__ = [
    "OscConfig", "load_config", "save_config", "validate",
    "PointCloud", "SemanticLabels", "FramePose",
    "read_point_cloud", "write_point_cloud", "read_labels", "read_poses",
    "MainObject", "filter_semantic", "euclidean_cluster", "extract_main_objects",
    "ObjectScanContext", "build_osc", "rotate_columns",
    "save_descriptors", "load_descriptors",
    "DescriptorIndex", "MatchResult", "estimate_shift", "descriptor_distance",
    "match_descriptors", "match_pair",
    "RelativePose", "wrap_angle", "shift_to_angle", "relative_pose",
    "PlaceMatch", "match_frames",
    "LabeledPair", "PrPoint", "sample_pairs", "pr_curve", "f1_max", "pose_error",
    "SyntheticScene", "generate_synthetic_scene", "view_scene",
    "OscDescriptorExtractor", "OscPlaceRecognizer", "describe_frame",
    "OscError", "ConfigError", "DataFormatError", "DatasetLayoutError",
    "EvaluationError",
]
