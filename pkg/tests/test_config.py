import dataclasses

import pytest

from oscontext.config import (OscConfig, from_dict, load_config, save_config,
                              to_dict, validate)
from oscontext.errors import ConfigError


def test_defaults_are_valid():
    cfg = OscConfig()
    assert validate(cfg) is cfg


def test_validate_is_idempotent():
    cfg = validate(OscConfig(num_rings=32, num_sectors=90))
    assert validate(cfg) == cfg


def test_too_few_sectors_rejected():
    with pytest.raises(ConfigError, match="num_sectors"):
        validate(OscConfig(num_sectors=1))


def test_radius_ordering_rejected():
    with pytest.raises(ConfigError, match="max_radius"):
        validate(OscConfig(max_radius=0.5, min_object_range=1.0))


@pytest.mark.parametrize("field,value", [
    ("num_rings", 0),
    ("min_object_range", 0.0),
    ("cluster_tolerance", -1.0),
    ("cluster_min_points", 0),
    ("knn_candidates", 0),
    ("shift_window_halfwidth", -1),
    ("similarity_threshold", 1.5),
    ("similarity_threshold", -0.1),
    ("pose_cluster_tolerance", 0.0),
    ("pose_angle_scale", 0.0),
    ("pose_min_cluster_fraction", 0.0),
    ("pose_min_cluster_fraction", 1.2),
    ("positive_distance", 0.0),
    ("min_frame_gap", -3),
])
def test_field_invariants(field, value):
    with pytest.raises(ConfigError, match=field):
        validate(dataclasses.replace(OscConfig(), **{field: value}))


def test_window_must_fit_in_sectors():
    with pytest.raises(ConfigError, match="window"):
        validate(OscConfig(num_sectors=5, shift_window_halfwidth=3))


def test_file_round_trip(tmp_path):
    cfg = OscConfig(num_rings=32, num_sectors=90, main_object_classes=frozenset({80, 81}),
                    similarity_threshold=0.6)
    path = tmp_path / "osc.cfg"
    save_config(path, cfg)
    assert load_config(path) == cfg


def test_load_parses_comments_and_blanks(tmp_path):
    path = tmp_path / "osc.cfg"
    path.write_text("# a comment\n\nnum_rings = 8\nmain_object_classes = 80, 44\n")
    cfg = load_config(path)
    assert cfg.num_rings == 8
    assert cfg.main_object_classes == frozenset({80, 44})


def test_load_rejects_unknown_key(tmp_path):
    path = tmp_path / "osc.cfg"
    path.write_text("not_a_field = 3\n")
    with pytest.raises(ConfigError, match="not_a_field"):
        load_config(path)


def test_load_rejects_bad_value(tmp_path):
    path = tmp_path / "osc.cfg"
    path.write_text("num_rings = many\n")
    with pytest.raises(ConfigError, match="num_rings"):
        load_config(path)


def test_load_rejects_invalid_combination(tmp_path):
    path = tmp_path / "osc.cfg"
    path.write_text("num_sectors = 1\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_dict_round_trip():
    cfg = OscConfig(num_sectors=90, main_object_classes=frozenset({80, 99}))
    assert from_dict(to_dict(cfg)) == cfg
