"""Central parameter set shared by every pipeline stage.

All tunables live in one validated, immutable dataclass so that runs are
reproducible from a config snapshot alone.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError


@dataclass(frozen=True)
class OscConfig:
    num_rings: int = 20                   # radial bins of the descriptor grid
    num_sectors: int = 60                 # angular bins of the descriptor grid
    max_radius: float = 16.0              # descriptor coverage around an object [m]
    min_object_range: float = 1.0         # objects closer to the sensor are dropped [m]
    height_offset: float = 2.0            # added to every grid height so features stay >= 0 [m]
    main_object_classes: frozenset[int] = frozenset({80})  # semantic ids kept as objects
    cluster_tolerance: float = 0.5        # point-to-point chaining distance [m]
    cluster_min_points: int = 40          # smallest cluster kept as an object
    knn_candidates: int = 10              # nearest ring keys fetched per query descriptor
    shift_window_halfwidth: int = 3       # half width of the precise column-shift search
    similarity_threshold: float = 0.75    # per-pair similarity needed to keep a hypothesis
    pose_cluster_tolerance: float = 1.0   # chaining distance in scaled pose space [m]
    pose_angle_scale: float = 5.0         # metres per radian when embedding poses [m/rad]
    pose_min_cluster_fraction: float = 1.0 / 3.0  # fraction of hypotheses the winning cluster needs
    positive_distance: float = 10.0       # ground-truth distance separating positives from negatives [m]
    min_frame_gap: int = 50               # frames two keyframes must be apart to form a loop


def validate(config: OscConfig) -> OscConfig:
    """Check every invariant; return the config unchanged or raise ConfigError."""
    c = config
    if c.num_rings < 1:
        raise ConfigError(f"num_rings must be >= 1, got {c.num_rings}")
    if c.num_sectors < 2:
        raise ConfigError(f"num_sectors must be >= 2, got {c.num_sectors}")
    if not c.min_object_range > 0:
        raise ConfigError(f"min_object_range must be > 0, got {c.min_object_range}")
    if not c.max_radius > c.min_object_range:
        raise ConfigError(
            f"max_radius ({c.max_radius}) must exceed min_object_range ({c.min_object_range})"
        )
    if not c.cluster_tolerance > 0:
        raise ConfigError(f"cluster_tolerance must be > 0, got {c.cluster_tolerance}")
    if c.cluster_min_points < 1:
        raise ConfigError(f"cluster_min_points must be >= 1, got {c.cluster_min_points}")
    if c.knn_candidates < 1:
        raise ConfigError(f"knn_candidates must be >= 1, got {c.knn_candidates}")
    if c.shift_window_halfwidth < 0:
        raise ConfigError(
            f"shift_window_halfwidth must be >= 0, got {c.shift_window_halfwidth}"
        )
    if 2 * c.shift_window_halfwidth + 1 > c.num_sectors:
        raise ConfigError(
            f"search window 2*{c.shift_window_halfwidth}+1 exceeds num_sectors {c.num_sectors}"
        )
    if not 0.0 <= c.similarity_threshold <= 1.0:
        raise ConfigError(
            f"similarity_threshold must lie in [0, 1], got {c.similarity_threshold}"
        )
    if not c.pose_cluster_tolerance > 0:
        raise ConfigError(
            f"pose_cluster_tolerance must be > 0, got {c.pose_cluster_tolerance}"
        )
    if not c.pose_angle_scale > 0:
        raise ConfigError(f"pose_angle_scale must be > 0, got {c.pose_angle_scale}")
    if not 0.0 < c.pose_min_cluster_fraction <= 1.0:
        raise ConfigError(
            f"pose_min_cluster_fraction must lie in (0, 1], got {c.pose_min_cluster_fraction}"
        )
    if not c.positive_distance > 0:
        raise ConfigError(f"positive_distance must be > 0, got {c.positive_distance}")
    if c.min_frame_gap < 0:
        raise ConfigError(f"min_frame_gap must be >= 0, got {c.min_frame_gap}")
    return config


def to_dict(config: OscConfig) -> dict:
    """Plain-dict snapshot (class set becomes a sorted list) for manifests."""
    d = dataclasses.asdict(config)
    d["main_object_classes"] = sorted(config.main_object_classes)
    return d


_DEFAULTS = OscConfig()


def _parse_field(name: str, text: str):
    if not hasattr(_DEFAULTS, name):
        raise ConfigError(f"unknown config key: {name!r}")
    default = getattr(_DEFAULTS, name)
    text = text.strip()
    try:
        if isinstance(default, frozenset):
            return frozenset(int(part) for part in text.split(",") if part.strip())
        if isinstance(default, int):
            return int(text)
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse value for {name!r}: {text!r}") from exc


def from_dict(values: dict) -> OscConfig:
    """Build a validated config from a {field: value} mapping."""
    kwargs = {}
    field_names = {f.name for f in dataclasses.fields(OscConfig)}
    for key, value in values.items():
        if key not in field_names:
            raise ConfigError(f"unknown config key: {key!r}")
        if key == "main_object_classes":
            value = _parse_field(key, value) if isinstance(value, str) \
                else frozenset(int(v) for v in value)
        kwargs[key] = value
    return validate(OscConfig(**kwargs))


def load_config(path: str | Path) -> OscConfig:
    """Read a flat ``key = value`` file ('#' starts a comment) into a config.

    ``main_object_classes`` takes a comma-separated id list; every other
    field is a single number. Unknown keys are rejected.
    """
    overrides = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, text = line.split("=", 1)
        overrides[key.strip()] = _parse_field(key.strip(), text)
    return validate(OscConfig(**overrides))


def save_config(path: str | Path, config: OscConfig) -> None:
    """Write a config in the same flat format ``load_config`` reads."""
    lines = []
    for field in dataclasses.fields(OscConfig):
        value = getattr(config, field.name)
        if field.name == "main_object_classes":
            value = ",".join(str(c) for c in sorted(value))
        lines.append(f"{field.name} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")
