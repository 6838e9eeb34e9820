"""Closed-form planar (x, y, yaw) pose recovery from one matched object pair.

Convention used throughout the package: ``relative_pose(obs_q, obs_c, gamma)``
returns the transform that maps points expressed in the candidate sensor frame
into the query sensor frame,

    p_q = R(dtheta) @ p_c + (dx, dy).

``gamma`` is the column-shift angle produced by matching, where the candidate
descriptor was rotated left by ``n`` columns to line up with the query. With
that pairing the equations below recover the exact rigid transform; negating
``gamma`` (or swapping the observation arguments) yields the inverse instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class RelativePose:
    dx: float
    dy: float
    dtheta: float  # radians in (-pi, pi]


def wrap_angle(angle: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    return math.pi - (math.pi - angle) % TWO_PI


def shift_to_angle(n: int, num_sectors: int) -> float:
    """Angle spanned by a left shift of ``n`` columns out of ``num_sectors``."""
    if not 0 <= n < num_sectors:
        raise ValueError(f"shift {n} outside [0, {num_sectors})")
    return TWO_PI * n / num_sectors


def relative_pose(
    obs_q: tuple[float, float],
    obs_c: tuple[float, float],
    gamma: float,
) -> RelativePose:
    """Recover the query<-candidate transform from one shared object.

    ``obs_q`` and ``obs_c`` are the object's planar position as seen from the
    query and candidate sensor respectively; ``gamma`` is the matched column
    shift expressed as an angle (any value, wrapped internally).
    """
    x1, y1 = obs_q
    x2, y2 = obs_c
    if math.hypot(x1, y1) < 1e-12 or math.hypot(x2, y2) < 1e-12:
        raise ValueError("observation position coincides with the sensor origin")
    dtheta = wrap_angle(math.atan2(y1, x1) - wrap_angle(gamma) - math.atan2(y2, x2))
    cos_t, sin_t = math.cos(dtheta), math.sin(dtheta)
    dx = x1 - x2 * cos_t + y2 * sin_t
    dy = y1 - x2 * sin_t - y2 * cos_t
    return RelativePose(dx, dy, dtheta)


def transform_point(pose: RelativePose, point: tuple[float, float]) -> tuple[float, float]:
    """Apply the pose to a point in the candidate frame."""
    x, y = point
    cos_t, sin_t = math.cos(pose.dtheta), math.sin(pose.dtheta)
    return (pose.dx + x * cos_t - y * sin_t, pose.dy + x * sin_t + y * cos_t)


def invert_pose(pose: RelativePose) -> RelativePose:
    """Inverse transform (candidate<-query)."""
    cos_t, sin_t = math.cos(pose.dtheta), math.sin(pose.dtheta)
    return RelativePose(
        -(pose.dx * cos_t + pose.dy * sin_t),
        pose.dx * sin_t - pose.dy * cos_t,
        wrap_angle(-pose.dtheta),
    )
