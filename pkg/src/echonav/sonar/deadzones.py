"""FOV dead zones: energyscape sectors blinded by vehicle structure or by
the other sonar bodies, zeroed beyond the occluder's distance."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..flow import SensorPose
from ..grid import Energyscape
from ..world import Segment, point_segment_distance

SENSOR_BODY_WIDTH = 0.12  # m, across the boresight
SENSOR_BODY_DEPTH = 0.05  # m, along the boresight


@dataclass(frozen=True)
class DeadZone:
    """Occluding rectangle in the platform frame (center pose + size)."""

    x: float
    y: float
    yaw: float
    width: float
    depth: float

    def __post_init__(self):
        if self.width <= 0 or self.depth <= 0:
            raise ValueError("dead-zone rectangle needs positive width and depth")

    def corners(self) -> list[tuple[float, float]]:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        out = []
        for ex, ey in ((1, 1), (1, -1), (-1, -1), (-1, 1)):
            lx, ly = ex * self.depth / 2, ey * self.width / 2
            out.append((self.x + c * lx - s * ly, self.y + s * lx + c * ly))
        return out


def sensor_body_deadzones(poses: Sequence[SensorPose],
                          width: float = SENSOR_BODY_WIDTH,
                          depth: float = SENSOR_BODY_DEPTH) -> list[list[DeadZone]]:
    """For each sensor, the body rectangles of all *other* sensors."""
    bodies = [
        DeadZone(x=p.position()[0], y=p.position()[1], yaw=p.delta, width=width, depth=depth)
        for p in poses
    ]
    return [[b for k, b in enumerate(bodies) if k != j] for j in range(len(poses))]


def _wrap(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi


def shadow_interval(zone: DeadZone, pose: SensorPose):
    """(theta_lo, theta_hi, distance) subtended by the rectangle at the
    sensor, bearings in sensor-frame radians; None when degenerate."""
    px, py = pose.position()
    corners = zone.corners()
    center_bearing = _wrap(pose.delta - math.atan2(zone.y - py, zone.x - px))
    rel = []
    for cx, cy in corners:
        theta = _wrap(pose.delta - math.atan2(cy - py, cx - px))
        rel.append(_wrap(theta - center_bearing))
    lo, hi = min(rel), max(rel)
    if hi - lo >= math.pi:  # sensor inside or surrounded: blind everywhere
        return (-math.pi, math.pi, 0.0)
    edges = [Segment(*corners[i], *corners[(i + 1) % 4]) for i in range(4)]
    dist = min(point_segment_distance(px, py, e) for e in edges)
    if _point_in_rect(px, py, zone):
        return (-math.pi, math.pi, 0.0)
    return (center_bearing + lo, center_bearing + hi, dist)


def _point_in_rect(px: float, py: float, zone: DeadZone) -> bool:
    c, s = math.cos(zone.yaw), math.sin(zone.yaw)
    dx, dy = px - zone.x, py - zone.y
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    return abs(lx) <= zone.depth / 2 and abs(ly) <= zone.width / 2


def deadzone_keep_mask(zones: Sequence[DeadZone], pose: SensorPose, grid) -> np.ndarray:
    """Boolean [n_range, n_angle] mask: False where the FOV is obscured."""
    keep = np.ones(grid.shape(), dtype=bool)
    thetas = grid.angles_rad
    ranges = grid.range_centers
    for zone in zones:
        lo, hi, dist = shadow_interval(zone, pose)
        in_span = np.array([lo - 1e-12 <= _wrap_to(th, lo, hi) <= hi + 1e-12 for th in thetas])
        beyond = ranges > dist
        keep[np.ix_(beyond, in_span)] = False
    return keep


def _wrap_to(theta: float, lo: float, hi: float) -> float:
    """Shift theta by 2*pi so it lands nearest the [lo, hi] interval."""
    mid = (lo + hi) / 2
    return theta + round((mid - theta) / (2 * math.pi)) * 2 * math.pi


def apply_dead_zones(scape: Energyscape, zones: Sequence[DeadZone],
                     pose: SensorPose) -> Energyscape:
    """Zero every voxel shadowed by an occluder, beyond its distance."""
    if not zones:
        return scape
    keep = deadzone_keep_mask(zones, pose, scape.grid)
    return Energyscape(scape.energy * keep, scape.grid, scape.sensor_index, scape.timestamp)
