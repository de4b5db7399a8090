"""Geometric echo model: which surfaces of a scene reflect back to a sensor.

Specular plane returns come from wall segments whose perpendicular foot is
visible; shared segment endpoints return as corners, isolated ones as
(diffracting) edges; circular obstacles return from their nearest rim
point.  Everything behind another surface, outside the frontal FOV or past
the maximum range is dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..world import Scene, Segment

KIND_AMPLITUDE = {"plane": 1.0, "corner": 0.6, "edge": 0.3}

_EPS = 1e-9


@dataclass(frozen=True)
class ReflectionEvent:
    range: float        # m from sensor center
    bearing: float      # degrees in the sensor frame, positive right
    amplitude: float    # kind-dependent factor, before spreading loss
    kind: str           # plane | corner | edge

    def __post_init__(self):
        if self.kind not in KIND_AMPLITUDE:
            raise ValueError(f"unknown reflection kind {self.kind!r}")
        if self.range <= 0 or self.amplitude < 0:
            raise ValueError("reflection needs positive range, non-negative amplitude")


def _ray_segment_distance(sx, sy, dx, dy, seg: Segment):
    """Distance along the unit ray (sx,sy)+t*(dx,dy) to the segment, or None."""
    ex, ey = seg.x2 - seg.x1, seg.y2 - seg.y1
    denom = dx * ey - dy * ex
    if abs(denom) < 1e-15:
        return None
    qx, qy = seg.x1 - sx, seg.y1 - sy
    t = (qx * ey - qy * ex) / denom
    u = (qx * dy - qy * dx) / denom
    if t > _EPS and -1e-12 <= u <= 1 + 1e-12:
        return t
    return None


def _ray_circle_distance(sx, sy, dx, dy, cx, cy, radius):
    """Distance along the unit ray to the nearest circle intersection, or None."""
    fx, fy = sx - cx, sy - cy
    b = 2 * (fx * dx + fy * dy)
    c = fx * fx + fy * fy - radius * radius
    disc = b * b - 4 * c
    if disc < 0:
        return None
    sq = math.sqrt(disc)
    t1 = (-b - sq) / 2
    t2 = (-b + sq) / 2
    if t1 > _EPS:
        return t1
    if t2 > _EPS:
        return t2  # ray starts inside the circle
    return None


def _occluded(scene: Scene, sx, sy, px, py, dist) -> bool:
    """True when another surface cuts the sensor->point ray strictly closer."""
    dx, dy = (px - sx) / dist, (py - sy) / dist
    limit = dist - _EPS * max(1.0, dist)
    for seg in scene.segments:
        t = _ray_segment_distance(sx, sy, dx, dy, seg)
        if t is not None and t < limit:
            return True
    for circ in scene.circles:
        t = _ray_circle_distance(sx, sy, dx, dy, circ.x, circ.y, circ.radius)
        if t is not None and t < limit:
            return True
    return False


def _bearing_deg(heading: float, sx, sy, px, py) -> float:
    """Sensor-frame bearing of a world point, degrees, positive right."""
    gamma = math.atan2(py - sy, px - sx)
    theta = (heading - gamma + math.pi) % (2 * math.pi) - math.pi
    return math.degrees(theta)


def trace_reflections(
    scene: Scene, sensor_xy: tuple[float, float], heading: float, r_max: float = 5.0
) -> list[ReflectionEvent]:
    """All visible reflection events for one sensor pose in the scene."""
    sx, sy = sensor_xy
    events: list[ReflectionEvent] = []

    def keep(px, py, kind) -> None:
        dist = math.hypot(px - sx, py - sy)
        if dist <= _EPS or dist > r_max:
            return
        bearing = _bearing_deg(heading, sx, sy, px, py)
        if abs(bearing) > 90.0:
            return
        if _occluded(scene, sx, sy, px, py, dist):
            return
        events.append(ReflectionEvent(dist, bearing, KIND_AMPLITUDE[kind], kind))

    # specular wall returns at the perpendicular foot
    for seg in scene.segments:
        dx, dy = seg.x2 - seg.x1, seg.y2 - seg.y1
        len2 = dx * dx + dy * dy
        if len2 == 0:
            continue
        t = ((sx - seg.x1) * dx + (sy - seg.y1) * dy) / len2
        if 0.0 <= t <= 1.0:
            keep(seg.x1 + t * dx, seg.y1 + t * dy, "plane")

    # endpoints: shared vertices are corners, isolated ones edges
    counts: dict[tuple[float, float], int] = {}
    for seg in scene.segments:
        for px, py in (seg.a, seg.b):
            key = (round(px, 9), round(py, 9))
            counts[key] = counts.get(key, 0) + 1
    for (px, py), n in counts.items():
        keep(px, py, "corner" if n >= 2 else "edge")

    # circular obstacles reflect from the nearest rim point
    for circ in scene.circles:
        d = math.hypot(circ.x - sx, circ.y - sy)
        if d <= circ.radius + _EPS:
            continue  # sensor on or inside the obstacle
        f = (d - circ.radius) / d
        keep(sx + f * (circ.x - sx), sy + f * (circ.y - sy), "plane")

    return events
