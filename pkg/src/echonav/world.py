"""World model and closed-loop kinematics: wall segments, circular and
moving obstacles, the differential-steering robot, collision and stuck
detection.

Dynamic obstacles are parameterized by absolute simulation time, so a
world snapshot at time t is a pure function of the model; nothing mutates
during sensing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .controller import VelocityCommand

V_MAX = 0.3  # platform speed limit, m/s
ROBOT_RADIUS = 0.10  # 20 cm diameter circular platform


@dataclass(frozen=True)
class Segment:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.x1, self.y1, self.x2, self.y2))):
            raise ValueError("segment endpoints must be finite")

    @property
    def a(self) -> tuple[float, float]:
        return (self.x1, self.y1)

    @property
    def b(self) -> tuple[float, float]:
        return (self.x2, self.y2)

    def length(self) -> float:
        return math.hypot(self.x2 - self.x1, self.y2 - self.y1)


@dataclass(frozen=True)
class CircleObstacle:
    x: float
    y: float
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("circle radius must be positive")


@dataclass(frozen=True)
class DynamicObstacle:
    """Circle moving along a closed piecewise-linear loop at constant speed."""

    radius: float
    waypoints: tuple[tuple[float, float], ...]
    speed: float

    def __post_init__(self):
        if self.radius <= 0 or self.speed < 0 or len(self.waypoints) < 2:
            raise ValueError("dynamic obstacle needs radius > 0, speed >= 0, >= 2 waypoints")

    def _legs(self):
        pts = list(self.waypoints) + [self.waypoints[0]]
        return [(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]

    def position_at(self, t: float) -> tuple[float, float]:
        legs = self._legs()
        total = sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in legs)
        if total == 0 or self.speed == 0:
            return self.waypoints[0]
        s = (self.speed * t) % total
        for a, b in legs:
            leg = math.hypot(b[0] - a[0], b[1] - a[1])
            if s <= leg:
                f = s / leg if leg > 0 else 0.0
                return (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))
            s -= leg
        return self.waypoints[0]

    def circle_at(self, t: float) -> CircleObstacle:
        x, y = self.position_at(t)
        return CircleObstacle(x, y, self.radius)


@dataclass(frozen=True)
class Scene:
    """Immutable geometry snapshot handed to the sonar renderers."""

    segments: tuple[Segment, ...]
    circles: tuple[CircleObstacle, ...]


@dataclass(frozen=True)
class EnvironmentModel:
    segments: tuple[Segment, ...] = ()
    circles: tuple[CircleObstacle, ...] = ()
    dynamic: tuple[DynamicObstacle, ...] = ()
    clock: float = 0.0

    def snapshot(self, t: Optional[float] = None) -> Scene:
        t = self.clock if t is None else t
        return Scene(
            segments=self.segments,
            circles=self.circles + tuple(d.circle_at(t) for d in self.dynamic),
        )


@dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    yaw: float
    radius: float = ROBOT_RADIUS

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("robot radius must be positive")


def point_segment_distance(px: float, py: float, seg: Segment) -> float:
    dx, dy = seg.x2 - seg.x1, seg.y2 - seg.y1
    len2 = dx * dx + dy * dy
    if len2 == 0:
        return math.hypot(px - seg.x1, py - seg.y1)
    t = ((px - seg.x1) * dx + (py - seg.y1) * dy) / len2
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (seg.x1 + t * dx), py - (seg.y1 + t * dy))


def step_world(
    world: EnvironmentModel, robot: RobotState, cmd: VelocityCommand, dt: float = 0.1
) -> tuple[EnvironmentModel, RobotState]:
    """One fixed step of the unicycle model, rotate-then-translate.

    yaw' = yaw + omega*dt; position advances along the *new* heading.  The
    linear speed is clamped to the platform limit; moving obstacles are
    advanced by bumping the world clock.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    v = min(V_MAX, max(-V_MAX, cmd.V))
    yaw = robot.yaw + cmd.omega * dt
    x = robot.x + v * math.cos(yaw) * dt
    y = robot.y + v * math.sin(yaw) * dt
    yaw_n = -((-yaw + math.pi) % (2 * math.pi) - math.pi)
    return replace(world, clock=world.clock + dt), replace(robot, x=x, y=y, yaw=yaw_n)


@dataclass(frozen=True)
class CollisionEvent:
    t: float
    entity: str
    clearance: float


def min_clearance(world: EnvironmentModel, robot: RobotState, t: Optional[float] = None):
    """Smallest (distance - radius) over all entities, with the entity name."""
    scene = world.snapshot(t)
    best = math.inf
    entity = "none"
    for idx, seg in enumerate(scene.segments):
        d = point_segment_distance(robot.x, robot.y, seg) - robot.radius
        if d < best:
            best, entity = d, f"segment[{idx}]"
    for idx, c in enumerate(scene.circles):
        d = math.hypot(robot.x - c.x, robot.y - c.y) - c.radius - robot.radius
        if d < best:
            best, entity = d, f"circle[{idx}]"
    return best, entity


def detect_collision(
    world: EnvironmentModel, robot: RobotState, t: Optional[float] = None
) -> Optional[CollisionEvent]:
    """Collision iff some entity is strictly closer than the robot radius."""
    clearance, entity = min_clearance(world, robot, t)
    when = world.clock if t is None else t
    if clearance < 0.0:
        return CollisionEvent(t=when, entity=entity, clearance=clearance)
    return None


STUCK_WINDOW_S = 10.0
STUCK_DISPLACEMENT_M = 0.05


def detect_stuck(trajectory: Sequence[tuple[float, float, float]],
                 window_s: float = STUCK_WINDOW_S,
                 min_displacement: float = STUCK_DISPLACEMENT_M) -> bool:
    """True when some full sliding window moved less than the threshold.

    ``trajectory`` is a time-ordered list of (t, x, y) samples.
    """
    n = len(trajectory)
    j = 0
    for i in range(n):
        t_i = trajectory[i][0]
        while trajectory[j][0] < t_i - window_s:
            j += 1
        if t_i - trajectory[j][0] >= window_s - 1e-9 and j < i:
            dx = trajectory[i][1] - trajectory[j][1]
            dy = trajectory[i][2] - trajectory[j][2]
            if math.hypot(dx, dy) < min_displacement:
                return True
    return False
