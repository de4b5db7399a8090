"""Sparse-waypoint guidance: the weak velocity prior fed into the
controller during batch runs (teleop bypasses this entirely)."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .controller import VelocityCommand
from .flow import wrap_angle

HEADING_GAIN = 1.5
OMEGA_LIMIT = 1.0  # rad/s


@dataclass(frozen=True)
class WaypointPlan:
    waypoints: tuple[tuple[float, float], ...]
    capture_radius: float = 0.3
    cruise_v: float = 0.3

    def __post_init__(self):
        if self.capture_radius <= 0:
            raise ValueError("capture radius must be positive")
        if not (0 < self.cruise_v <= 0.3):
            raise ValueError("cruise speed must lie in (0, 0.3] m/s")


@dataclass(frozen=True)
class GuidanceState:
    active_index: int = 0
    goal_reached: bool = False


def input_command(
    pose: tuple[float, float, float], plan: WaypointPlan, state: GuidanceState
) -> tuple[VelocityCommand, GuidanceState]:
    """Proportional-heading command toward the active waypoint.

    Captures advance the index (never backwards); capturing the final
    waypoint raises the sticky goal flag and commands a stop.
    """
    x, y, yaw = pose
    if state.goal_reached or not plan.waypoints:
        return VelocityCommand(0.0, 0.0), state

    idx = state.active_index
    while idx < len(plan.waypoints):
        wx, wy = plan.waypoints[idx]
        if math.hypot(wx - x, wy - y) > plan.capture_radius:
            break
        idx += 1
    if idx >= len(plan.waypoints):
        return VelocityCommand(0.0, 0.0), GuidanceState(len(plan.waypoints) - 1, True)

    wx, wy = plan.waypoints[idx]
    err = wrap_angle(math.atan2(wy - y, wx - x) - yaw)
    omega = min(OMEGA_LIMIT, max(-OMEGA_LIMIT, HEADING_GAIN * err))
    v = plan.cruise_v * max(0.0, math.cos(err))
    return VelocityCommand(v, omega), replace(state, active_index=idx)
