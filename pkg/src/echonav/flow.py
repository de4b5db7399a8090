"""Acoustic-flow math: how static reflections drift through a sonar's polar
image when the platform carrying the sonar moves.

Conventions used throughout the package:

* Platform frame: x forward, y left, z up; yaw rate ``omega`` > 0 turns
  counter-clockwise (left).
* A sensor is mounted at distance ``l`` from the platform's rotation
  center, at bearing ``alpha`` (CCW from the platform x-axis), and twisted
  by ``beta`` about its own center.  Its boresight points at
  ``delta = alpha + beta`` in the platform frame.
* Sensor polar coordinates: ``theta`` > 0 lies to the *right* of the
  boresight.  The sensor-frame Cartesian mapping is
  ``x = r*cos(theta), y = -r*sin(theta)`` (y points left).

With these axes the ego-motion velocity field of a static reflector is

    dr/dt     = -l*w*sin(beta - theta) - V*cos(theta - delta)
    dtheta/dt = (l*w*cos(beta - theta) + V*sin(theta - delta)) / r + w

For pure translation (w = 0) the quantity ``C = |r|*sin(theta - delta)``
is conserved: it is the signed perpendicular distance between the sensor
and the straight line the reflector traces in the sensor frame, and it
indexes the family of linear-motion flow-lines.  Pure rotation has no
closed form and is integrated numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(angle: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    a = -((-angle + math.pi) % TWO_PI - math.pi)
    # the fold above maps +pi to -pi; keep the +pi representative
    return math.pi if a == -math.pi else a


class FlowDomainError(ValueError):
    """Raised for inputs outside the flow model's domain (r <= 0, non-finite)."""


@dataclass(frozen=True)
class SensorPose:
    """Mounting of one sonar on the platform: (l, alpha, beta), radians/meters."""

    l: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.l) and math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise FlowDomainError("sensor pose parameters must be finite")
        if self.l < 0:
            raise FlowDomainError(f"mount distance l must be >= 0, got {self.l}")
        object.__setattr__(self, "alpha", wrap_angle(self.alpha))
        object.__setattr__(self, "beta", wrap_angle(self.beta))

    @property
    def delta(self) -> float:
        """Boresight angle in the platform frame, alpha + beta, in (-pi, pi]."""
        return wrap_angle(self.alpha + self.beta)

    @classmethod
    def from_degrees_cm(cls, l_cm: float, alpha_deg: float, beta_deg: float) -> "SensorPose":
        """Build from the cm/degree units used by scenario files."""
        return cls(l=l_cm / 100.0, alpha=math.radians(alpha_deg), beta=math.radians(beta_deg))

    def position(self) -> tuple[float, float]:
        """Sensor center in the platform frame."""
        return (self.l * math.cos(self.alpha), self.l * math.sin(self.alpha))


@dataclass(frozen=True)
class PolarPoint:
    """A point in a sensor's polar frame; r in meters, theta in radians."""

    r: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.r) and math.isfinite(self.theta)):
            raise FlowDomainError("polar coordinates must be finite")
        if self.r <= 0:
            raise FlowDomainError(f"range must be positive, got {self.r}")


@dataclass(frozen=True)
class PlatformMotion:
    """Commanded platform motion held constant over one measurement: (V, omega)."""

    V: float
    omega: float

    def __post_init__(self):
        if not (math.isfinite(self.V) and math.isfinite(self.omega)):
            raise FlowDomainError("platform motion must be finite")


@dataclass(frozen=True)
class FlowRate:
    """Time derivatives of a reflection's polar coordinates."""

    dr_dt: float
    dtheta_dt: float


@dataclass(frozen=True)
class CartesianPoint:
    x: float
    y: float
    z: float


def polar_to_cartesian(p: PolarPoint, phi: float) -> CartesianPoint:
    """Spherical (r, theta, phi) to right-handed sensor Cartesian.

    The planar controller fixes phi to +pi/2 (reflectors in the horizontal
    plane), giving y = -r*sin(theta): positive theta is the right side.
    """
    if not math.isfinite(phi):
        raise FlowDomainError("phi must be finite")
    return CartesianPoint(
        x=p.r * math.cos(p.theta),
        y=-p.r * math.sin(p.theta) * math.sin(phi),
        z=p.r * math.sin(p.theta) * math.cos(phi),
    )


def cartesian_to_polar(c: CartesianPoint, phi: float = math.pi / 2) -> PolarPoint:
    """Inverse of :func:`polar_to_cartesian` for in-plane points at the given phi."""
    r = math.hypot(c.x, c.y, c.z)
    if r <= 0:
        raise FlowDomainError("cannot convert the origin to polar coordinates")
    # in-plane: y = -r sin(theta) sin(phi), x = r cos(theta)
    theta = math.atan2(-c.y / math.sin(phi) if math.sin(phi) != 0 else c.z / math.cos(phi), c.x)
    return PolarPoint(r=r, theta=theta)


def velocity_field(p: PolarPoint, pose: SensorPose, motion: PlatformMotion) -> FlowRate:
    """Polar drift rate of a static reflector under platform motion (V, omega).

    The published planar field carries the mirrored sign convention on the
    V terms (theta+delta); under this package's axes the world-frame rigid
    motion gives theta-delta, which the finite-difference tests pin down.
    """
    if p.r <= 0:
        raise FlowDomainError("velocity field is singular at r <= 0")
    lw = pose.l * motion.omega
    dr = -lw * math.sin(pose.beta - p.theta) - motion.V * math.cos(p.theta - pose.delta)
    dth = (lw * math.cos(pose.beta - p.theta) + motion.V * math.sin(p.theta - pose.delta)) / p.r + motion.omega
    return FlowRate(dr_dt=dr, dtheta_dt=dth)


def linear_flow_constant(p: PolarPoint, pose: SensorPose) -> float:
    """Conserved constant of the pure-translation flow: C = |r|*sin(theta - delta).

    Geometrically the signed lateral offset (positive when the reflector's
    sensor-frame track passes on the +theta side) of the straight line a
    static reflector traces while the platform translates.  C = 0 is the
    degenerate radial flow-line through the sensor.
    """
    return abs(p.r) * math.sin(p.theta - pose.delta)


def rotational_flow_rate(p: PolarPoint, pose: SensorPose, omega: float) -> FlowRate:
    """Velocity field restricted to pure rotation (V = 0)."""
    return velocity_field(p, pose, PlatformMotion(V=0.0, omega=omega))


class FlowTermination(Enum):
    """Why flow-line integration stopped before exhausting its step budget."""

    COMPLETED = "completed"
    RANGE_EXIT = "range_exit"   # r left (0, r_max]
    FOV_EXIT = "fov_exit"       # theta left [-pi/2, +pi/2]


@dataclass(frozen=True)
class FlowLine:
    """An integrated flow-line polyline plus its termination reason."""

    points: tuple[PolarPoint, ...]
    termination: FlowTermination


def _field_arrays(r, theta, l, beta, delta, V, omega):
    """Vectorized velocity field; parameters broadcast against (r, theta)."""
    lw = l * omega
    dr = -lw * np.sin(beta - theta) - V * np.cos(theta - delta)
    dth = (lw * np.cos(beta - theta) + V * np.sin(theta - delta)) / r + omega
    return dr, dth


def _rk4_lines(r0, theta0, l, beta, delta, V, omega, dt, n_steps, r_max):
    n = r0.shape[0]
    r_hist = np.empty((n_steps + 1, n))
    th_hist = np.empty((n_steps + 1, n))
    r_hist[0] = r0
    th_hist[0] = theta0
    lengths = np.full(n, n_steps + 1, dtype=int)
    terminations = [FlowTermination.COMPLETED] * n
    alive = np.ones(n, dtype=bool)

    r, th = r0.copy(), theta0.copy()
    for k in range(1, n_steps + 1):
        if not alive.any():
            r_hist[k:] = r_hist[k - 1]
            th_hist[k:] = th_hist[k - 1]
            break
        k1r, k1t = _field_arrays(r, th, l, beta, delta, V, omega)
        k2r, k2t = _field_arrays(r + 0.5 * dt * k1r, th + 0.5 * dt * k1t, l, beta, delta, V, omega)
        k3r, k3t = _field_arrays(r + 0.5 * dt * k2r, th + 0.5 * dt * k2t, l, beta, delta, V, omega)
        k4r, k4t = _field_arrays(r + dt * k3r, th + dt * k3t, l, beta, delta, V, omega)
        r_new = r + dt / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r)
        th_new = th + dt / 6.0 * (k1t + 2 * k2t + 2 * k3t + k4t)

        range_out = (r_new <= 0) | (r_new > r_max)
        fov_out = (th_new < -math.pi / 2) | (th_new > math.pi / 2)
        dying = alive & (range_out | fov_out)
        for i in np.flatnonzero(dying):
            lengths[i] = k
            terminations[i] = FlowTermination.RANGE_EXIT if range_out[i] else FlowTermination.FOV_EXIT
        alive &= ~dying

        r = np.where(alive, r_new, r)
        th = np.where(alive, th_new, th)
        r_hist[k] = r
        th_hist[k] = th
    return r_hist, th_hist, lengths, terminations


def integrate_flow_lines(
    r0: np.ndarray,
    theta0: np.ndarray,
    pose: SensorPose,
    motion: PlatformMotion,
    dt: float,
    n_steps: int,
    r_max: float = 5.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[FlowTermination]]:
    """RK4-integrate a batch of flow-lines from (r0[i], theta0[i]).

    Returns (r_hist, theta_hist, lengths, terminations) where the history
    arrays have shape [n_steps+1, n_lines]; entries of line i past
    lengths[i] points are frozen at the last valid state.  A line stops
    early when r leaves (0, r_max] or theta leaves [-pi/2, +pi/2].
    """
    if dt <= 0:
        raise FlowDomainError("dt must be positive")
    r0 = np.atleast_1d(np.asarray(r0, dtype=float))
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    if np.any(r0 <= 0) or np.any(r0 > r_max):
        raise FlowDomainError("start ranges must lie in (0, r_max]")
    return _rk4_lines(r0, theta0, pose.l, pose.beta, pose.delta,
                      motion.V, motion.omega, dt, n_steps, r_max)


def integrate_flow_line_family(
    starts: Sequence[PolarPoint],
    poses: Sequence[SensorPose],
    motions: Sequence[PlatformMotion],
    dt: float,
    n_steps: int,
    r_max: float = 5.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[FlowTermination]]:
    """Like :func:`integrate_flow_lines` but with a distinct (pose, motion)
    per line, integrated simultaneously."""
    if not (len(starts) == len(poses) == len(motions)):
        raise FlowDomainError("starts, poses and motions must have equal length")
    if dt <= 0:
        raise FlowDomainError("dt must be positive")
    r0 = np.array([p.r for p in starts])
    th0 = np.array([p.theta for p in starts])
    if np.any(r0 <= 0) or np.any(r0 > r_max):
        raise FlowDomainError("start ranges must lie in (0, r_max]")
    l = np.array([p.l for p in poses])
    beta = np.array([p.beta for p in poses])
    delta = np.array([p.delta for p in poses])
    V = np.array([m.V for m in motions])
    omega = np.array([m.omega for m in motions])
    return _rk4_lines(r0, th0, l, beta, delta, V, omega, dt, n_steps, r_max)


def integrate_flow_line(
    start: PolarPoint,
    pose: SensorPose,
    motion: PlatformMotion,
    dt: float,
    n_steps: int,
    r_max: float = 5.0,
) -> FlowLine:
    """RK4-integrate one flow-line; truncates when leaving range or FOV."""
    r_hist, th_hist, lengths, terms = integrate_flow_lines(
        np.array([start.r]), np.array([start.theta]), pose, motion, dt, n_steps, r_max
    )
    npts = int(lengths[0])
    pts = tuple(PolarPoint(float(r_hist[k, 0]), float(th_hist[k, 0])) for k in range(npts))
    return FlowLine(points=pts, termination=terms[0])
