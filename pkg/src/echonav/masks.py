"""Ternary control masks: operator-defined zones around the platform mapped
onto each sensor's polar grid, plus flow-line voxel sets for the alignment
layer.

A mask voxel is 0 outside the zone, +1 when the voxel center lies on the
platform's left (y > 0, with y = 0 counted as left for determinism) and -1
on the right.  Membership is decided by voxel-center sampling; zones are
static per run, so masks are generated once and cached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .flow import SensorPose
from .grid import EnergyGrid, sensor_frame_xy


class RegionError(ValueError):
    """Raised for degenerate or malformed control regions."""


@dataclass(frozen=True)
class HalfCircle:
    """Front-facing half disc of the given radius, centered on the platform."""

    radius: float

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise RegionError("half_circle radius must be positive")

    def contains(self, x, y):
        return (x >= 0) & (x * x + y * y <= self.radius * self.radius)


@dataclass(frozen=True)
class Circle:
    radius: float

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise RegionError("circle radius must be positive")

    def contains(self, x, y):
        return x * x + y * y <= self.radius * self.radius


@dataclass(frozen=True)
class Rectangle:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        vals = (self.x_min, self.x_max, self.y_min, self.y_max)
        if not all(math.isfinite(v) for v in vals):
            raise RegionError("rectangle bounds must be finite")
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise RegionError("rectangle must have positive area")

    def contains(self, x, y):
        return (x >= self.x_min) & (x <= self.x_max) & (y >= self.y_min) & (y <= self.y_max)


@dataclass(frozen=True)
class Corridor:
    """Band between two lines parallel to the platform x-axis at y = +/-half_width."""

    half_width: float

    def __post_init__(self):
        if not (self.half_width > 0 and math.isfinite(self.half_width)):
            raise RegionError("corridor half_width must be positive")

    def contains(self, x, y):
        return np.abs(y) <= self.half_width


@dataclass(frozen=True)
class Trapezoid:
    """Arbitrary simple quadrilateral given as 4 (x, y) vertices."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.vertices) != 4:
            raise RegionError("trapezoid needs exactly 4 vertices")
        if not all(math.isfinite(vx) and math.isfinite(vy) for vx, vy in self.vertices):
            raise RegionError("trapezoid vertices must be finite")
        area = 0.0
        for (x0, y0), (x1, y1) in zip(self.vertices, self.vertices[1:] + self.vertices[:1]):
            area += x0 * y1 - x1 * y0
        if abs(area) < 1e-12:
            raise RegionError("trapezoid must have positive area")

    def contains(self, x, y):
        # even-odd rule, half-open edges; vectorized over x/y arrays
        x = np.asarray(x)
        y = np.asarray(y)
        inside = np.zeros(x.shape, dtype=bool)
        verts = self.vertices
        for (x0, y0), (x1, y1) in zip(verts, verts[1:] + verts[:1]):
            crosses = (y0 <= y) != (y1 <= y)
            with np.errstate(divide="ignore", invalid="ignore"):
                x_cross = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            inside ^= crosses & (x < x_cross)
        return inside


@dataclass(frozen=True)
class Sector:
    """Wedge of the given angular span (radians, centered on +x) and radius."""

    span: float
    radius: float

    def __post_init__(self):
        if not (0 < self.span <= 2 * math.pi and self.radius > 0):
            raise RegionError("sector needs span in (0, 2*pi] and positive radius")

    def contains(self, x, y):
        half = self.span / 2.0
        return (x * x + y * y <= self.radius * self.radius) & (np.abs(np.arctan2(y, x)) <= half)


RegionShape = Union[HalfCircle, Circle, Rectangle, Corridor, Trapezoid, Sector]
ControlRegion = Union[RegionShape, Sequence[RegionShape]]


@dataclass
class TernaryMask:
    """Per-sensor, per-layer gate over the polar grid with entries in {-1, 0, +1}."""

    values: np.ndarray
    layer_id: str = ""
    sensor_index: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int8)
        if not np.isin(self.values, (-1, 0, 1)).all():
            raise ValueError("mask entries must be -1, 0 or +1")


@dataclass(frozen=True)
class FlowLineMask:
    """Voxels covered by the platform-frame line y = d in one sensor's grid."""

    voxels: tuple[tuple[int, int], ...]  # (range_bin, angle_bin)
    lateral_distance: float
    sensor_index: int = 0

    @property
    def length(self) -> int:
        return len(self.voxels)


def _region_shapes(region: ControlRegion) -> list[RegionShape]:
    if hasattr(region, "contains"):
        return [region]
    shapes = list(region)
    if not shapes:
        raise RegionError("region union must contain at least one shape")
    return shapes


def region_to_mask(region: ControlRegion, pose: SensorPose, grid: EnergyGrid,
                   layer_id: str = "", sensor_index: int = 0) -> TernaryMask:
    """Rasterize a platform-frame zone into one sensor's ternary mask."""
    x, y = sensor_frame_xy(grid, pose.l, pose.alpha, pose.delta)
    member = np.zeros(grid.shape(), dtype=bool)
    for shape in _region_shapes(region):
        member |= shape.contains(x, y)
    values = np.zeros(grid.shape(), dtype=np.int8)
    values[member & (y >= 0)] = 1
    values[member & (y < 0)] = -1
    return TernaryMask(values=values, layer_id=layer_id, sensor_index=sensor_index)


def flowline_mask(d: float, pose: SensorPose, grid: EnergyGrid,
                  sensor_index: int = 0) -> FlowLineMask:
    """Voxel set of the platform-frame line y = d, one voxel per beam.

    The line's range at bearing theta solves
    l sin(alpha) + r sin(delta - theta) = d, so r = d_rel / sin(delta - theta)
    with d_rel = d - l sin(alpha); beams where r falls outside (0, r_max]
    contribute nothing.  d_rel = 0 (line through the sensor center) is
    degenerate and yields an empty mask.
    """
    if abs(d) > grid.r_max + pose.l:
        raise RegionError(f"lateral distance {d} outside the observable band")
    d_rel = d - pose.l * math.sin(pose.alpha)
    voxels: list[tuple[int, int]] = []
    if d_rel != 0.0:
        s = np.sin(pose.delta - grid.angles_rad)
        with np.errstate(divide="ignore"):
            r = np.where(s != 0.0, d_rel / s, np.inf)
        for k in range(grid.n_angle):
            i = grid.range_bin_index(float(r[k]))
            if i >= 0:
                voxels.append((i, k))
    return FlowLineMask(voxels=tuple(voxels), lateral_distance=d, sensor_index=sensor_index)


def split_lr(mask: TernaryMask) -> tuple[np.ndarray, np.ndarray]:
    """Split a ternary mask into binary (left, right) masks."""
    left = (mask.values > 0).astype(np.int8)
    right = (mask.values < 0).astype(np.int8)
    return left, right


def mask_to_pgm_bytes(mask: TernaryMask) -> bytes:
    """Encode a ternary mask as a binary PGM (0/128/255 for -1/0/+1)."""
    lut = {-1: 0, 0: 128, 1: 255}
    img = np.vectorize(lut.get, otypes=[np.uint8])(mask.values)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode()
    return header + img.tobytes()
