"""Polar grid shared by energyscapes, masks and the controller.

The canonical grid covers the frontal hemisphere: 181 beams from -90 to
+90 degrees in 1-degree steps, and 500 range bins of 1 cm up to 5 m.
Range bin i spans [i*range_bin, (i+1)*range_bin); voxel centers sit at
(i + 0.5)*range_bin.  Positive angles are the sensor's right side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class EnergyGrid:
    """Resolution of a polar energy image."""

    n_range: int = 500
    n_angle: int = 181
    r_max: float = 5.0

    def __post_init__(self):
        if self.n_range < 1 or self.n_angle < 2 or self.r_max <= 0:
            raise ValueError("invalid grid resolution")

    @property
    def range_bin(self) -> float:
        return self.r_max / self.n_range

    @property
    def angles_deg(self) -> np.ndarray:
        return np.linspace(-90.0, 90.0, self.n_angle)

    @property
    def angles_rad(self) -> np.ndarray:
        return np.radians(self.angles_deg)

    @property
    def range_centers(self) -> np.ndarray:
        return (np.arange(self.n_range) + 0.5) * self.range_bin

    def range_bin_index(self, r: float) -> int:
        """Bin containing range r; -1 when r is outside (0, r_max]."""
        if not (0.0 < r <= self.r_max):
            return -1
        return min(int(r / self.range_bin), self.n_range - 1)

    def angle_bin_index(self, theta_deg: float) -> int:
        """Nearest beam to a bearing in degrees; -1 outside the FOV."""
        if not (-90.0 <= theta_deg <= 90.0):
            return -1
        step = 180.0 / (self.n_angle - 1)
        return int(round((theta_deg + 90.0) / step))

    def shape(self) -> tuple[int, int]:
        return (self.n_range, self.n_angle)


CANONICAL_GRID = EnergyGrid()


@dataclass
class Energyscape:
    """Per-sensor polar image of reflection energy (linear units, >= 0)."""

    energy: np.ndarray
    grid: EnergyGrid = field(default_factory=lambda: CANONICAL_GRID)
    sensor_index: int = 0
    timestamp: float = 0.0

    def __post_init__(self):
        self.energy = np.asarray(self.energy, dtype=np.float64)
        if self.energy.shape != self.grid.shape():
            raise ValueError(
                f"energy shape {self.energy.shape} does not match grid {self.grid.shape()}"
            )
        if np.any(self.energy < 0) or not np.all(np.isfinite(self.energy)):
            raise ValueError("energy entries must be finite and non-negative")

    @property
    def r_max(self) -> float:
        return self.grid.r_max

    @property
    def range_bin(self) -> float:
        return self.grid.range_bin

    @property
    def angle_grid(self) -> np.ndarray:
        return self.grid.angles_deg

    @classmethod
    def zeros(cls, grid: EnergyGrid = CANONICAL_GRID, sensor_index: int = 0,
              timestamp: float = 0.0) -> "Energyscape":
        return cls(np.zeros(grid.shape()), grid, sensor_index, timestamp)


def sensor_frame_xy(grid: EnergyGrid, l: float, alpha: float, delta: float):
    """Platform-frame (x, y) of every voxel center for a mounted sensor.

    A voxel at polar (r, theta) in the sensor frame sits at
    x = l cos(alpha) + r cos(delta - theta), y = l sin(alpha) + r sin(delta - theta).
    Returns two [n_range, n_angle] arrays.
    """
    r = grid.range_centers[:, None]
    theta = grid.angles_rad[None, :]
    x = l * math.cos(alpha) + r * np.cos(delta - theta)
    y = l * math.sin(alpha) + r * np.sin(delta - theta)
    return x, y
