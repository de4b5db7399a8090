"""Simulated in-air sonar: geometric echo tracing plus either the full DSP
pipeline or a fast point-spread splat, with FOV dead zoning."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..grid import Energyscape
from ..world import Scene
from .deadzones import (
    DeadZone,
    apply_dead_zones,
    deadzone_keep_mask,
    sensor_body_deadzones,
)
from .fast import fast_energyscape
from .pipeline import (
    PIPELINE_GAIN,
    SonarConfig,
    beamform,
    envelope,
    matched_filter,
    render_energyscape,
    synthesize_echo_signals,
)
from .reflect import KIND_AMPLITUDE, ReflectionEvent, trace_reflections
from .signals import SPEED_OF_SOUND, ArrayGeometry, Chirp, canonical_array

__all__ = [
    "ArrayGeometry", "Chirp", "DeadZone", "KIND_AMPLITUDE", "PIPELINE_GAIN",
    "ReflectionEvent", "Scene", "SonarConfig", "SPEED_OF_SOUND",
    "apply_dead_zones", "beamform", "canonical_array", "deadzone_keep_mask",
    "envelope", "fast_energyscape", "matched_filter", "render_energyscape",
    "sense", "sensor_body_deadzones", "synthesize_echo_signals",
    "trace_reflections",
]


def sense(
    scene: Scene,
    sensor_xy: tuple[float, float],
    heading: float,
    cfg: SonarConfig,
    fast: bool = True,
    sensor_index: int = 0,
    timestamp: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> Energyscape:
    """One sensor measurement: trace the scene, render, in either mode."""
    events = trace_reflections(scene, sensor_xy, heading, cfg.grid.r_max)
    if fast:
        return fast_energyscape(
            events, cfg.grid, cfg.psf_sigma_angle_deg, cfg.psf_sigma_range_bins,
            sensor_index, timestamp,
        )
    return render_energyscape(events, cfg, sensor_index, timestamp, rng)
