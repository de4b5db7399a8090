"""Threshold calibration against the rendering pipeline.

The controller thresholds are defined relative to a reference echo: a unit
plane reflector at 1 m dead ahead renders (in either mode) with peak
energy ~1.0, ten times the obstacle-avoidance trigger.  This module
recomputes that calibration from first principles; the resulting numbers
are frozen as the package defaults and can be re-derived or overridden via
the ``calibrate-thresholds`` CLI subcommand.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .controller import ControllerConfig, aff_alignment, build_flow_bank, default_d_grid
from .flow import SensorPose
from .grid import CANONICAL_GRID
from .sonar.fast import fast_energyscape
from .sonar.pipeline import SonarConfig, render_energyscape
from .sonar.reflect import ReflectionEvent, trace_reflections
from .world import Scene, Segment

REFERENCE_WALL_D = 1.0  # m, lateral wall distance used for the AFF reference


def pipeline_peak_raw(cfg: Optional[SonarConfig] = None) -> float:
    """Raw (un-normalized) full-pipeline peak for the reference echo."""
    cfg = cfg or SonarConfig(pipeline_gain=1.0)
    scape = render_energyscape([ReflectionEvent(1.0, 0.0, 1.0, "plane")], cfg)
    return float(scape.energy.max())


def aff_reference_peak(fast: bool = True) -> float:
    """Peak of the alignment profile for an infinite wall at 1 m lateral
    distance seen by a centered forward sensor (fast mode by default)."""
    pose = SensorPose(0.0, 0.0, 0.0)
    scene = Scene(segments=(Segment(-50.0, REFERENCE_WALL_D, 50.0, REFERENCE_WALL_D),), circles=())
    events = trace_reflections(scene, (0.0, 0.0), 0.0, CANONICAL_GRID.r_max)
    cfg = SonarConfig()
    if fast:
        scape = fast_energyscape(events, cfg.grid, cfg.psf_sigma_angle_deg,
                                 cfg.psf_sigma_range_bins)
    else:
        scape = render_energyscape(events, cfg)
    bank = build_flow_bank([pose], CANONICAL_GRID, default_d_grid())
    profile, _ = aff_alignment([scape], bank)
    return float(profile.max())


@dataclass(frozen=True)
class Calibration:
    raw_pipeline_peak: float
    t_ca: float
    t_oa: float
    t_rcf: float
    t_af_single: float
    t_aff_corr: float

    def controller_overrides(self) -> dict:
        d = asdict(self)
        d.pop("raw_pipeline_peak")
        return d


def run_calibration() -> Calibration:
    """Derive the threshold set: a reference echo is 10x t_oa; t_ca = t_oa;
    t_rcf = t_oa / 2; AFF thresholds are 30% of the reference wall's
    alignment peak."""
    raw_peak = pipeline_peak_raw()
    reference_energy = 1.0  # by construction of the pipeline gain
    t_oa = reference_energy / 10.0
    a_peak = aff_reference_peak()
    t_af = 0.3 * a_peak
    return Calibration(
        raw_pipeline_peak=raw_peak,
        t_ca=t_oa,
        t_oa=t_oa,
        t_rcf=t_oa / 2.0,
        t_af_single=round(t_af, 6),
        t_aff_corr=round(t_af, 6),
    )


def write_calibration(path: Union[str, Path], cal: Optional[Calibration] = None) -> Calibration:
    cal = cal or run_calibration()
    payload = {"controller": cal.controller_overrides(),
               "sonar": {"raw_pipeline_peak": cal.raw_pipeline_peak}}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")
    return cal


def calibrated_config(**overrides) -> ControllerConfig:
    cal = run_calibration()
    params = cal.controller_overrides()
    params.update(overrides)
    return ControllerConfig(**params)
