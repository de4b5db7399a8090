"""Layered reactive navigation controller.

Four behavior layers arbitrated by fixed priority (highest first):

* CA  - collision avoidance: rotate away from the nearest above-threshold
        reflection; stop, and reverse after repeated triggers.
* OA  - obstacle avoidance: steer away from the heavier side with a
        1/r^2-weighted ratio and slow down with total reflected energy.
* AFF - acoustic-flow following: track single-wall or corridor alignment
        peaks over lateral distances.
* RCF - reactive corridor following: OA-style steering on the peripheral
        zone at constant speed.

The first triggered layer modulates the input command; otherwise the input
passes through untouched.  Energy enters each layer through the per-sensor
ternary masks of :mod:`echonav.masks`; +1 marks the platform's left, so a
positive left/right energy ratio steers right (omega down) and vice versa.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.signal import find_peaks

from .flow import SensorPose
from .grid import EnergyGrid, Energyscape
from .masks import ControlRegion, FlowLineMask, TernaryMask, flowline_mask, region_to_mask

V_MAX = 0.3  # platform linear speed limit, m/s


class ControllerError(ValueError):
    """Configuration or wiring mistakes (grid mismatch, bad thresholds)."""


@dataclass(frozen=True)
class VelocityCommand:
    """Linear/rotational velocity pair; omega > 0 is a left (CCW) turn."""

    V: float
    omega: float

    def __post_init__(self):
        if not (math.isfinite(self.V) and math.isfinite(self.omega)):
            raise ValueError("velocity command must be finite")
        if abs(self.V) > V_MAX * (1 + 1e-12):
            raise ValueError(f"|V| exceeds the {V_MAX} m/s platform limit: {self.V}")

    @staticmethod
    def clamped(v: float, omega: float, omega_max: float = 2.0) -> "VelocityCommand":
        """Clamp raw operator input onto the platform envelope."""
        return VelocityCommand(
            V=min(V_MAX, max(-V_MAX, v)), omega=min(omega_max, max(-omega_max, omega))
        )


def default_d_grid(d_max: float = 2.5, step: float = 0.05, d_min: float = 0.15) -> np.ndarray:
    """Lateral distances scanned by AFF; excludes the platform body band."""
    d = np.round(np.arange(-d_max, d_max + step / 2, step), 10)
    return d[np.abs(d) >= d_min - 1e-12]


@dataclass(frozen=True)
class ControllerConfig:
    """Thresholds and gains of the four layers.

    Threshold defaults are calibrated so a unit plane reflector at 1 m
    renders with peak energy 1.0, ten times t_oa (see echonav.calibrate).
    """

    t_ca: float = 0.1
    t_oa: float = 0.1
    t_rcf: float = 0.05
    t_af_single: float = 0.015704
    t_aff_corr: float = 0.015704
    lambda_oa: float = 1.0
    mu_oa: float = 1.0
    lambda_rcf: float = 1.0
    lambda_aff: float = 1.0
    omega_ca: float = 0.5
    v_reverse: float = -0.1
    ca_consecutive: int = 4
    d_grid: tuple[float, ...] = field(default_factory=lambda: tuple(default_d_grid()))
    peak_prominence_frac: float = 0.1

    def __post_init__(self):
        for name in ("t_ca", "t_oa", "t_rcf", "t_af_single", "t_aff_corr"):
            if getattr(self, name) <= 0:
                raise ControllerError(f"threshold {name} must be positive")
        for name in ("lambda_oa", "mu_oa", "lambda_rcf", "lambda_aff"):
            if getattr(self, name) < 0:
                raise ControllerError(f"gain {name} must be non-negative")
        if self.ca_consecutive < 1:
            raise ControllerError("ca_consecutive must be >= 1")


@dataclass(frozen=True)
class ControllerState:
    """Cross-step memory: CA trigger streak and the last single-peak distance."""

    ca_streak: int = 0
    d_p: Optional[float] = None


@dataclass(frozen=True)
class LayerDecision:
    layer: str  # CA | OA | AFF | RCF | PASS
    triggered: bool
    command: VelocityCommand
    diagnostics: dict = field(default_factory=dict)


@dataclass
class LayerBundle:
    """One layer's masks over all sensors plus precomputed weight arrays."""

    masks: list[TernaryMask]
    signed: list[np.ndarray]
    unsigned: list[np.ndarray]
    inv_r2_signed: list[np.ndarray]


@dataclass
class FlowLineBank:
    """Flow-line voxel sets for every (lateral distance, sensor) pair."""

    d_grid: np.ndarray
    masks: list[list[FlowLineMask]]  # [d][sensor]
    flat_idx: list[list[np.ndarray]]
    sqrt_r: list[list[np.ndarray]]
    lengths: np.ndarray  # [d, sensor]


@dataclass
class MaskSet:
    """All controller inputs that depend only on (regions, poses, grid)."""

    grid: EnergyGrid
    ca: LayerBundle
    oa: LayerBundle
    rcf: LayerBundle
    flow: FlowLineBank


def _bundle(layer_id: str, region: ControlRegion, poses: Sequence[SensorPose],
            grid: EnergyGrid) -> LayerBundle:
    masks, signed, unsigned, weighted = [], [], [], []
    inv_r2 = 1.0 / np.square(grid.range_centers)[:, None]
    for j, pose in enumerate(poses):
        m = region_to_mask(region, pose, grid, layer_id=layer_id, sensor_index=j)
        s = m.values.astype(np.float64)
        masks.append(m)
        signed.append(s)
        unsigned.append(np.abs(s))
        weighted.append(s * inv_r2)
    return LayerBundle(masks=masks, signed=signed, unsigned=unsigned, inv_r2_signed=weighted)


def build_flow_bank(poses: Sequence[SensorPose], grid: EnergyGrid,
                    d_grid: Sequence[float]) -> FlowLineBank:
    d_arr = np.asarray(tuple(d_grid), dtype=float)
    masks, flat_idx, sqrt_r = [], [], []
    lengths = np.zeros((len(d_arr), len(poses)), dtype=int)
    for di, d in enumerate(d_arr):
        row_m, row_i, row_s = [], [], []
        for j, pose in enumerate(poses):
            fm = flowline_mask(float(d), pose, grid, sensor_index=j)
            idx = np.array([i * grid.n_angle + k for i, k in fm.voxels], dtype=np.intp)
            rr = np.sqrt(np.array([grid.range_centers[i] for i, _ in fm.voxels], dtype=float))
            row_m.append(fm)
            row_i.append(idx)
            row_s.append(rr)
            lengths[di, j] = fm.length
        masks.append(row_m)
        flat_idx.append(row_i)
        sqrt_r.append(row_s)
    return FlowLineBank(d_grid=d_arr, masks=masks, flat_idx=flat_idx, sqrt_r=sqrt_r,
                        lengths=lengths)


def build_mask_set(regions: dict, poses: Sequence[SensorPose], grid: EnergyGrid,
                   cfg: ControllerConfig) -> MaskSet:
    """Precompute every mask and weight array for one (scenario, layout)."""
    missing = {"CA", "OA", "RCF"} - set(regions)
    if missing:
        raise ControllerError(f"missing control regions for layers: {sorted(missing)}")
    return MaskSet(
        grid=grid,
        ca=_bundle("CA", regions["CA"], poses, grid),
        oa=_bundle("OA", regions["OA"], poses, grid),
        rcf=_bundle("RCF", regions["RCF"], poses, grid),
        flow=build_flow_bank(poses, grid, cfg.d_grid),
    )


def _check_grids(energyscapes: Sequence[Energyscape], mask_set: MaskSet) -> None:
    if len(energyscapes) != len(mask_set.ca.masks):
        raise ControllerError(
            f"{len(energyscapes)} energyscapes for {len(mask_set.ca.masks)} configured sensors"
        )
    for e in energyscapes:
        if e.grid.shape() != mask_set.grid.shape():
            raise ControllerError(
                f"energyscape grid {e.grid.shape()} does not match masks {mask_set.grid.shape()}"
            )


def ca_layer(energyscapes: Sequence[Energyscape], bundle: LayerBundle,
             cfg: ControllerConfig, state: ControllerState) -> LayerDecision:
    """Existence test E*|M| > t_ca; rotate away from the nearest hot voxel."""
    nearest = None  # (range_bin, sensor, angle_bin, mask_sign)
    sums = []
    for j, e in enumerate(energyscapes):
        gated = e.energy * bundle.unsigned[j]
        sums.append(float(gated.sum()))
        hot = gated > cfg.t_ca
        if hot.any():
            rows = np.flatnonzero(hot.any(axis=1))
            i = int(rows[0])
            k = int(np.flatnonzero(hot[i])[0])
            cand = (i, j, k, int(bundle.masks[j].values[i, k]))
            if nearest is None or cand[:3] < nearest[:3]:
                nearest = cand
    if nearest is None:
        return LayerDecision("CA", False, VelocityCommand(0.0, 0.0), {"sums": sums})
    streak = state.ca_streak + 1
    omega = -cfg.omega_ca if nearest[3] > 0 else cfg.omega_ca
    v = cfg.v_reverse if streak >= cfg.ca_consecutive else 0.0
    diag = {"sums": sums, "nearest": {"range_bin": nearest[0], "sensor": nearest[1],
                                      "angle_bin": nearest[2], "side": nearest[3]}}
    return LayerDecision("CA", True, VelocityCommand(v, omega), diag)


def _ratio_layer(name: str, energyscapes, bundle: LayerBundle, cmd_in: VelocityCommand,
                 threshold: float, lam: float, mu: Optional[float]) -> LayerDecision:
    """Shared OA/RCF law: steering ratio of 1/r^2-weighted signed energy."""
    num = 0.0
    denom = 0.0
    peak = 0.0
    sums = []
    for j, e in enumerate(energyscapes):
        gated = e.energy * bundle.unsigned[j]
        denom_j = float(gated.sum())
        sums.append(denom_j)
        denom += denom_j
        num += float((e.energy * bundle.inv_r2_signed[j]).sum())
        if denom_j > 0:
            peak = max(peak, float(gated.max()))
    if peak <= threshold:
        return LayerDecision(name, False, cmd_in, {"sums": sums})
    rho = num / denom
    omega = cmd_in.omega - lam * rho
    if mu is None:
        v = cmd_in.V
    else:
        v = cmd_in.V * min(1.0, max(0.0, 1.0 - mu * denom))
    diag = {"sums": sums, "rho": rho}
    return LayerDecision(name, True, VelocityCommand(v, omega), diag)


def oa_layer(energyscapes, bundle: LayerBundle, cmd_in: VelocityCommand,
             cfg: ControllerConfig) -> LayerDecision:
    return _ratio_layer("OA", energyscapes, bundle, cmd_in, cfg.t_oa, cfg.lambda_oa, cfg.mu_oa)


def rcf_layer(energyscapes, bundle: LayerBundle, cmd_in: VelocityCommand,
              cfg: ControllerConfig) -> LayerDecision:
    return _ratio_layer("RCF", energyscapes, bundle, cmd_in, cfg.t_rcf, cfg.lambda_rcf, None)


def aff_alignment(energyscapes: Sequence[Energyscape], flow: FlowLineBank):
    """Alignment profile A(d): sqrt(r)-weighted mean energy on each flow-line,
    fused over sensors.  Returns (A, observable) arrays over the d grid."""
    n_d = len(flow.d_grid)
    A = np.zeros(n_d)
    observable = flow.lengths.sum(axis=1) > 0
    flats = [e.energy.ravel() for e in energyscapes]
    for di in range(n_d):
        total = 0.0
        for j, flat in enumerate(flats):
            n = flow.lengths[di, j]
            if n == 0:
                continue
            idx = flow.flat_idx[di][j]
            total += float(flat[idx] @ flow.sqrt_r[di][j]) / n
        A[di] = total
    return A, observable


def _side_peaks(A: np.ndarray, d_grid: np.ndarray, prominence: float):
    """Strict local maxima per side of d = 0 (the grid skips the body band)."""
    peaks = []
    for side in (d_grid < 0, d_grid > 0):
        idx = np.flatnonzero(side)
        if len(idx) < 3:
            continue
        local, _ = find_peaks(A[idx], prominence=prominence)
        peaks.extend(int(idx[p]) for p in local)
    return sorted(peaks)


def aff_layer(A: np.ndarray, flow: FlowLineBank, cmd_in: VelocityCommand,
              cfg: ControllerConfig, state: ControllerState) -> LayerDecision:
    """Single-wall tracking (Eq.-16-style d_s - d_p correction) or corridor
    centering on the two dominant opposite-side peaks."""
    d_grid = flow.d_grid
    if A.max(initial=0.0) <= 0:
        return LayerDecision("AFF", False, cmd_in, {"peaks": []})
    prominence = cfg.peak_prominence_frac * float(A.max())
    peaks = _side_peaks(A, d_grid, prominence)
    diag = {"peaks": [{"d": float(d_grid[p]), "A": float(A[p])} for p in peaks]}

    left = [p for p in peaks if d_grid[p] > 0 and A[p] > cfg.t_aff_corr]
    right = [p for p in peaks if d_grid[p] < 0 and A[p] > cfg.t_aff_corr]
    if left and right:
        d_l = float(d_grid[max(left, key=lambda p: A[p])])
        d_r = float(d_grid[max(right, key=lambda p: A[p])])
        omega = cmd_in.omega + cfg.lambda_aff * (d_l - abs(d_r))
        diag["mode"] = "corridor"
        diag["d_l"], diag["d_r"] = d_l, d_r
        return LayerDecision("AFF", True, VelocityCommand(cmd_in.V, omega), diag)

    single = [p for p in peaks if A[p] > cfg.t_af_single]
    if len(single) == 1:
        d_s = float(d_grid[single[0]])
        omega = cmd_in.omega
        if state.d_p is not None:
            omega = cmd_in.omega + cfg.lambda_aff * (d_s - state.d_p)
        diag["mode"] = "single"
        diag["d_s"] = d_s
        return LayerDecision("AFF", True, VelocityCommand(cmd_in.V, omega), diag)
    return LayerDecision("AFF", False, cmd_in, diag)


def step(energyscapes: Sequence[Energyscape], mask_set: MaskSet, cmd_in: VelocityCommand,
         cfg: ControllerConfig, state: ControllerState
         ) -> tuple[VelocityCommand, LayerDecision, ControllerState]:
    """One controller evaluation: first triggered layer wins, else pass-through."""
    _check_grids(energyscapes, mask_set)

    decision = ca_layer(energyscapes, mask_set.ca, cfg, state)
    if decision.triggered:
        return decision.command, decision, ControllerState(ca_streak=state.ca_streak + 1, d_p=None)

    decision = oa_layer(energyscapes, mask_set.oa, cmd_in, cfg)
    if decision.triggered:
        return decision.command, decision, ControllerState(ca_streak=0, d_p=None)

    A, _observable = aff_alignment(energyscapes, mask_set.flow)
    decision = aff_layer(A, mask_set.flow, cmd_in, cfg, state)
    if decision.triggered:
        d_p = decision.diagnostics.get("d_s") if decision.diagnostics.get("mode") == "single" else None
        return decision.command, decision, ControllerState(ca_streak=0, d_p=d_p)

    decision = rcf_layer(energyscapes, mask_set.rcf, cmd_in, cfg)
    if decision.triggered:
        return decision.command, decision, ControllerState(ca_streak=0, d_p=None)

    return cmd_in, LayerDecision("PASS", False, cmd_in, {}), ControllerState(ca_streak=0, d_p=None)
