"""Plot and image exports: flow-line families, mask images, trajectories
and heat maps, regenerated deterministically from logged run data."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .engine import HeatMap, aggregate_heatmap, heatmap_csv, heatmap_pgm_bytes
from .flow import PlatformMotion, SensorPose, integrate_flow_lines
from .masks import mask_to_pgm_bytes, region_to_mask
from .scenario import Scenario

LAYER_COLORS = {"PASS": "#9e9e9e", "CA": "#d62728", "OA": "#ff7f0e",
                "AFF": "#2ca02c", "RCF": "#1f77b4"}


def flow_line_figure(pose: SensorPose, motion: PlatformMotion, r_max: float = 5.0,
                     n_lines: int = 24, title: str = "") -> plt.Figure:
    """Flow-line fan for one sensor under the given constant motion."""
    r0 = np.full(n_lines, 0.0) + np.linspace(0.3, r_max * 0.95, n_lines)
    th0 = np.linspace(-1.2, 1.2, n_lines)
    r_hist, th_hist, lengths, _ = integrate_flow_lines(
        r0, th0, pose, motion, dt=5e-3, n_steps=4000, r_max=r_max
    )
    fig, ax = plt.subplots(figsize=(6, 4))
    for i in range(n_lines):
        n = lengths[i]
        ax.plot(np.degrees(th_hist[:n, i]), r_hist[:n, i], lw=0.8, color="#1f77b4")
    ax.set_xlim(-90, 90)
    ax.set_ylim(0, r_max)
    ax.set_xlabel("bearing (deg)")
    ax.set_ylabel("range (m)")
    ax.set_title(title or f"flow lines V={motion.V} m/s, w={motion.omega} rad/s")
    fig.tight_layout()
    return fig


def export_flow_figures(scenario: Scenario, out_dir: Path) -> list[Path]:
    out = []
    for j, pose in enumerate(scenario.sensors):
        for tag, motion in (("linear", PlatformMotion(0.3, 0.0)),
                            ("rotation", PlatformMotion(0.0, 0.5))):
            fig = flow_line_figure(pose, motion, scenario.sonar.grid.r_max,
                                   title=f"sensor {j} {tag} flow")
            path = out_dir / f"flow_{tag}_sensor{j}.png"
            fig.savefig(path, dpi=110)
            plt.close(fig)
            out.append(path)
    return out


def export_mask_pgms(scenario: Scenario, out_dir: Path) -> list[Path]:
    out = []
    for layer, shapes in scenario.regions.items():
        for j, pose in enumerate(scenario.sensors):
            mask = region_to_mask(shapes, pose, scenario.sonar.grid, layer, j)
            path = out_dir / f"mask_{layer}_sensor{j}.pgm"
            path.write_bytes(mask_to_pgm_bytes(mask))
            out.append(path)
    return out


def read_trajectory_csv(path: Union[str, Path]):
    """Rows of (t, x, y, yaw, v_i, om_i, v_o, om_o, layer) from a log file."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append((
                float(rec["t"]), float(rec["x"]), float(rec["y"]), float(rec["yaw"]),
                float(rec["V_i"]), float(rec["omega_i"]), float(rec["V_o"]),
                float(rec["omega_o"]), rec["layer"],
            ))
    return rows


def trajectory_figure(scenario: Scenario, trajectories: Sequence[list],
                      title: str = "") -> plt.Figure:
    fig, ax = plt.subplots(figsize=(8, 6))
    for seg in scenario.world.segments:
        ax.plot([seg.x1, seg.x2], [seg.y1, seg.y2], color="black", lw=2)
    for circ in scenario.world.circles:
        ax.add_patch(plt.Circle((circ.x, circ.y), circ.radius, color="black", fill=False))
    for d in scenario.world.dynamic:
        wx = [w[0] for w in d.waypoints]
        wy = [w[1] for w in d.waypoints]
        ax.plot(wx, wy, "--", color="#aaaaaa", lw=1)
    for rows in trajectories:
        for (a, b) in zip(rows, rows[1:]):
            ax.plot([a[1], b[1]], [a[2], b[2]], color=LAYER_COLORS.get(b[8], "#000000"), lw=1.2)
    for i, (wx, wy) in enumerate(scenario.plan.waypoints):
        ax.plot(wx, wy, "o", color="#1f77b4", ms=10, alpha=0.6)
        ax.annotate(str(i + 1), (wx, wy), ha="center", va="center", fontsize=7, color="white")
    x0, y0, x1, y1 = scenario.start_zone
    ax.add_patch(plt.Rectangle((x0, y0), x1 - x0, y1 - y0, ls="--", fill=False, ec="#1f77b4"))
    handles = [plt.Line2D([0], [0], color=c, lw=2, label=l) for l, c in LAYER_COLORS.items()]
    ax.legend(handles=handles, loc="upper left", fontsize=7)
    ax.set_aspect("equal")
    ax.set_title(title or scenario.name)
    fig.tight_layout()
    return fig


def heatmap_figure(hm: HeatMap, title: str = "trajectory heat map") -> plt.Figure:
    fig, ax = plt.subplots(figsize=(8, 6))
    extent = (hm.x0, hm.x0 + hm.counts.shape[1] * hm.cell,
              hm.y0, hm.y0 + hm.counts.shape[0] * hm.cell)
    ax.imshow(hm.counts, origin="lower", extent=extent, cmap="hot", aspect="equal")
    ax.set_title(title)
    fig.tight_layout()
    return fig


def export_run_figures(scenario: Scenario, run_dir: Union[str, Path],
                       out_dir: Union[str, Path]) -> list[Path]:
    """Regenerate all figures from a completed run directory."""
    run_dir = Path(run_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    written += export_flow_figures(scenario, out_dir)
    written += export_mask_pgms(scenario, out_dir)

    trajectories = [read_trajectory_csv(p) for p in sorted(run_dir.glob("trajectory_*.csv"))]
    if trajectories:
        fig = trajectory_figure(scenario, trajectories)
        path = out_dir / "trajectories.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)

        class _Rep:  # adapt raw rows to aggregate_heatmap's row interface
            def __init__(self, rows):
                self.rows = [type("R", (), {"x": r[1], "y": r[2]})() for r in rows]

        hm = aggregate_heatmap([_Rep(rows) for rows in trajectories])
        (out_dir / "heatmap.pgm").write_bytes(heatmap_pgm_bytes(hm))
        (out_dir / "heatmap.csv").write_text(heatmap_csv(hm))
        fig = heatmap_figure(hm)
        fig.savefig(out_dir / "heatmap.png", dpi=110)
        plt.close(fig)
        written += [out_dir / "heatmap.pgm", out_dir / "heatmap.csv", out_dir / "heatmap.png"]
    return written
