"""Closed-loop simulation: sensing -> masks -> controller -> guidance ->
kinematics at 10 Hz, with run reports, trajectory logs and heat maps."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .controller import ControllerState, VelocityCommand, build_mask_set, step as controller_step
from .flow import SensorPose
from .grid import Energyscape
from .guidance import GuidanceState, input_command
from .scenario import Scenario
from .sonar import sense
from .sonar.deadzones import deadzone_keep_mask, sensor_body_deadzones
from .world import RobotState, detect_collision, detect_stuck, min_clearance, step_world

DT = 0.1  # fixed control/sim step, s

CSV_HEADER = "t,x,y,yaw,V_i,omega_i,V_o,omega_o,layer"


@dataclass
class TrajectoryRow:
    t: float
    x: float
    y: float
    yaw: float
    v_in: float
    omega_in: float
    v_out: float
    omega_out: float
    layer: str


@dataclass
class RunReport:
    scenario: str
    seed: int
    layout_id: Optional[int]
    termination: str  # goal | collision | stuck | timeout
    goal_reached: bool
    collisions: list[dict]
    stuck_intervals: list[tuple[float, float]]
    min_clearance: float
    steps: int
    sim_time: float
    rows: list[TrajectoryRow]
    wallclock: dict = field(default_factory=dict)

    @property
    def layer_counts(self) -> dict:
        counts: dict[str, int] = {}
        for row in self.rows:
            counts[row.layer] = counts.get(row.layer, 0) + 1
        return counts


def sensor_world_pose(robot: RobotState, pose: SensorPose) -> tuple[tuple[float, float], float]:
    sx = robot.x + pose.l * math.cos(robot.yaw + pose.alpha)
    sy = robot.y + pose.l * math.sin(robot.yaw + pose.alpha)
    return (sx, sy), robot.yaw + pose.delta


def initial_robot(scenario: Scenario, rng: np.random.Generator) -> RobotState:
    x0, y0, x1, y1 = scenario.start_zone
    x = float(rng.uniform(x0, x1)) if x1 > x0 else x0
    y = float(rng.uniform(y0, y1)) if y1 > y0 else y0
    wx, wy = scenario.plan.waypoints[0]
    return RobotState(x=x, y=y, yaw=math.atan2(wy - y, wx - x))


def run_scenario(
    scenario: Scenario,
    seed: Optional[int] = None,
    fast_sonar: bool = True,
    energyscape_sink=None,
) -> RunReport:
    """Execute one run to goal, collision, stuck or timeout.

    Deterministic for a given (scenario, seed).  ``energyscape_sink``, when
    given, receives (step, sensor_index, Energyscape) for optional dumps.
    """
    seed = scenario.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    robot = initial_robot(scenario, rng)
    world = scenario.world

    mask_set = build_mask_set(scenario.regions, scenario.sensors, scenario.sonar.grid,
                              scenario.controller)
    keep_masks = [
        deadzone_keep_mask(zones, pose, scenario.sonar.grid)
        for zones, pose in zip(sensor_body_deadzones(scenario.sensors), scenario.sensors)
    ]

    c_state = ControllerState()
    g_state = GuidanceState()
    rows: list[TrajectoryRow] = []
    collisions: list[dict] = []
    stuck_intervals: list[tuple[float, float]] = []
    clearance_min = math.inf
    termination = "timeout"
    trajectory: list[tuple[float, float, float]] = []
    step_times: list[float] = []
    ctrl_times: list[float] = []

    n_steps = int(round(scenario.timeout_s / DT))
    for k in range(n_steps):
        t = k * DT
        wall0 = time.perf_counter()

        scene = world.snapshot(t)
        scapes: list[Energyscape] = []
        for j, pose in enumerate(scenario.sensors):
            xy, heading = sensor_world_pose(robot, pose)
            scape = sense(scene, xy, heading, scenario.sonar, fast=fast_sonar,
                          sensor_index=j, timestamp=t, rng=rng)
            if keep_masks[j] is not None:
                scape = Energyscape(scape.energy * keep_masks[j], scape.grid, j, t)
            scapes.append(scape)
            if energyscape_sink is not None:
                energyscape_sink(k, j, scape)

        cmd_in, g_state = input_command((robot.x, robot.y, robot.yaw), scenario.plan, g_state)

        ctrl0 = time.perf_counter()
        cmd_out, decision, c_state = controller_step(
            scapes, mask_set, cmd_in, scenario.controller, c_state
        )
        ctrl_times.append(time.perf_counter() - ctrl0)

        rows.append(TrajectoryRow(t, robot.x, robot.y, robot.yaw, cmd_in.V, cmd_in.omega,
                                  cmd_out.V, cmd_out.omega, decision.layer))
        trajectory.append((t, robot.x, robot.y))

        if g_state.goal_reached:
            termination = "goal"
            step_times.append(time.perf_counter() - wall0)
            break

        world, robot = step_world(world, robot, cmd_out, DT)

        clearance, entity = min_clearance(world, robot, t + DT)
        clearance_min = min(clearance_min, clearance)
        hit = detect_collision(world, robot, t + DT)
        step_times.append(time.perf_counter() - wall0)
        if hit is not None:
            collisions.append({"t": t + DT, "entity": hit.entity, "clearance": hit.clearance})
            termination = "collision"
            break

        if detect_stuck(trajectory):
            stuck_intervals.append((max(0.0, t - 10.0), t))
            termination = "stuck"
            break

    sim_time = rows[-1].t if rows else 0.0
    wallclock = {
        "mean_step_ms": 1e3 * float(np.mean(step_times)) if step_times else 0.0,
        "max_step_ms": 1e3 * float(np.max(step_times)) if step_times else 0.0,
        "controller_mean_ms": 1e3 * float(np.mean(ctrl_times)) if ctrl_times else 0.0,
        "controller_max_ms": 1e3 * float(np.max(ctrl_times)) if ctrl_times else 0.0,
    }
    return RunReport(
        scenario=scenario.name, seed=seed, layout_id=scenario.layout_id,
        termination=termination, goal_reached=termination == "goal",
        collisions=collisions, stuck_intervals=stuck_intervals,
        min_clearance=clearance_min if math.isfinite(clearance_min) else math.nan,
        steps=len(rows), sim_time=sim_time, rows=rows, wallclock=wallclock,
    )


def trajectory_csv(report: RunReport) -> str:
    lines = [CSV_HEADER]
    for r in report.rows:
        lines.append(
            f"{r.t:.10g},{r.x:.10g},{r.y:.10g},{r.yaw:.10g},"
            f"{r.v_in:.10g},{r.omega_in:.10g},{r.v_out:.10g},{r.omega_out:.10g},{r.layer}"
        )
    return "\n".join(lines) + "\n"


def report_to_dict(report: RunReport, include_wallclock: bool = True) -> dict:
    doc = {
        "scenario": report.scenario,
        "seed": report.seed,
        "layout_id": report.layout_id,
        "termination": report.termination,
        "goal_reached": report.goal_reached,
        "collisions": report.collisions,
        "stuck_intervals": [list(iv) for iv in report.stuck_intervals],
        "min_clearance": report.min_clearance,
        "steps": report.steps,
        "sim_time": report.sim_time,
        "layer_counts": report.layer_counts,
    }
    if include_wallclock:
        doc["wallclock"] = report.wallclock
    return doc


def report_json(report: RunReport, include_wallclock: bool = True) -> str:
    return json.dumps(report_to_dict(report, include_wallclock), indent=2, sort_keys=True) + "\n"


@dataclass
class HeatMap:
    counts: np.ndarray  # [ny, nx] visit counts
    x0: float
    y0: float
    cell: float

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def aggregate_heatmap(reports: Sequence[RunReport], cell: float = 0.05,
                      bounds: Optional[tuple[float, float, float, float]] = None) -> HeatMap:
    """Bin all trajectory samples of all runs onto a world-aligned grid."""
    xs = np.array([row.x for rep in reports for row in rep.rows])
    ys = np.array([row.y for rep in reports for row in rep.rows])
    if bounds is None:
        if xs.size == 0:
            return HeatMap(np.zeros((1, 1), dtype=np.int64), 0.0, 0.0, cell)
        bounds = (xs.min(), ys.min(), xs.max(), ys.max())
    x0, y0, x1, y1 = bounds
    nx = max(1, int(math.floor((x1 - x0) / cell)) + 1)
    ny = max(1, int(math.floor((y1 - y0) / cell)) + 1)
    counts = np.zeros((ny, nx), dtype=np.int64)
    ix = np.clip(((xs - x0) / cell).astype(int), 0, nx - 1)
    iy = np.clip(((ys - y0) / cell).astype(int), 0, ny - 1)
    np.add.at(counts, (iy, ix), 1)
    return HeatMap(counts=counts, x0=x0, y0=y0, cell=cell)


def heatmap_pgm_bytes(hm: HeatMap) -> bytes:
    peak = max(1, int(hm.counts.max()))
    img = (hm.counts.astype(np.float64) / peak * 255.0).astype(np.uint8)
    img = img[::-1]  # north up
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode()
    return header + img.tobytes()


def heatmap_csv(hm: HeatMap) -> str:
    lines = [f"# x0={hm.x0:.10g} y0={hm.y0:.10g} cell={hm.cell:.10g} total={hm.total}"]
    for row in hm.counts:
        lines.append(",".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def write_run_outputs(out_dir: Union[str, Path], label: str, report: RunReport) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"trajectory_{label}.csv").write_text(trajectory_csv(report))
    (out / f"report_{label}.json").write_text(report_json(report))
