"""Scenario files: JSON (with // comments allowed) describing the world,
sensor layout, control regions, waypoints and config overrides.

File-boundary units follow the mounting tables: sensor poses in degrees
and centimeters, region spans in degrees; everything becomes radians and
meters at parse time.  ``serialize(parse(f))`` is idempotent on the
canonical form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .controller import ControllerConfig
from .flow import SensorPose
from .grid import EnergyGrid
from .guidance import WaypointPlan
from .layouts import SENSOR_LAYOUTS, layout_poses
from .masks import (
    Circle,
    Corridor,
    HalfCircle,
    Rectangle,
    RegionError,
    RegionShape,
    Sector,
    Trapezoid,
)
from .sonar.pipeline import SonarConfig
from .sonar.signals import Chirp
from .world import CircleObstacle, DynamicObstacle, EnvironmentModel, Segment

DEFAULT_TIMEOUT_S = 300.0


class ScenarioError(ValueError):
    """Schema violations, with one diagnostic per offending field."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid scenario: " + "; ".join(problems))


@dataclass
class Scenario:
    name: str
    world: EnvironmentModel
    start_zone: tuple[float, float, float, float]  # x_min, y_min, x_max, y_max
    plan: WaypointPlan
    sensors: list[SensorPose]
    sensor_table: list[tuple[float, float, float]]  # (l_cm, alpha_deg, beta_deg)
    regions: dict[str, list[RegionShape]]
    controller: ControllerConfig
    sonar: SonarConfig
    seed: int = 0
    timeout_s: float = DEFAULT_TIMEOUT_S
    layout_id: Optional[int] = None
    controller_overrides: dict = field(default_factory=dict)
    sonar_overrides: dict = field(default_factory=dict)

    def with_layout(self, layout_id: int) -> "Scenario":
        """Same scenario with the sensor layout swapped for a catalog row."""
        import copy

        out = copy.copy(self)
        out.layout_id = layout_id
        out.sensors = layout_poses(layout_id)
        out.sensor_table = [
            (l_cm, a_deg, b_deg) for a_deg, b_deg, l_cm in SENSOR_LAYOUTS[layout_id]
        ]
        return out


def strip_comments(text: str) -> str:
    """Drop // line comments (outside of strings) before JSON parsing."""
    out_lines = []
    for line in text.splitlines():
        in_str = False
        esc = False
        cut = len(line)
        for i, ch in enumerate(line):
            if esc:
                esc = False
                continue
            if ch == "\\" and in_str:
                esc = True
            elif ch == '"':
                in_str = not in_str
            elif not in_str and ch == "/" and line[i:i + 2] == "//":
                cut = i
                break
        out_lines.append(line[:cut])
    return "\n".join(out_lines)


_SHAPE_PARSERS = {
    "half_circle": lambda d: HalfCircle(radius=float(d["radius"])),
    "circle": lambda d: Circle(radius=float(d["radius"])),
    "rectangle": lambda d: Rectangle(
        x_min=float(d["x_min"]), x_max=float(d["x_max"]),
        y_min=float(d["y_min"]), y_max=float(d["y_max"]),
    ),
    "corridor": lambda d: Corridor(half_width=float(d["half_width"])),
    "trapezoid": lambda d: Trapezoid(tuple((float(x), float(y)) for x, y in d["vertices"])),
    "sector": lambda d: Sector(span=math.radians(float(d["span_deg"])), radius=float(d["radius"])),
}


def _shape_to_dict(shape: RegionShape) -> dict:
    if isinstance(shape, HalfCircle):
        return {"shape": "half_circle", "radius": shape.radius}
    if isinstance(shape, Circle):
        return {"shape": "circle", "radius": shape.radius}
    if isinstance(shape, Rectangle):
        return {"shape": "rectangle", "x_min": shape.x_min, "x_max": shape.x_max,
                "y_min": shape.y_min, "y_max": shape.y_max}
    if isinstance(shape, Corridor):
        return {"shape": "corridor", "half_width": shape.half_width}
    if isinstance(shape, Trapezoid):
        return {"shape": "trapezoid", "vertices": [list(v) for v in shape.vertices]}
    if isinstance(shape, Sector):
        return {"shape": "sector", "span_deg": math.degrees(shape.span), "radius": shape.radius}
    raise TypeError(shape)


def _parse_region(entry, path: str, problems: list[str]) -> list[RegionShape]:
    items = entry if isinstance(entry, list) else [entry]
    shapes = []
    for i, item in enumerate(items):
        tag = item.get("shape") if isinstance(item, dict) else None
        parser = _SHAPE_PARSERS.get(tag)
        if parser is None:
            problems.append(f"{path}[{i}].shape: unknown shape {tag!r}")
            continue
        try:
            shapes.append(parser(item))
        except (KeyError, TypeError, ValueError, RegionError) as exc:
            problems.append(f"{path}[{i}]: {exc}")
    return shapes


def parse_scenario(data: Union[str, dict], name: str = "scenario") -> Scenario:
    """Parse and validate a scenario document; raises ScenarioError with a
    list of field diagnostics when the schema is violated."""
    if isinstance(data, str):
        try:
            data = json.loads(strip_comments(data))
        except json.JSONDecodeError as exc:
            raise ScenarioError([f"JSON syntax: {exc}"]) from exc
    problems: list[str] = []

    name = str(data.get("name", name))
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        problems.append("seed: must be a non-negative integer")
        seed = 0

    # --- world geometry ----------------------------------------------------
    w = data.get("world", {})
    segments, circles, dynamic = [], [], []
    for i, row in enumerate(w.get("segments", [])):
        try:
            segments.append(Segment(*map(float, row)))
        except (TypeError, ValueError) as exc:
            problems.append(f"world.segments[{i}]: {exc}")
    for i, row in enumerate(w.get("circles", [])):
        try:
            circles.append(CircleObstacle(*map(float, row)))
        except (TypeError, ValueError) as exc:
            problems.append(f"world.circles[{i}]: {exc}")
    for i, row in enumerate(w.get("dynamic", [])):
        try:
            dynamic.append(DynamicObstacle(
                radius=float(row["radius"]),
                waypoints=tuple((float(x), float(y)) for x, y in row["waypoints"]),
                speed=float(row["speed"]),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            problems.append(f"world.dynamic[{i}]: {exc}")
    world = EnvironmentModel(segments=tuple(segments), circles=tuple(circles),
                             dynamic=tuple(dynamic))

    # --- start zone and waypoints ------------------------------------------
    sz = data.get("start_zone")
    if not (isinstance(sz, (list, tuple)) and len(sz) == 4):
        problems.append("start_zone: expected [x_min, y_min, x_max, y_max]")
        sz = (0.0, 0.0, 0.0, 0.0)
    else:
        sz = tuple(map(float, sz))
        if sz[2] < sz[0] or sz[3] < sz[1]:
            problems.append("start_zone: max corner must not be below min corner")

    wps = data.get("waypoints", [])
    if not wps:
        problems.append("waypoints: at least one waypoint is required")
    try:
        waypoints = tuple((float(x), float(y)) for x, y in wps)
    except (TypeError, ValueError):
        problems.append("waypoints: expected a list of [x, y] pairs")
        waypoints = ()
    g = data.get("guidance", {})
    try:
        plan = WaypointPlan(
            waypoints=waypoints,
            capture_radius=float(g.get("capture_radius", 0.3)),
            cruise_v=float(g.get("cruise_v", 0.3)),
        )
    except ValueError as exc:
        problems.append(f"guidance: {exc}")
        plan = WaypointPlan(waypoints=waypoints or ((0.0, 0.0),))

    # --- sensors ------------------------------------------------------------
    sensors: list[SensorPose] = []
    sensor_table: list[tuple[float, float, float]] = []
    layout_id = data.get("layout")
    if layout_id is not None:
        if layout_id in SENSOR_LAYOUTS:
            sensors = layout_poses(layout_id)
            sensor_table = [(l, a, b) for a, b, l in SENSOR_LAYOUTS[layout_id]]
        else:
            problems.append(f"layout: unknown layout {layout_id}")
    else:
        rows = data.get("sensors", [])
        if not rows:
            problems.append("sensors: at least one sensor (or a layout id) is required")
        for i, row in enumerate(rows):
            try:
                l_cm = float(row["l_cm"])
                a_deg = float(row["alpha_deg"])
                b_deg = float(row["beta_deg"])
                sensors.append(SensorPose.from_degrees_cm(l_cm, a_deg, b_deg))
                sensor_table.append((l_cm, a_deg, b_deg))
            except (KeyError, TypeError, ValueError) as exc:
                problems.append(f"sensors[{i}]: {exc}")

    # --- control regions ----------------------------------------------------
    regions: dict[str, list[RegionShape]] = {}
    reg = data.get("regions", {})
    for layer in ("CA", "OA", "RCF"):
        if layer not in reg:
            problems.append(f"regions.{layer}: region definition is required")
        else:
            regions[layer] = _parse_region(reg[layer], f"regions.{layer}", problems)

    # --- config overrides -----------------------------------------------—--
    c_over = dict(data.get("controller", {}))
    try:
        controller = ControllerConfig(**c_over)
    except (TypeError, ValueError) as exc:
        problems.append(f"controller: {exc}")
        controller = ControllerConfig()

    s_over = dict(data.get("sonar", {}))
    grid_over = data.get("grid", {})
    try:
        grid = EnergyGrid(
            n_range=int(grid_over.get("n_range", 500)),
            n_angle=int(grid_over.get("n_angle", 181)),
            r_max=float(grid_over.get("r_max", 5.0)),
        )
        chirp = Chirp(**s_over.get("chirp", {}))
        sonar = SonarConfig(
            chirp=chirp, grid=grid,
            array_seed=int(s_over.get("array_seed", 42)),
            noise_std=float(s_over.get("noise_std", 0.0)),
        )
    except (TypeError, ValueError) as exc:
        problems.append(f"sonar/grid: {exc}")
        sonar = SonarConfig()

    timeout_s = float(data.get("timeout_s", DEFAULT_TIMEOUT_S))
    if timeout_s <= 0:
        problems.append("timeout_s: must be positive")

    if problems:
        raise ScenarioError(problems)
    return Scenario(
        name=name, world=world, start_zone=sz, plan=plan, sensors=sensors,
        sensor_table=sensor_table, regions=regions, controller=controller,
        sonar=sonar, seed=seed, timeout_s=timeout_s, layout_id=layout_id,
        controller_overrides=c_over, sonar_overrides=s_over,
    )


def scenario_to_dict(scn: Scenario) -> dict:
    doc: dict = {
        "name": scn.name,
        "seed": scn.seed,
        "world": {
            "segments": [[s.x1, s.y1, s.x2, s.y2] for s in scn.world.segments],
            "circles": [[c.x, c.y, c.radius] for c in scn.world.circles],
            "dynamic": [
                {"radius": d.radius, "speed": d.speed, "waypoints": [list(w) for w in d.waypoints]}
                for d in scn.world.dynamic
            ],
        },
        "start_zone": list(scn.start_zone),
        "waypoints": [list(w) for w in scn.plan.waypoints],
        "guidance": {"capture_radius": scn.plan.capture_radius, "cruise_v": scn.plan.cruise_v},
        "regions": {layer: [_shape_to_dict(s) for s in shapes]
                    for layer, shapes in scn.regions.items()},
        "timeout_s": scn.timeout_s,
    }
    if scn.layout_id is not None:
        doc["layout"] = scn.layout_id
    else:
        doc["sensors"] = [
            {"l_cm": l, "alpha_deg": a, "beta_deg": b} for l, a, b in scn.sensor_table
        ]
    if scn.controller_overrides:
        doc["controller"] = scn.controller_overrides
    if scn.sonar_overrides:
        doc["sonar"] = scn.sonar_overrides
    return doc


def serialize_scenario(scn: Scenario) -> str:
    return json.dumps(scenario_to_dict(scn), indent=2, sort_keys=True) + "\n"


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(), name=path.stem)


def builtin_scenario_dir() -> Path:
    return Path(__file__).parent / "scenarios"


def list_builtin_scenarios() -> list[str]:
    return sorted(p.stem for p in builtin_scenario_dir().glob("*.json"))


def resolve_scenario(name_or_path: Union[str, Path]) -> Path:
    """Accept a filesystem path or the bare name of a shipped scenario."""
    p = Path(name_or_path)
    if p.exists():
        return p
    builtin = builtin_scenario_dir() / f"{p.name}.json"
    if builtin.exists():
        return builtin
    raise FileNotFoundError(
        f"scenario {name_or_path!r} not found (built-ins: {', '.join(list_builtin_scenarios())})"
    )
