"""The live simulation loop: wall-clock paced stepping with operator input
replacing waypoint guidance, broadcasting state to bounded client queues
(drop-oldest, so a slow client can never stall the control loop)."""

from __future__ import annotations

import asyncio
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..controller import ControllerState, VelocityCommand, build_mask_set
from ..controller import step as controller_step
from ..engine import sensor_world_pose
from ..grid import Energyscape
from ..scenario import Scenario, load_scenario, resolve_scenario
from ..sonar import sense
from ..sonar.deadzones import deadzone_keep_mask, sensor_body_deadzones
from ..world import RobotState, detect_collision, step_world
from .models import (
    ConfigMessage,
    EnergyscapePayload,
    ObstacleState,
    RobotPose,
    SensorInfo,
    StateMessage,
    Velocity,
)

QUEUE_CAPACITY = 16
POOL_TARGET = (100, 64)  # max downsampled energyscape payload shape


def max_pool(energy: np.ndarray, target: tuple[int, int] = POOL_TARGET) -> np.ndarray:
    """Max-pool a [n_range, n_angle] image to fit within the target shape."""
    n_r, n_a = energy.shape
    fr = max(1, math.ceil(n_r / target[0]))
    fa = max(1, math.ceil(n_a / target[1]))
    pad_r = (-n_r) % fr
    pad_a = (-n_a) % fa
    padded = np.pad(energy, ((0, pad_r), (0, pad_a)))
    pooled = padded.reshape(padded.shape[0] // fr, fr, padded.shape[1] // fa, fa).max(axis=(1, 3))
    return pooled


@dataclass
class Client:
    queue: asyncio.Queue = field(default_factory=lambda: asyncio.Queue(QUEUE_CAPACITY))


class LiveSim:
    """Owns the simulation state; exactly one instance per served process."""

    def __init__(self, scenario: Scenario, fast_sonar: bool = True, pace: float = 0.1):
        self.fast_sonar = fast_sonar
        self.pace = pace
        self.step_counter = itertools.count()
        self.step = 0
        self.clients: dict[int, Client] = {}
        self._client_ids = itertools.count()
        self.command = VelocityCommand(0.0, 0.0)
        self.running = True
        self.collision = False
        self._task: Optional[asyncio.Task] = None
        self._load(scenario)

    # -- scenario management -------------------------------------------------
    def _load(self, scenario: Scenario) -> None:
        self.scenario = scenario
        self.mask_set = build_mask_set(scenario.regions, scenario.sensors,
                                       scenario.sonar.grid, scenario.controller)
        self.keep_masks = [
            deadzone_keep_mask(zones, pose, scenario.sonar.grid)
            for zones, pose in zip(sensor_body_deadzones(scenario.sensors), scenario.sensors)
        ]
        self.reset()

    def select_scenario(self, name: str) -> None:
        self._load(load_scenario(resolve_scenario(name)))

    def reset(self) -> None:
        scn = self.scenario
        x0, y0, x1, y1 = scn.start_zone
        self.robot = RobotState(x=(x0 + x1) / 2, y=(y0 + y1) / 2, yaw=0.0)
        self.world = scn.world
        self.t = 0.0
        self.c_state = ControllerState()
        self.command = VelocityCommand(0.0, 0.0)
        self.collision = False
        self.last_layer = "PASS"
        self.last_cmd_out = VelocityCommand(0.0, 0.0)

    # -- client plumbing ----------------------------------------------------
    def attach(self) -> tuple[int, Client]:
        cid = next(self._client_ids)
        client = Client()
        self.clients[cid] = client
        return cid, client

    def detach(self, cid: int) -> None:
        self.clients.pop(cid, None)

    def config_message(self) -> ConfigMessage:
        scn = self.scenario
        return ConfigMessage(
            scenario=scn.name,
            segments=[[s.x1, s.y1, s.x2, s.y2] for s in scn.world.segments],
            circles=[[c.x, c.y, c.radius] for c in scn.world.circles],
            waypoints=[list(w) for w in scn.plan.waypoints],
            start_zone=list(scn.start_zone),
            sensors=[SensorInfo(l=p.l, alpha=p.alpha, beta=p.beta, delta=p.delta)
                     for p in scn.sensors],
            robot_radius=self.robot.radius,
            v_max=0.3,
            pace=self.pace,
        )

    def apply_command(self, v: float, omega: float) -> VelocityCommand:
        self.command = VelocityCommand.clamped(v, omega)
        return self.command

    def control(self, action: str, scenario: Optional[str] = None) -> None:
        if action == "start":
            if self.collision:
                self.reset()
            self.running = True
        elif action == "pause":
            self.running = False
        elif action == "reset":
            self.reset()
        elif action == "select_scenario":
            if not scenario:
                raise ValueError("select_scenario needs a scenario name")
            self.select_scenario(scenario)
        else:
            raise ValueError(f"unknown control action {action!r}")

    # -- stepping -------------------------------------------------------------
    def tick(self) -> StateMessage:
        """Advance one step (when running) and build the state broadcast."""
        scn = self.scenario
        step_no = next(self.step_counter)
        self.step = step_no
        cmd_in = self.command

        if self.running and not self.collision:
            scene = self.world.snapshot(self.t)
            scapes = []
            for j, pose in enumerate(scn.sensors):
                xy, heading = sensor_world_pose(self.robot, pose)
                scape = sense(scene, xy, heading, scn.sonar, fast=self.fast_sonar,
                              sensor_index=j, timestamp=self.t)
                scape = Energyscape(scape.energy * self.keep_masks[j], scape.grid, j, self.t)
                scapes.append(scape)
            cmd_out, decision, self.c_state = controller_step(
                scapes, self.mask_set, cmd_in, scn.controller, self.c_state
            )
            self.world, self.robot = step_world(self.world, self.robot, cmd_out, 0.1)
            self.t += 0.1
            hit = detect_collision(self.world, self.robot, self.t)
            if hit is not None:
                self.collision = True
                self.running = False
            self.last_layer = decision.layer
            self.last_cmd_out = cmd_out
            self._last_scapes = scapes
        else:
            scapes = getattr(self, "_last_scapes", [])

        payloads = []
        for s in scapes:
            pooled = np.round(max_pool(s.energy), 4)
            payloads.append(EnergyscapePayload(
                sensor=s.sensor_index, n_range=pooled.shape[0], n_angle=pooled.shape[1],
                r_max=s.grid.r_max, data=pooled.tolist(),
            ))
        obstacles = [
            ObstacleState(x=c.x, y=c.y, radius=c.radius)
            for c in self.world.snapshot(self.t).circles
        ]
        return StateMessage(
            step=step_no,
            t=self.t,
            running=self.running,
            robot=RobotPose(x=self.robot.x, y=self.robot.y, yaw=self.robot.yaw),
            cmd_in=Velocity(V=cmd_in.V, omega=cmd_in.omega),
            cmd_out=Velocity(V=self.last_cmd_out.V, omega=self.last_cmd_out.omega),
            layer=self.last_layer,
            goal_reached=False,
            collision=self.collision,
            active_waypoint=0,
            obstacles=obstacles,
            energyscapes=payloads,
        )

    def broadcast(self, text: str) -> None:
        for client in self.clients.values():
            q = client.queue
            if q.full():
                try:
                    q.get_nowait()  # drop the oldest frame
                except asyncio.QueueEmpty:
                    pass
            q.put_nowait(text)

    async def run(self) -> None:
        loop = asyncio.get_running_loop()
        next_due = loop.time()
        while True:
            state = self.tick()
            self.broadcast(state.model_dump_json() + "\n")
            next_due += self.pace
            delay = next_due - loop.time()
            if delay < 0:
                next_due = loop.time()  # fell behind; don't burst
                delay = 0.0
            await asyncio.sleep(delay)

    def start(self) -> None:
        self._task = asyncio.get_running_loop().create_task(self.run())

    async def stop(self) -> None:
        if self._task is not None:
            self._task.cancel()
            try:
                await self._task
            except asyncio.CancelledError:
                pass
            self._task = None
