"""Wire protocol models. Every frame on the socket is one JSON object
(newline-terminated) whose "type" field selects the message kind."""

from __future__ import annotations

from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, Field, ValidationError


class XY(BaseModel):
    x: float
    y: float


class RobotPose(BaseModel):
    x: float
    y: float
    yaw: float


class Velocity(BaseModel):
    V: float
    omega: float


class CommandMessage(BaseModel):
    """Operator input velocities; the latest one wins each control step."""

    type: Literal["command"]
    V: float
    omega: float


class ControlMessage(BaseModel):
    type: Literal["control"]
    action: Literal["start", "pause", "reset", "select_scenario"]
    scenario: Optional[str] = None


ClientMessage = Annotated[Union[CommandMessage, ControlMessage], Field(discriminator="type")]


class _ClientEnvelope(BaseModel):
    message: ClientMessage


def parse_client_message(raw: str) -> ClientMessage:
    """Decode one client frame; raises ValueError with a readable reason."""
    import json

    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValueError(f"not valid JSON: {exc}") from exc
    try:
        return _ClientEnvelope(message=data).message
    except ValidationError as exc:
        raise ValueError(f"bad message: {exc.errors()[0].get('msg', 'invalid')}") from exc


class EnergyscapePayload(BaseModel):
    """Max-pooled energyscape small enough for 10 Hz streaming."""

    sensor: int
    n_range: int
    n_angle: int
    r_max: float
    data: list[list[float]]


class ObstacleState(BaseModel):
    x: float
    y: float
    radius: float


class StateMessage(BaseModel):
    type: Literal["state"] = "state"
    step: int
    t: float
    running: bool
    robot: RobotPose
    cmd_in: Velocity
    cmd_out: Velocity
    layer: str
    goal_reached: bool
    collision: bool
    active_waypoint: int
    obstacles: list[ObstacleState] = Field(default_factory=list)
    energyscapes: list[EnergyscapePayload] = Field(default_factory=list)


class SensorInfo(BaseModel):
    l: float
    alpha: float
    beta: float
    delta: float


class ConfigMessage(BaseModel):
    """Sent once per connection: static scenario geometry and layout."""

    type: Literal["config"] = "config"
    scenario: str
    segments: list[list[float]]
    circles: list[list[float]]
    waypoints: list[list[float]]
    start_zone: list[float]
    sensors: list[SensorInfo]
    robot_radius: float
    v_max: float
    pace: float


class AckMessage(BaseModel):
    type: Literal["ack"] = "ack"
    action: str
    ok: bool = True
    detail: str = ""


class ErrorMessage(BaseModel):
    type: Literal["error"] = "error"
    message: str


class ValidateRequest(BaseModel):
    """Scenario document to validate; either parsed JSON or raw text."""

    document: Union[dict, str]


class ValidateResponse(BaseModel):
    valid: bool
    problems: list[str] = Field(default_factory=list)


class HealthResponse(BaseModel):
    status: str
    scenario: str
    step: int
    clients: int
