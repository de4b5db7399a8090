"""FastAPI application wrapping the live simulation: REST endpoints for
health/scenario management and a WebSocket streaming the wire protocol."""

from __future__ import annotations

import asyncio
import contextlib
import json
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from ..scenario import (
    ScenarioError,
    list_builtin_scenarios,
    load_scenario,
    parse_scenario,
    resolve_scenario,
    scenario_to_dict,
)
from .loop import LiveSim
from .models import (
    AckMessage,
    CommandMessage,
    ControlMessage,
    ErrorMessage,
    HealthResponse,
    ValidateRequest,
    ValidateResponse,
    parse_client_message,
)


def create_app(scenario: str = "empty_room", fast_sonar: bool = True, pace: float = 0.1,
               ui_dir: Optional[Path] = None) -> FastAPI:
    sim = LiveSim(load_scenario(resolve_scenario(scenario)), fast_sonar=fast_sonar, pace=pace)

    @contextlib.asynccontextmanager
    async def lifespan(_app: FastAPI):
        sim.start()
        yield
        await sim.stop()

    app = FastAPI(title="echonav live service", lifespan=lifespan)
    app.state.sim = sim

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", scenario=sim.scenario.name, step=sim.step,
                              clients=len(sim.clients))

    @app.get("/api/scenarios")
    def scenarios() -> list[str]:
        return list_builtin_scenarios()

    @app.get("/api/scenario")
    def current_scenario() -> dict:
        return scenario_to_dict(sim.scenario)

    @app.post("/api/scenario/validate", response_model=ValidateResponse)
    def validate(req: ValidateRequest) -> ValidateResponse:
        try:
            doc = req.document
            parse_scenario(doc if isinstance(doc, str) else json.dumps(doc))
            return ValidateResponse(valid=True)
        except ScenarioError as exc:
            return ValidateResponse(valid=False, problems=exc.problems)

    @app.websocket("/ws")
    async def websocket(ws: WebSocket) -> None:
        await ws.accept()
        cid, client = sim.attach()
        await ws.send_text(sim.config_message().model_dump_json() + "\n")

        async def sender():
            while True:
                await ws.send_text(await client.queue.get())

        send_task = asyncio.create_task(sender())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = parse_client_message(raw)
                except ValueError as exc:
                    await ws.send_text(ErrorMessage(message=str(exc)).model_dump_json() + "\n")
                    continue
                if isinstance(msg, CommandMessage):
                    sim.apply_command(msg.V, msg.omega)
                elif isinstance(msg, ControlMessage):
                    try:
                        sim.control(msg.action, msg.scenario)
                        ack = AckMessage(action=msg.action)
                    except (ValueError, FileNotFoundError, ScenarioError) as exc:
                        ack = AckMessage(action=msg.action, ok=False, detail=str(exc))
                    await ws.send_text(ack.model_dump_json() + "\n")
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await send_task
            sim.detach(cid)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
