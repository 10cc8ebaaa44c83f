"""Live control service: HTTP command API plus a WebSocket telemetry stream.

The service owns one session and paces it against the wall clock inside the
asyncio event loop, so command handlers and the stepping task never run
concurrently; command ordering is service receipt order. Every telemetry
record broadcast over the WebSocket is the same record appended to the
session's telemetry log.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import logging
from fastapi import FastAPI, HTTPException, Query, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware

from farmsim.config import Scenario
from farmsim.session import Session

logger = logging.getLogger(__name__)

__all__ = ["create_app"]


def _json_line(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def create_app(
    scenario: Scenario,
    *,
    pace: bool = True,
    speed: float = 1.0,
    wall_tick: float = 0.05,
) -> FastAPI:
    """Build the control-service app around a fresh session for `scenario`.

    With pace=True a background task advances virtual time by
    speed * wall_tick per wall tick until the scenario duration is reached.
    """
    session = Session(scenario)
    subscribers: set[asyncio.Queue] = set()

    def broadcast(record: dict) -> None:
        for queue in subscribers:
            queue.put_nowait(record)

    session.telemetry_listeners.append(broadcast)

    async def pacing_loop() -> None:
        try:
            while session.engine.now < scenario.duration:
                await asyncio.sleep(wall_tick)
                target = min(session.engine.now + speed * wall_tick, scenario.duration)
                session.step_to(target)
        except asyncio.CancelledError:
            raise
        except Exception:
            logger.exception("pacing loop stopped")

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        task = asyncio.create_task(pacing_loop()) if pace else None
        try:
            yield
        finally:
            if task is not None:
                task.cancel()
                with contextlib.suppress(asyncio.CancelledError):
                    await task

    app = FastAPI(title="farmsim control service", lifespan=lifespan)
    # the dashboard may be served from another origin (e.g. the vite dev
    # server); this is a single-operator tool with no credentials
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.session = session

    def submit(kind: str, args: dict) -> dict:
        ack = session.submit_command(kind, args, actor="api")
        if not ack["accepted"]:
            raise HTTPException(status_code=400, detail=ack["errors"])
        return ack

    @app.post("/run/go")
    async def run_go() -> dict:
        return submit("go", {})

    @app.post("/run/stop")
    async def run_stop() -> dict:
        return submit("stop", {})

    @app.post("/inject")
    async def inject(command: dict) -> dict:
        if not isinstance(command, dict) or "kind" not in command:
            raise HTTPException(status_code=400, detail=["command body needs a kind"])
        args = dict(command.get("args", {}))
        args.update(
            {k: v for k, v in command.items() if k not in ("kind", "args", "t")}
        )
        return submit(str(command["kind"]), args)

    @app.get("/state")
    async def state() -> dict:
        return {
            "scenario": {
                "name": scenario.name,
                "seed": scenario.seed,
                "duration": scenario.duration,
                "telemetry_period": scenario.telemetry_period,
            },
            "snapshot": session.snapshot(),
            "journal_tail": [e.to_dict() for e in session.journal[-50:]],
        }

    @app.get("/journal")
    async def journal(
        t_from: float | None = Query(default=None, alias="from"),
        t_to: float | None = Query(default=None, alias="to"),
    ) -> list[dict]:
        return [e.to_dict() for e in session.query_journal(t_from, t_to)]

    @app.websocket("/telemetry")
    async def telemetry(ws: WebSocket) -> None:
        await ws.accept()
        queue: asyncio.Queue = asyncio.Queue()
        subscribers.add(queue)
        try:
            while True:
                record = await queue.get()
                await ws.send_text(_json_line(record) + "\n")
        except WebSocketDisconnect:
            pass
        finally:
            subscribers.discard(queue)

    return app
