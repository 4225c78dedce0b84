"""Network boundary: state snapshots, participant input endpoints, log
summary, and a WebSocket event stream with seq-based resume.

Read endpoints never mutate the simulation; input endpoints only enqueue
into the inbox, so nothing here can block or reorder the tick loop.
"""
from __future__ import annotations

import asyncio
import threading
import time

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .engine import (
    InboxError,
    ShadowInput,
    Simulation,
    TerrainEditInput,
    UtteranceInput,
)
from .world import Region

DEFAULT_TICK_RATE = 2.0  # live-mode wall clock ticks per second
STREAM_POLL_SECONDS = 0.05


class SimulationService:
    """Owns the tick thread; the HTTP layer reads through it."""

    def __init__(
        self,
        simulation: Simulation,
        max_ticks: int | None = None,
        headless: bool = False,
        tick_rate: float = DEFAULT_TICK_RATE,
    ):
        self.simulation = simulation
        self.max_ticks = max_ticks
        self.headless = headless
        self.tick_rate = tick_rate
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def start(self) -> None:
        if self._thread is not None:
            return
        self._thread = threading.Thread(target=self._run, name="llmscape-ticks", daemon=True)
        self._thread.start()

    def _run(self) -> None:
        ticks_done = 0
        interval = 1.0 / self.tick_rate if self.tick_rate > 0 else 0.0
        while not self._stop.is_set():
            if self.max_ticks is not None and ticks_done >= self.max_ticks:
                break
            started = time.monotonic()
            self.simulation.tick()
            ticks_done += 1
            if not self.headless and interval > 0:
                remaining = interval - (time.monotonic() - started)
                if remaining > 0:
                    self._stop.wait(remaining)

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None


class TerrainEditBody(BaseModel):
    x: int
    y: int
    width: int = Field(ge=1)
    height: int = Field(ge=1)
    delta: float


class UtteranceBody(BaseModel):
    speaker: str = "participant"
    text: str
    target_agent: str | None = None


class ShadowBody(BaseModel):
    mask: list[list[bool]]


def create_app(service: SimulationService) -> FastAPI:
    app = FastAPI(title="llmscape", docs_url=None, redoc_url=None)
    # The browser companion is served statically from anywhere on the desk.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    simulation = service.simulation

    @app.get("/state")
    def get_state() -> dict:
        return simulation.snapshot()

    @app.post("/terrain")
    def post_terrain(body: TerrainEditBody) -> JSONResponse:
        region = Region(body.x, body.y, body.width, body.height)
        try:
            order = simulation.enqueue_participant_input(TerrainEditInput(region, body.delta))
        except InboxError as err:
            return JSONResponse({"accepted": False, "error": str(err)}, status_code=400)
        return JSONResponse({"accepted": True, "order": order})

    @app.post("/utterance")
    def post_utterance(body: UtteranceBody) -> JSONResponse:
        try:
            order = simulation.enqueue_participant_input(
                UtteranceInput(body.speaker, body.text, body.target_agent)
            )
        except InboxError as err:
            return JSONResponse({"accepted": False, "error": str(err)}, status_code=400)
        return JSONResponse({"accepted": True, "order": order})

    @app.post("/shadow")
    def post_shadow(body: ShadowBody) -> JSONResponse:
        try:
            order = simulation.enqueue_participant_input(ShadowInput(body.mask))
        except InboxError as err:
            return JSONResponse({"accepted": False, "error": str(err)}, status_code=400)
        return JSONResponse({"accepted": True, "order": order})

    @app.get("/log/summary")
    def log_summary() -> dict:
        by_category: dict[str, int] = {}
        by_actor: dict[str, int] = {}
        by_action_kind: dict[str, int] = {}
        entries = simulation.log.entries()
        for entry in entries:
            by_category[entry.category.value] = by_category.get(entry.category.value, 0) + 1
            by_actor[entry.actor] = by_actor.get(entry.actor, 0) + 1
            if entry.category.value == "action":
                kind = entry.payload.get("kind", "?")
                by_action_kind[kind] = by_action_kind.get(kind, 0) + 1
        return {
            "total": len(entries),
            "by_category": dict(sorted(by_category.items())),
            "by_actor": dict(sorted(by_actor.items())),
            "by_action_kind": dict(sorted(by_action_kind.items())),
        }

    @app.websocket("/events")
    async def events(websocket: WebSocket, since: int = 0) -> None:
        await websocket.accept()
        cursor = max(0, since)
        try:
            while True:
                entries = simulation.log.entries_since(cursor)
                if entries:
                    for entry in entries:
                        await websocket.send_text(entry.render())
                    cursor = entries[-1].seq
                else:
                    await asyncio.sleep(STREAM_POLL_SECONDS)
        except WebSocketDisconnect:
            return

    return app


def serve(
    service: SimulationService,
    host: str = "127.0.0.1",
    port: int = 8600,
) -> None:
    """Blocking: start the tick thread and serve HTTP until interrupted."""
    import uvicorn

    app = create_app(service)
    service.start()
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        service.stop()
