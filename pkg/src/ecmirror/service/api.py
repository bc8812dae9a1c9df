"""HTTP and WebSocket layer over the service core.

The REST endpoints wrap the same dispatcher the TCP transport uses, with
pydantic request/response models; the /ws endpoint bridges raw protocol
envelopes to browsers (payloads unchanged, browser sockets bring their own
framing). The operator dashboard is served as static files when built.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Query, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .core import CloudService
from .protocol import PROTOCOL_VERSION, make_envelope

FRONTEND_DIST = Path(__file__).resolve().parents[3] / "frontend" / "dist"


class RegisterRequest(BaseModel):
    node_id: str


class RegisterResponse(BaseModel):
    node_id: str
    version: int


class PushRequest(BaseModel):
    node_id: str
    params: list[float]
    schema_hash: str = Field(alias="schema")
    usage_count: int = 0
    mean_error: float = 0.0

    model_config = {"populate_by_name": True}


class PushResponse(BaseModel):
    queued: bool
    seq: int


class ModelResponse(BaseModel):
    version: int
    schema_hash: str = Field(alias="schema")
    params: list[float]
    bootstrap: bool
    model: str

    model_config = {"populate_by_name": True, "protected_namespaces": ()}


class NodeStatus(BaseModel):
    node_id: str
    registered_at: float
    last_seen: float
    staleness: int
    mode: str
    tap: int
    volts: float
    transmittance: float
    last_score: float
    last_rating: int
    before_score: float
    before_rating: int
    usage_count: int
    total_usage: int
    rounds_participated: int


class StatusResponse(BaseModel):
    version: int
    round_period_s: float
    next_round_s: float
    rounds_run: int
    pending_updates: int
    nodes: list[NodeStatus]


class ReportRequest(BaseModel):
    node_id: str
    mode: Optional[str] = None
    tap: Optional[int] = None
    transmittance: Optional[float] = None
    score: Optional[float] = None
    rating: Optional[int] = None
    before_score: Optional[float] = None
    before_rating: Optional[int] = None
    usage_count: Optional[int] = None


class ReportResponse(BaseModel):
    commands: list[dict]


class CommandRequest(BaseModel):
    node_id: str
    action: str
    mode: Optional[str] = None
    tap: Optional[int] = None


class CommandResponse(BaseModel):
    queued: bool
    node_id: str


class ConfigResponse(BaseModel):
    refresh_interval_ms: int
    round_period_s: float
    protocol_version: int


def _dispatch(service: CloudService, msg_type: str, payload: dict) -> dict:
    response = service.handle_envelope(make_envelope(msg_type, payload))
    if response["type"] == "error":
        raise HTTPException(status_code=400, detail=response["payload"])
    return response["payload"]


def create_app(service: CloudService, refresh_interval_ms: int = 1000) -> FastAPI:
    app = FastAPI(title="ecmirror fleet service")

    @app.post("/api/register", response_model=RegisterResponse)
    def register(req: RegisterRequest):
        return _dispatch(service, "register", req.model_dump())

    @app.post("/api/push", response_model=PushResponse)
    def push(req: PushRequest):
        return _dispatch(service, "push_update", req.model_dump(by_alias=True))

    @app.get("/api/model", response_model=ModelResponse)
    def pull_model(node_id: str = Query(...)):
        return _dispatch(service, "pull_model", {"node_id": node_id})

    @app.get("/api/status", response_model=StatusResponse)
    def status():
        return _dispatch(service, "status", {})

    @app.post("/api/report", response_model=ReportResponse)
    def report(req: ReportRequest):
        payload = {k: v for k, v in req.model_dump().items() if v is not None}
        return _dispatch(service, "report", payload)

    @app.post("/api/command", response_model=CommandResponse)
    def command(req: CommandRequest):
        payload = {k: v for k, v in req.model_dump().items() if v is not None}
        return _dispatch(service, "command", payload)

    @app.get("/api/config", response_model=ConfigResponse)
    def config():
        return ConfigResponse(
            refresh_interval_ms=refresh_interval_ms,
            round_period_s=service.round_period_s,
            protocol_version=PROTOCOL_VERSION,
        )

    @app.websocket("/ws")
    async def ws_bridge(ws: WebSocket):
        await ws.accept()
        try:
            while True:
                text = await ws.receive_text()
                response = service.handle_frame(text.encode("utf-8"))
                await ws.send_text(json.dumps(response, separators=(",", ":")))
        except WebSocketDisconnect:
            pass

    @app.exception_handler(HTTPException)
    async def protocol_error_handler(request, exc: HTTPException):
        return JSONResponse(status_code=exc.status_code, content={"detail": exc.detail})

    if FRONTEND_DIST.is_dir():
        app.mount("/", StaticFiles(directory=FRONTEND_DIST, html=True), name="dashboard")

    return app
