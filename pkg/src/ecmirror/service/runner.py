"""Run the HTTP app, the framed TCP listener, and the round scheduler together."""

from __future__ import annotations

import asyncio
import logging

import uvicorn

from .api import create_app
from .core import CloudService
from .tcp import start_tcp_server

logger = logging.getLogger(__name__)


async def round_scheduler(service: CloudService, period_s: float) -> None:
    while True:
        await asyncio.sleep(period_s)
        try:
            service.run_round()
        except Exception:
            logger.exception("round crashed; service continues")


async def serve_forever(
    service: CloudService,
    host: str = "127.0.0.1",
    http_port: int = 8000,
    tcp_port: int = 8700,
    log_level: str = "warning",
) -> None:
    app = create_app(service)
    tcp_server = await start_tcp_server(service, host, tcp_port)
    scheduler = asyncio.create_task(round_scheduler(service, service.round_period_s))
    config = uvicorn.Config(app, host=host, port=http_port, log_level=log_level, lifespan="on")
    http_server = uvicorn.Server(config)
    logger.info("listening: http %s:%d, tcp %s:%d", host, http_port, host, tcp_port)
    try:
        await http_server.serve()
    finally:
        scheduler.cancel()
        tcp_server.close()
        await tcp_server.wait_closed()
