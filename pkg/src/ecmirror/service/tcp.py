"""Framed TCP transport for edge nodes, plus a small blocking client."""

from __future__ import annotations

import asyncio
import logging
import socket
import struct

from .core import CloudService
from .protocol import MAX_FRAME_BYTES, decode_envelope, encode_frame, make_error

logger = logging.getLogger(__name__)


async def handle_connection(service: CloudService, reader, writer) -> None:
    peer = writer.get_extra_info("peername")
    try:
        while True:
            try:
                header = await reader.readexactly(4)
            except asyncio.IncompleteReadError:
                break
            (length,) = struct.unpack("!I", header)
            if length > MAX_FRAME_BYTES:
                # still answer before dropping: the stream is unrecoverable
                writer.write(encode_frame(make_error(f"frame too large ({length})", code="malformed")))
                await writer.drain()
                break
            try:
                data = await reader.readexactly(length)
            except asyncio.IncompleteReadError:
                break
            writer.write(encode_frame(service.handle_frame(data)))
            await writer.drain()
    except ConnectionError:
        pass
    finally:
        writer.close()
        try:
            await writer.wait_closed()
        except ConnectionError:
            pass
        logger.debug("connection from %s closed", peer)


async def start_tcp_server(service: CloudService, host: str, port: int):
    return await asyncio.start_server(
        lambda r, w: handle_connection(service, r, w), host, port
    )


class FrameClient:
    """Blocking request/response client over the framed protocol."""

    def __init__(self, host: str, port: int, timeout: float = 10.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)

    def request(self, env: dict) -> dict:
        self.sock.sendall(encode_frame(env))
        header = self._read_exactly(4)
        (length,) = struct.unpack("!I", header)
        return decode_envelope(self._read_exactly(length))

    def _read_exactly(self, n: int) -> bytes:
        chunks = []
        remaining = n
        while remaining:
            chunk = self.sock.recv(remaining)
            if not chunk:
                raise ConnectionError("server closed the connection")
            chunks.append(chunk)
            remaining -= len(chunk)
        return b"".join(chunks)

    def close(self) -> None:
        self.sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
