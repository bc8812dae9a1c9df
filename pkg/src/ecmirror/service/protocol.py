"""Wire protocol: length-prefixed frames carrying typed JSON envelopes.

A frame is a 4-byte big-endian payload length followed by UTF-8 JSON:
{"type": ..., "v": 1, "id": ..., "payload": {...}}. The same payloads
travel unchanged over the browser socket bridge, which has its own framing.
Every request envelope yields exactly one response carrying the same id.
"""

from __future__ import annotations

import itertools
import json
import struct

PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 1 << 20

REQUEST_TYPES = ("register", "push_update", "pull_model", "status", "report", "command")
RESPONSE_TYPES = ("ack", "model", "status", "error")

_request_ids = itertools.count(1)


class FrameError(ValueError):
    pass


def make_envelope(msg_type: str, payload: dict, req_id=None) -> dict:
    return {
        "type": msg_type,
        "v": PROTOCOL_VERSION,
        "id": next(_request_ids) if req_id is None else req_id,
        "payload": payload,
    }


def make_error(message: str, code: str = "invalid", req_id=None) -> dict:
    return make_envelope("error", {"code": code, "message": message}, req_id=req_id)


def encode_envelope(env: dict) -> bytes:
    return json.dumps(env, separators=(",", ":")).encode("utf-8")


def decode_envelope(data: bytes) -> dict:
    try:
        env = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FrameError(f"undecodable payload: {exc}") from exc
    if not isinstance(env, dict):
        raise FrameError("envelope must be a JSON object")
    return env


def encode_frame(env: dict) -> bytes:
    data = encode_envelope(env)
    if len(data) > MAX_FRAME_BYTES:
        raise FrameError(f"frame of {len(data)} bytes exceeds {MAX_FRAME_BYTES}")
    return struct.pack("!I", len(data)) + data


def decode_frame(buffer: bytes) -> tuple[dict, bytes]:
    """Split one frame off the buffer; returns (envelope, remainder)."""
    if len(buffer) < 4:
        raise FrameError("incomplete length prefix")
    (length,) = struct.unpack("!I", buffer[:4])
    if length > MAX_FRAME_BYTES:
        raise FrameError(f"declared length {length} exceeds {MAX_FRAME_BYTES}")
    if len(buffer) < 4 + length:
        raise FrameError("incomplete frame body")
    return decode_envelope(buffer[4 : 4 + length]), buffer[4 + length :]
