"""Cloud service: framed TCP protocol, HTTP/WebSocket bridge, round scheduler."""

from .core import CloudService, NodeRecord, ProtocolViolation
from .protocol import (
    MAX_FRAME_BYTES,
    PROTOCOL_VERSION,
    FrameError,
    decode_envelope,
    decode_frame,
    encode_envelope,
    encode_frame,
    make_envelope,
    make_error,
)
from .storage import EventLog, ReplayMismatchError, replay_versions
from .tcp import FrameClient, start_tcp_server

__all__ = [
    "CloudService",
    "EventLog",
    "FrameClient",
    "FrameError",
    "MAX_FRAME_BYTES",
    "NodeRecord",
    "PROTOCOL_VERSION",
    "ProtocolViolation",
    "ReplayMismatchError",
    "decode_envelope",
    "decode_frame",
    "encode_envelope",
    "encode_frame",
    "make_envelope",
    "make_error",
    "replay_versions",
    "start_tcp_server",
]
