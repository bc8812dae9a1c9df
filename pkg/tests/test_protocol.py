import json
import struct

import pytest

from ecmirror.service.protocol import (
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


def test_envelope_shape():
    env = make_envelope("status", {}, req_id=42)
    assert env == {"type": "status", "v": PROTOCOL_VERSION, "id": 42, "payload": {}}


def test_request_ids_unique_when_not_given():
    a = make_envelope("status", {})
    b = make_envelope("status", {})
    assert a["id"] != b["id"]


def test_frame_round_trip():
    env = make_envelope("register", {"node_id": "n1"}, req_id="abc")
    frame = encode_frame(env)
    assert frame[:4] == struct.pack("!I", len(frame) - 4)
    decoded, rest = decode_frame(frame)
    assert decoded == env
    assert rest == b""


def test_frame_split_leaves_remainder():
    a = encode_frame(make_envelope("status", {}, req_id=1))
    b = encode_frame(make_envelope("status", {}, req_id=2))
    first, rest = decode_frame(a + b)
    assert first["id"] == 1
    second, rest = decode_frame(rest)
    assert second["id"] == 2
    assert rest == b""


def test_incomplete_frames_rejected():
    frame = encode_frame(make_envelope("status", {}, req_id=1))
    with pytest.raises(FrameError):
        decode_frame(frame[:3])
    with pytest.raises(FrameError):
        decode_frame(frame[:-1])


def test_oversized_declared_length_rejected():
    with pytest.raises(FrameError):
        decode_frame(struct.pack("!I", MAX_FRAME_BYTES + 1) + b"x")


def test_non_json_payload_rejected():
    with pytest.raises(FrameError):
        decode_envelope(b"\xff\xfe garbage")
    with pytest.raises(FrameError):
        decode_envelope(b"[1, 2, 3]")


def test_error_envelope_carries_code_and_id():
    env = make_error("nope", code="unregistered", req_id=7)
    assert env["type"] == "error"
    assert env["id"] == 7
    assert env["payload"]["code"] == "unregistered"


def test_encode_envelope_is_compact_json():
    data = encode_envelope(make_envelope("status", {}, req_id=1))
    assert b" " not in data
    assert json.loads(data)["type"] == "status"
