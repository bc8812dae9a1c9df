import asyncio
import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from ecmirror.ensemble import model_from_text, stack_predict
from ecmirror.federation import FederationConfig, extract_params
from ecmirror.service.api import create_app
from ecmirror.service.core import CloudService
from ecmirror.service.protocol import make_envelope
from ecmirror.service.storage import EventLog, replay_versions
from ecmirror.service.tcp import FrameClient, start_tcp_server


class FakeClock:
    def __init__(self, start=1000.0):
        self.now = start

    def __call__(self):
        return self.now

    def advance(self, dt):
        self.now += dt


@pytest.fixture()
def service(trained_model, tmp_path):
    return CloudService(
        bootstrap_model=trained_model,
        cfg=FederationConfig(decay=0.9, correction=0.1, min_nodes=1),
        round_period_s=5.0,
        storage=EventLog(tmp_path / "logs"),
        clock=FakeClock(),
    )


def rpc(service, msg_type, payload, req_id=None):
    return service.handle_envelope(make_envelope(msg_type, payload, req_id=req_id))


def push_payload(service, node_id, usage=1, err=0.1, scale=1.0):
    params = extract_params(service.bootstrap_model)
    return {
        "node_id": node_id,
        "params": [float(v) * scale for v in params.values],
        "schema": params.schema,
        "usage_count": usage,
        "mean_error": err,
    }


class TestRegister:
    def test_fresh_registration(self, service):
        resp = rpc(service, "register", {"node_id": "node-1"}, req_id=5)
        assert resp["type"] == "ack"
        assert resp["id"] == 5
        assert resp["payload"]["version"] == 0
        assert len(service.registry) == 1

    def test_duplicate_is_idempotent(self, service):
        rpc(service, "register", {"node_id": "node-1"})
        rpc(service, "register", {"node_id": "node-1"})
        assert len(service.registry) == 1

    def test_malformed_id_rejected(self, service):
        resp = rpc(service, "register", {"node_id": "bad id!"})
        assert resp["type"] == "error"
        resp = rpc(service, "register", {"node_id": ""})
        assert resp["type"] == "error"
        resp = rpc(service, "register", {})
        assert resp["type"] == "error"

    def test_fresh_node_sees_latest_version(self, service):
        rpc(service, "register", {"node_id": "a"})
        rpc(service, "push_update", push_payload(service, "a"))
        service.run_round()
        resp = rpc(service, "register", {"node_id": "b"})
        assert resp["payload"]["version"] == 1


class TestPush:
    def test_push_requires_registration(self, service):
        resp = rpc(service, "push_update", push_payload(service, "ghost"))
        assert resp["type"] == "error"
        assert resp["payload"]["code"] == "unregistered"

    def test_schema_mismatch_reports_expected(self, service):
        rpc(service, "register", {"node_id": "a"})
        payload = push_payload(service, "a")
        payload["schema"] = "wrong"
        resp = rpc(service, "push_update", payload)
        assert resp["payload"]["code"] == "schema-mismatch"
        assert service.hub.current.params.schema in resp["payload"]["message"]

    def test_wrong_length_rejected(self, service):
        rpc(service, "register", {"node_id": "a"})
        payload = push_payload(service, "a")
        payload["params"] = payload["params"][:-2]
        resp = rpc(service, "push_update", payload)
        assert resp["payload"]["code"] == "schema-mismatch"

    def test_last_write_wins_within_round(self, service):
        rpc(service, "register", {"node_id": "a"})
        rpc(service, "push_update", push_payload(service, "a", usage=1))
        rpc(service, "push_update", push_payload(service, "a", usage=9))
        published = service.run_round()
        assert len(published.provenance) == 1
        assert published.provenance[0].usage_count == 9

    def test_provenance_matches_pushed_update(self, service):
        rpc(service, "register", {"node_id": "a"})
        rpc(service, "push_update", push_payload(service, "a", usage=4, err=0.25))
        published = service.run_round()
        prov = published.provenance[0]
        assert (prov.node_id, prov.usage_count, prov.mean_error) == ("a", 4, 0.25)
        logged = service.storage.read_versions()[-1]["provenance"][0]
        assert logged["usage_count"] == 4


class TestPullModel:
    def test_bootstrap_flagged(self, service):
        rpc(service, "register", {"node_id": "a"})
        resp = rpc(service, "pull_model", {"node_id": "a"})
        assert resp["type"] == "model"
        assert resp["payload"]["bootstrap"] is True
        assert resp["payload"]["version"] == 0

    def test_bootstrap_model_reproduces_initial_predictions(self, service, trained_model):
        rpc(service, "register", {"node_id": "a"})
        payload = rpc(service, "pull_model", {"node_id": "a"})["payload"]
        model = model_from_text(payload["model"])
        X = np.random.default_rng(0).uniform(0, 5, (40, 2))
        assert np.array_equal(stack_predict(model, X), stack_predict(trained_model, X))

    def test_repeat_pull_identical_bytes(self, service):
        rpc(service, "register", {"node_id": "a"})
        first = rpc(service, "pull_model", {"node_id": "a"})["payload"]
        second = rpc(service, "pull_model", {"node_id": "a"})["payload"]
        assert first == second

    def test_pull_after_round_tracks_version(self, service):
        rpc(service, "register", {"node_id": "a"})
        rpc(service, "push_update", push_payload(service, "a", scale=0.5))
        service.run_round()
        payload = rpc(service, "pull_model", {"node_id": "a"})["payload"]
        assert payload["version"] == 1
        assert payload["bootstrap"] is False


class TestStatusAndCommands:
    def test_empty_registry_status(self, service):
        payload = rpc(service, "status", {})["payload"]
        assert payload["nodes"] == []
        assert payload["version"] == 0

    def test_status_round_trips_through_json(self, service):
        rpc(service, "register", {"node_id": "a"})
        rpc(service, "report", {"node_id": "a", "mode": "auto", "tap": 40,
                                "transmittance": 0.5, "score": 0.3, "rating": 4,
                                "usage_count": 2})
        payload = rpc(service, "status", {})["payload"]
        assert json.loads(json.dumps(payload)) == payload
        node = payload["nodes"][0]
        assert (node["mode"], node["tap"], node["usage_count"]) == ("auto", 40, 2)

    def test_command_queued_and_drained_by_report(self, service):
        rpc(service, "register", {"node_id": "a"})
        resp = rpc(service, "command", {"node_id": "a", "action": "manual_tap", "tap": 100})
        assert resp["payload"]["queued"] is True
        commands = rpc(service, "report", {"node_id": "a"})["payload"]["commands"]
        assert commands == [{"action": "manual_tap", "tap": 100}]
        # drained: a second report sees nothing
        assert rpc(service, "report", {"node_id": "a"})["payload"]["commands"] == []

    def test_command_validation(self, service):
        rpc(service, "register", {"node_id": "a"})
        assert rpc(service, "command", {"node_id": "a", "action": "explode"})["type"] == "error"
        assert rpc(service, "command", {"node_id": "a", "action": "manual_tap", "tap": 128})["type"] == "error"
        assert rpc(service, "command", {"node_id": "a", "action": "set_mode", "mode": "warp"})["type"] == "error"
        assert rpc(service, "command", {"node_id": "ghost", "action": "set_mode", "mode": "auto"})["type"] == "error"


class TestRounds:
    def test_no_pushes_version_unchanged(self, service):
        assert service.run_round() is None
        assert service.hub.current.version == 0

    def test_one_push_increments_by_one(self, service):
        rpc(service, "register", {"node_id": "a"})
        rpc(service, "push_update", push_payload(service, "a"))
        assert service.run_round().version == 1
        assert service.run_round() is None  # nothing new queued
        assert service.hub.current.version == 1

    def test_versions_gap_free_in_log(self, service):
        rpc(service, "register", {"node_id": "a"})
        for i in range(4):
            rpc(service, "push_update", push_payload(service, "a", usage=i + 1))
            service.run_round()
        versions = [rec["version"] for rec in service.storage.read_versions()]
        assert versions == [1, 2, 3, 4]

    def test_all_zero_usage_round_fails_cleanly(self, service):
        rpc(service, "register", {"node_id": "a"})
        rpc(service, "push_update", push_payload(service, "a", usage=0))
        assert service.run_round() is None
        assert service.hub.current.version == 0
        assert service.hub.pending == {}


class TestDispatchTotality:
    def test_unknown_type(self, service):
        resp = rpc(service, "teleport", {})
        assert resp["type"] == "error"
        assert resp["payload"]["code"] == "unknown-type"

    def test_wrong_protocol_version(self, service):
        env = make_envelope("status", {})
        env["v"] = 99
        resp = service.handle_envelope(env)
        assert resp["payload"]["code"] == "unsupported-version"

    def test_missing_payload(self, service):
        resp = service.handle_envelope({"type": "status", "v": 1, "id": 1})
        assert resp["payload"]["code"] == "malformed"

    def test_undecodable_frame_bytes(self, service):
        resp = service.handle_frame(b"\xff\x00 not json")
        assert resp["type"] == "error"
        assert resp["payload"]["code"] == "malformed"


class TestReplay:
    def test_replay_reproduces_versions_bit_exactly(self, service, tmp_path):
        rng = np.random.default_rng(3)
        for node in ("a", "b", "c"):
            rpc(service, "register", {"node_id": node})
        for round_idx in range(5):
            for node in ("a", "b", "c"):
                if rng.uniform() < 0.7:
                    rpc(
                        service,
                        "push_update",
                        push_payload(
                            service, node,
                            usage=int(rng.integers(1, 5)),
                            err=float(rng.uniform(0.01, 0.4)),
                            scale=float(rng.uniform(0.5, 1.5)),
                        ),
                    )
            service.run_round()
        stored = service.storage.read_versions()
        assert len(stored) >= 3
        recomputed = replay_versions(service.storage.root)
        assert [v for v, _ in recomputed] == [rec["version"] for rec in stored]


class TestHttpApi:
    @pytest.fixture()
    def client(self, service):
        return TestClient(create_app(service))

    def test_register_push_pull_status(self, service, client):
        assert client.post("/api/register", json={"node_id": "web-1"}).json()["version"] == 0
        push = push_payload(service, "web-1", usage=2)
        resp = client.post("/api/push", json=push)
        assert resp.status_code == 200 and resp.json()["queued"] is True
        service.run_round()
        model = client.get("/api/model", params={"node_id": "web-1"}).json()
        assert model["version"] == 1 and model["bootstrap"] is False
        status = client.get("/api/status").json()
        assert status["version"] == 1
        assert status["nodes"][0]["node_id"] == "web-1"

    def test_error_maps_to_400(self, client):
        resp = client.post("/api/push", json={
            "node_id": "ghost", "params": [1.0], "schema": "x",
        })
        assert resp.status_code == 400
        assert resp.json()["detail"]["code"] == "unregistered"

    def test_command_and_report_flow(self, client):
        client.post("/api/register", json={"node_id": "web-2"})
        resp = client.post("/api/command", json={"node_id": "web-2", "action": "set_mode", "mode": "manual"})
        assert resp.json()["queued"] is True
        report = client.post("/api/report", json={"node_id": "web-2", "mode": "auto", "tap": 3})
        assert report.json()["commands"] == [{"action": "set_mode", "mode": "manual"}]

    def test_config_endpoint(self, client):
        cfg = client.get("/api/config").json()
        assert cfg["round_period_s"] == 5.0

    def test_websocket_bridge_same_payloads(self, service, client):
        with client.websocket_connect("/ws") as ws:
            ws.send_text(json.dumps(make_envelope("register", {"node_id": "ws-1"}, req_id=11)))
            resp = json.loads(ws.receive_text())
            assert resp["type"] == "ack" and resp["id"] == 11
            ws.send_text(json.dumps(make_envelope("status", {}, req_id=12)))
            resp = json.loads(ws.receive_text())
            assert resp["type"] == "status"
            assert any(n["node_id"] == "ws-1" for n in resp["payload"]["nodes"])
            ws.send_text("garbage{{{")
            resp = json.loads(ws.receive_text())
            assert resp["type"] == "error"


class TestTcpTransport:
    def test_framed_round_trip_over_socket(self, service):
        async def scenario():
            server = await start_tcp_server(service, "127.0.0.1", 0)
            port = server.sockets[0].getsockname()[1]

            def client_calls():
                with FrameClient("127.0.0.1", port) as client:
                    resp = client.request(make_envelope("register", {"node_id": "tcp-1"}, req_id=1))
                    assert resp["type"] == "ack"
                    resp = client.request(make_envelope("status", {}, req_id=2))
                    assert resp["payload"]["nodes"][0]["node_id"] == "tcp-1"

            await asyncio.to_thread(client_calls)
            server.close()
            await server.wait_closed()

        asyncio.run(scenario())

    def test_oversized_frame_gets_error_then_close(self, service):
        import socket
        import struct

        async def scenario():
            server = await start_tcp_server(service, "127.0.0.1", 0)
            port = server.sockets[0].getsockname()[1]

            def client_calls():
                sock = socket.create_connection(("127.0.0.1", port), timeout=5)
                sock.sendall(struct.pack("!I", 1 << 30))
                header = sock.recv(4)
                (length,) = struct.unpack("!I", header)
                body = b""
                while len(body) < length:
                    body += sock.recv(length - len(body))
                resp = json.loads(body)
                assert resp["type"] == "error"
                sock.close()

            await asyncio.to_thread(client_calls)
            server.close()
            await server.wait_closed()

        asyncio.run(scenario())
