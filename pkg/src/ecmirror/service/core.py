"""Cloud-side service core: registry, request dispatch, round scheduling.

Transport-agnostic and single-threaded by contract: the TCP server, the
HTTP/WebSocket layer, and the round scheduler all call into this object
from one event loop, which gives linearizable request handling and atomic
version publication for free. Every request envelope gets exactly one
response envelope; malformed input gets an error envelope, never silence.
"""

from __future__ import annotations

import logging
import re
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..edge import TRANS_BLEACHED
from ..voltage import tap_to_volts
from ..ensemble import EnsembleModel, model_to_text
from ..federation import (
    FederationConfig,
    FederationError,
    FederationHub,
    GlobalModel,
    NodeUpdate,
    ParamVector,
    apply_params,
    extract_params,
)
from .protocol import PROTOCOL_VERSION, decode_envelope, make_envelope, make_error
from .storage import EventLog

logger = logging.getLogger(__name__)

NODE_ID_PATTERN = re.compile(r"^[A-Za-z0-9_.:-]{1,64}$")

VALID_ACTIONS = ("set_mode", "manual_tap")


@dataclass
class NodeRecord:
    node_id: str
    registered_at: float
    last_seen: float
    mode: str = "unknown"
    tap: int = 0
    transmittance: float = TRANS_BLEACHED
    last_score: float = 0.0
    last_rating: int = 9
    before_score: float = 0.0
    before_rating: int = 9
    usage_count: int = 0
    total_usage: int = 0
    rounds_participated: int = 0

    def to_dict(self, staleness: int) -> dict:
        return {
            "node_id": self.node_id,
            "registered_at": self.registered_at,
            "last_seen": self.last_seen,
            "staleness": staleness,
            "mode": self.mode,
            "tap": self.tap,
            "volts": tap_to_volts(self.tap),
            "transmittance": self.transmittance,
            "last_score": self.last_score,
            "last_rating": self.last_rating,
            "before_score": self.before_score,
            "before_rating": self.before_rating,
            "usage_count": self.usage_count,
            "total_usage": self.total_usage,
            "rounds_participated": self.rounds_participated,
        }


class CloudService:
    """Registry + federation hub + command routing behind one dispatcher."""

    def __init__(
        self,
        bootstrap_model: EnsembleModel,
        cfg: FederationConfig = FederationConfig(),
        round_period_s: float = 10.0,
        storage: Optional[EventLog] = None,
        clock: Callable[[], float] = time.time,
    ):
        self.bootstrap_model = bootstrap_model
        self.cfg = cfg
        self.round_period_s = round_period_s
        self.storage = storage
        self.clock = clock
        self.hub = FederationHub.bootstrap(extract_params(bootstrap_model), cfg, created_at=clock())
        self.registry: dict[str, NodeRecord] = {}
        self.commands: dict[str, list] = {}
        self.last_round_at = clock()
        self.rounds_run = 0
        self._last_push_seq = 0
        self._model_text_cache: dict[int, str] = {}

    # -- model materialization -------------------------------------------

    def model_for_version(self, version: GlobalModel) -> str:
        text = self._model_text_cache.get(version.version)
        if text is None:
            full = apply_params(self.bootstrap_model, version.params)
            text = model_to_text(full)
            self._model_text_cache = {version.version: text}  # only the latest is pulled
        return text

    # -- request handlers --------------------------------------------------

    def handle_register(self, payload: dict) -> dict:
        node_id = payload.get("node_id")
        if not isinstance(node_id, str) or not NODE_ID_PATTERN.match(node_id):
            raise ProtocolViolation("malformed node_id")
        now = self.clock()
        record = self.registry.get(node_id)
        if record is None:
            self.registry[node_id] = NodeRecord(node_id=node_id, registered_at=now, last_seen=now)
            self.hub.register(node_id)
        else:
            record.last_seen = now
        return {"node_id": node_id, "version": self.hub.current.version}

    def _require_registered(self, payload: dict) -> NodeRecord:
        node_id = payload.get("node_id")
        record = self.registry.get(node_id) if isinstance(node_id, str) else None
        if record is None:
            raise ProtocolViolation(f"node {node_id!r} is not registered", code="unregistered")
        record.last_seen = self.clock()
        return record

    def handle_push_update(self, payload: dict) -> dict:
        record = self._require_registered(payload)
        expected = self.hub.current.params.schema
        if payload.get("schema") != expected:
            raise ProtocolViolation(
                f"schema mismatch, expected {expected}", code="schema-mismatch"
            )
        try:
            params = ParamVector(np.array(payload["params"], dtype=float), expected)
            update = NodeUpdate(
                node_id=record.node_id,
                params=params,
                usage_count=int(payload.get("usage_count", 0)),
                staleness=0,
                mean_error=float(payload.get("mean_error", 0.0)),
            )
        except (KeyError, TypeError, ValueError, FederationError) as exc:
            raise ProtocolViolation(f"invalid update: {exc}") from exc
        if len(params) != len(self.hub.current.params):
            raise ProtocolViolation(
                f"parameter vector length {len(params)} != {len(self.hub.current.params)}",
                code="schema-mismatch",
            )
        self.hub.submit(update)
        seq = 0
        if self.storage is not None:
            seq = self.storage.append_push(update, received_at=self.clock())
        self._last_push_seq = seq
        return {"queued": True, "seq": seq}

    def handle_pull_model(self, payload: dict) -> dict:
        self._require_registered(payload)
        current = self.hub.current
        return {
            "version": current.version,
            "schema": current.params.schema,
            "params": [float(v) for v in current.params.values],
            "bootstrap": current.version == 0,
            "model": self.model_for_version(current),
        }

    def handle_status(self, payload: dict) -> dict:
        now = self.clock()
        return {
            "version": self.hub.current.version,
            "round_period_s": self.round_period_s,
            "next_round_s": max(0.0, self.last_round_at + self.round_period_s - now),
            "rounds_run": self.rounds_run,
            "pending_updates": len(self.hub.pending),
            "nodes": [
                record.to_dict(self.hub.staleness.get(node_id, 0))
                for node_id, record in sorted(self.registry.items())
            ],
        }

    def handle_report(self, payload: dict) -> dict:
        record = self._require_registered(payload)
        record.mode = str(payload.get("mode", record.mode))
        record.tap = int(payload.get("tap", record.tap))
        record.transmittance = float(payload.get("transmittance", record.transmittance))
        record.last_score = float(payload.get("score", record.last_score))
        record.last_rating = int(payload.get("rating", record.last_rating))
        record.before_score = float(payload.get("before_score", record.before_score))
        record.before_rating = int(payload.get("before_rating", record.before_rating))
        record.usage_count = int(payload.get("usage_count", record.usage_count))
        return {"commands": self.commands.pop(record.node_id, [])}

    def handle_command(self, payload: dict) -> dict:
        record = self._require_registered(payload)
        action = payload.get("action")
        if action not in VALID_ACTIONS:
            raise ProtocolViolation(f"unknown action {action!r}")
        command = {"action": action}
        if action == "set_mode":
            mode = payload.get("mode")
            if mode not in ("auto", "manual"):
                raise ProtocolViolation(f"mode must be auto or manual, got {mode!r}")
            command["mode"] = mode
        else:
            tap = payload.get("tap")
            if not isinstance(tap, int) or not 0 <= tap <= 127:
                raise ProtocolViolation(f"tap {tap!r} outside 0..127")
            command["tap"] = tap
        self.commands.setdefault(record.node_id, []).append(command)
        return {"queued": True, "node_id": record.node_id}

    # -- dispatch ----------------------------------------------------------

    _HANDLERS = {
        "register": handle_register,
        "push_update": handle_push_update,
        "pull_model": handle_pull_model,
        "status": handle_status,
        "report": handle_report,
        "command": handle_command,
    }

    def handle_envelope(self, env: dict) -> dict:
        req_id = env.get("id") if isinstance(env, dict) else None
        if not isinstance(env, dict) or not isinstance(env.get("type"), str):
            return make_error("missing or invalid type", code="malformed", req_id=req_id)
        if env.get("v") != PROTOCOL_VERSION:
            return make_error(
                f"unsupported protocol version {env.get('v')!r}",
                code="unsupported-version",
                req_id=req_id,
            )
        handler = self._HANDLERS.get(env["type"])
        if handler is None:
            return make_error(f"unknown type {env['type']!r}", code="unknown-type", req_id=req_id)
        payload = env.get("payload")
        if not isinstance(payload, dict):
            return make_error("payload must be an object", code="malformed", req_id=req_id)
        try:
            result = handler(self, payload)
        except ProtocolViolation as exc:
            return make_error(str(exc), code=exc.code, req_id=req_id)
        except Exception as exc:  # total dispatch: never drop a request
            logger.exception("handler failure for %s", env["type"])
            return make_error(f"internal error: {exc}", code="internal", req_id=req_id)
        response_type = {"pull_model": "model", "status": "status"}.get(env["type"], "ack")
        return make_envelope(response_type, result, req_id=req_id)

    def handle_frame(self, data: bytes) -> dict:
        """Bytes in, response envelope out; undecodable bytes get an error."""
        try:
            env = decode_envelope(data)
        except ValueError as exc:
            return make_error(str(exc), code="malformed")
        return self.handle_envelope(env)

    # -- rounds --------------------------------------------------------

    def run_round(self) -> Optional[GlobalModel]:
        """Execute one federation round; None when skipped (quorum or unusable)."""
        self.last_round_at = self.clock()
        seq_upto = self._last_push_seq
        participants = list(self.hub.pending.keys())
        try:
            published = self.hub.run_round(now=self.clock())
        except FederationError as exc:
            logger.warning("round failed: %s", exc)
            self.hub.pending.clear()
            return None
        if published is None:
            logger.info("round skipped: %d pending < quorum %d", len(participants), self.cfg.min_nodes)
            return None

        self.rounds_run += 1
        for prov in published.provenance:
            record = self.registry.get(prov.node_id)
            if record is not None:
                record.total_usage += prov.usage_count
                record.rounds_participated += 1
        if self.storage is not None:
            self.storage.append_version(published, seq_upto=seq_upto, cfg=self.cfg)
        logger.info(
            "published version %d from %d nodes (%s)",
            published.version,
            len(published.provenance),
            self.hub.last_outcome,
        )
        return published


class ProtocolViolation(Exception):
    def __init__(self, message: str, code: str = "invalid"):
        super().__init__(message)
        self.code = code
