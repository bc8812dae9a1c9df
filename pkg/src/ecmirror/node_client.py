"""A simulated edge node running as a client against the cloud service.

Registers, pulls the current global model, then ticks through a glare
scenario: auto-adjusting (or holding a manual tap), reporting telemetry,
applying operator commands that arrive piggybacked on report acks, training
locally once enough override samples accumulate, and pushing the resulting
update. Pulls refresh the local model whenever the published version moves.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

from .edge import (
    CONTROL_TICK_S,
    GlareScenario,
    NodeMode,
    NodeState,
    attenuate_reading,
    auto_adjust,
    default_scenarios,
    device_step,
    local_train,
    manual_override,
)
from .ensemble import model_from_text
from .glare import assess
from .service.protocol import make_envelope
from .service.tcp import FrameClient

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NodeClientConfig:
    node_id: str
    host: str = "127.0.0.1"
    port: int = 8700
    scenario_id: int = 2
    duration_s: float = 60.0
    dt_s: float = CONTROL_TICK_S
    time_scale: float = 0.1  # real seconds per simulated second
    report_every_ticks: int = 1
    pull_every_ticks: int = 8
    min_train_samples: int = 8
    fine_tune_epochs: int = 200
    seed: int = 0


class NodeClient:
    def __init__(self, cfg: NodeClientConfig, scenario: GlareScenario | None = None):
        self.cfg = cfg
        if scenario is None:
            by_id = {s.scenario_id: s for s in default_scenarios(duration_s=cfg.duration_s)}
            scenario = by_id.get(cfg.scenario_id, next(iter(by_id.values())))
        self.scenario = scenario
        self.client = FrameClient(cfg.host, cfg.port)
        self.version = -1
        self.node: NodeState | None = None

    def _request(self, msg_type: str, payload: dict) -> dict:
        response = self.client.request(make_envelope(msg_type, payload))
        if response["type"] == "error":
            raise RuntimeError(f"{msg_type} rejected: {response['payload']}")
        return response["payload"]

    def connect(self) -> None:
        self._request("register", {"node_id": self.cfg.node_id})
        self._refresh_model(force=True)

    def _refresh_model(self, force: bool = False) -> None:
        payload = self._request("pull_model", {"node_id": self.cfg.node_id})
        if force or payload["version"] != self.version:
            model = model_from_text(payload["model"])
            if self.node is None:
                self.node = NodeState(
                    node_id=self.cfg.node_id,
                    model=model,
                    min_train_samples=self.cfg.min_train_samples,
                )
            else:
                self.node.model = model
            self.version = payload["version"]
            logger.info("%s: model version %d installed", self.cfg.node_id, self.version)

    def _apply_command(self, command: dict) -> None:
        action = command.get("action")
        try:
            if action == "set_mode":
                self.node.mode = NodeMode(command["mode"])
            elif action == "manual_tap":
                manual_override(self.node, command["tap"])
            else:
                logger.warning("%s: ignoring unknown command %r", self.cfg.node_id, command)
        except (ValueError, KeyError) as exc:
            logger.warning("%s: command %r rejected: %s", self.cfg.node_id, command, exc)

    def _report(self, before, after) -> None:
        payload = self._request(
            "report",
            {
                "node_id": self.cfg.node_id,
                "mode": self.node.mode.value,
                "tap": self.node.device.applied.tap,
                "transmittance": self.node.device.transmittance,
                "score": after.topsis_score,
                "rating": after.rating,
                "before_score": before.topsis_score,
                "before_rating": before.rating,
                "usage_count": self.node.usage_count,
            },
        )
        for command in payload.get("commands", []):
            self._apply_command(command)

    def _maybe_train_and_push(self) -> None:
        update = local_train(
            self.node, fine_tune_epochs=self.cfg.fine_tune_epochs, seed=self.cfg.seed
        )
        if update is None:
            return
        self._request(
            "push_update",
            {
                "node_id": update.node_id,
                "params": [float(v) for v in update.params.values],
                "schema": update.params.schema,
                "usage_count": update.usage_count,
                "mean_error": update.mean_error,
            },
        )
        logger.info("%s: pushed update (usage %d)", self.cfg.node_id, update.usage_count)

    def run(self) -> None:
        self.connect()
        rng = np.random.default_rng(self.cfg.seed)
        t = 0.0
        tick = 0
        while t < self.cfg.duration_s:
            reading = self.scenario.reading_at(t, rng)
            self.node.last_reading = reading
            before = assess(reading, self.node.calibration)
            if self.node.mode is NodeMode.AUTO:
                auto_adjust(self.node, reading)
            self.node.device = device_step(self.node.device, self.cfg.dt_s)
            after = assess(
                attenuate_reading(reading, self.node.device.transmittance),
                self.node.calibration,
            )
            if tick % self.cfg.report_every_ticks == 0:
                self._report(before, after)
            self._maybe_train_and_push()
            if tick % self.cfg.pull_every_ticks == 0 and tick > 0:
                self._refresh_model()
            if self.cfg.time_scale > 0:
                time.sleep(self.cfg.dt_s * self.cfg.time_scale)
            t += self.cfg.dt_s
            tick += 1
        self.client.close()
