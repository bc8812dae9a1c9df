"""Append-only persistence for pushes and published model versions.

Two JSONL logs: one record per accepted parameter push, one per published
global-model version. A version record carries everything the aggregation
consumed (per-node staleness, the config, the snapshot boundary), so
replaying the push log reproduces every published parameter vector
bit-exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..federation import (
    FederationConfig,
    GlobalModel,
    NodeUpdate,
    ParamVector,
    aggregate,
    error_correct,
)

PUSHES_FILE = "pushes.log"
VERSIONS_FILE = "versions.log"


class ReplayMismatchError(RuntimeError):
    pass


def _read_jsonl(path: Path) -> list[dict]:
    if not path.exists():
        return []
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


class EventLog:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.pushes_path = self.root / PUSHES_FILE
        self.versions_path = self.root / VERSIONS_FILE
        existing = _read_jsonl(self.pushes_path)
        self._seq = existing[-1]["seq"] if existing else 0

    def _append(self, path: Path, record: dict) -> None:
        with path.open("a") as fh:
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")
            fh.flush()

    def append_push(self, update: NodeUpdate, received_at: float) -> int:
        self._seq += 1
        self._append(
            self.pushes_path,
            {
                "seq": self._seq,
                "at": received_at,
                "node_id": update.node_id,
                "params": [float(v) for v in update.params.values],
                "schema": update.params.schema,
                "usage_count": update.usage_count,
                "mean_error": update.mean_error,
            },
        )
        return self._seq

    def append_version(self, model: GlobalModel, seq_upto: int, cfg: FederationConfig) -> None:
        self._append(
            self.versions_path,
            {
                "version": model.version,
                "at": model.created_at,
                "seq_upto": seq_upto,
                "config": {
                    "decay": cfg.decay,
                    "correction": cfg.correction,
                    "min_nodes": cfg.min_nodes,
                },
                "schema": model.params.schema,
                "params": [float(v) for v in model.params.values],
                "provenance": [
                    {
                        "node_id": p.node_id,
                        "weight": p.weight,
                        "usage_count": p.usage_count,
                        "staleness": p.staleness,
                        "mean_error": p.mean_error,
                    }
                    for p in model.provenance
                ],
            },
        )

    def read_pushes(self) -> list[dict]:
        return _read_jsonl(self.pushes_path)

    def read_versions(self) -> list[dict]:
        return _read_jsonl(self.versions_path)


def replay_versions(root: str | Path) -> list[tuple[int, ParamVector]]:
    """Recompute every published version from the push log.

    Pushes replay in sequence order with last-write-wins per node up to each
    version's snapshot boundary; staleness and config come from the version
    record. Raises ReplayMismatchError on the first version whose recomputed
    parameters are not bit-identical to the persisted ones.
    """
    log = EventLog(root)
    pushes = log.read_pushes()
    versions = log.read_versions()

    recomputed = []
    cursor = 0
    pending: dict[str, dict] = {}
    for record in versions:
        while cursor < len(pushes) and pushes[cursor]["seq"] <= record["seq_upto"]:
            push = pushes[cursor]
            pending[push["node_id"]] = push
            cursor += 1

        staleness = {p["node_id"]: p["staleness"] for p in record["provenance"]}
        missing = set(staleness) - set(pending)
        if missing:
            raise ReplayMismatchError(f"version {record['version']}: no push for {sorted(missing)}")
        updates = [
            NodeUpdate(
                node_id=node_id,
                params=ParamVector(np.array(pending[node_id]["params"]), pending[node_id]["schema"]),
                usage_count=pending[node_id]["usage_count"],
                staleness=staleness[node_id],
                mean_error=pending[node_id]["mean_error"],
            )
            for node_id in staleness
        ]
        cfg = FederationConfig(**record["config"])
        theta = aggregate(updates, cfg)
        params = error_correct(theta, updates, cfg).params

        stored = np.array(record["params"])
        if not np.array_equal(params.values, stored):
            raise ReplayMismatchError(f"version {record['version']}: replay diverged")
        recomputed.append((record["version"], params))
        pending.clear()
    return recomputed
