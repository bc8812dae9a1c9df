"""Cloud-edge federated aggregation over aligned parameter vectors.

A node's federable parameters are its MLP weights/biases concatenated with
the ridge meta-coefficients and intercept; boosted trees from different
nodes are not structurally alignable, so the forest stays frozen from the
initial configuration and never federates. Aggregation weights each node by
decay**staleness * usage_count; an optional correction step then adds
alpha times the error-weighted mean of the node parameters.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .ensemble import EnsembleModel


class FederationError(ValueError):
    pass


class SchemaMismatchError(FederationError):
    pass


class NoUsableUpdatesError(FederationError):
    """Every update carries zero effective weight."""


def schema_hash(layer_sizes, n_meta: int, activation: str = "tanh") -> str:
    descriptor = json.dumps(
        {"mlp_layers": list(layer_sizes), "activation": activation, "meta_dim": n_meta}
    )
    return hashlib.sha256(descriptor.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ParamVector:
    values: np.ndarray
    schema: str

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if not np.all(np.isfinite(self.values)):
            raise FederationError("parameter vector contains non-finite entries")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class NodeUpdate:
    node_id: str
    params: ParamVector
    usage_count: int
    staleness: int = 0
    mean_error: float = 0.0

    def __post_init__(self):
        if self.usage_count < 0 or self.staleness < 0:
            raise FederationError("usage_count and staleness must be >= 0")
        if self.mean_error < 0.0 or not np.isfinite(self.mean_error):
            raise FederationError("mean_error must be finite and >= 0")


@dataclass(frozen=True)
class FederationConfig:
    decay: float = 0.9
    correction: float = 0.1
    min_nodes: int = 1

    def __post_init__(self):
        if not 0.0 < self.decay <= 1.0:
            raise FederationError(f"decay {self.decay} outside (0, 1]")
        if self.correction < 0.0:
            raise FederationError("correction must be >= 0")
        if self.min_nodes < 1:
            raise FederationError("min_nodes must be >= 1")


@dataclass(frozen=True)
class Provenance:
    node_id: str
    weight: float
    usage_count: int
    staleness: int
    mean_error: float


@dataclass(frozen=True)
class GlobalModel:
    params: ParamVector
    version: int
    created_at: float
    provenance: tuple[Provenance, ...] = ()


def _check_schemas(updates) -> str:
    schemas = {u.params.schema for u in updates}
    if len(schemas) > 1:
        raise SchemaMismatchError(f"mixed parameter schemas: {sorted(schemas)}")
    return schemas.pop()


def aggregation_weights(updates, cfg: FederationConfig) -> np.ndarray:
    return np.array([cfg.decay**u.staleness * u.usage_count for u in updates], dtype=float)


def aggregate(updates, cfg: FederationConfig) -> ParamVector:
    """Usage- and staleness-weighted mean of node parameters, element-wise.

    Summation order is fixed by node_id sort, so permuting the input list
    cannot change the result.
    """
    if not updates:
        raise FederationError("no updates to aggregate")
    schema = _check_schemas(updates)
    updates = sorted(updates, key=lambda u: u.node_id)
    weights = aggregation_weights(updates, cfg)
    total = float(weights.sum())
    if total <= 0.0:
        raise NoUsableUpdatesError("every update has zero usage weight")

    acc = np.zeros(len(updates[0].params))
    for w, u in zip(weights, updates):
        acc += w * u.params.values
    return ParamVector(values=acc / total, schema=schema)


@dataclass(frozen=True)
class CorrectionResult:
    params: ParamVector
    outcome: str  # "applied" | "alpha-zero" | "zero-error-cohort"


def error_correct(theta: ParamVector, updates, cfg: FederationConfig) -> CorrectionResult:
    """Add alpha times the error-weighted mean of node parameters.

    alpha = 0 returns theta untouched; a cohort reporting zero total error
    needs no correction, so that case is skipped rather than failed.
    """
    if cfg.correction == 0.0:
        return CorrectionResult(params=theta, outcome="alpha-zero")
    if not updates:
        raise FederationError("no updates for error correction")
    schema = _check_schemas(updates)
    if schema != theta.schema:
        raise SchemaMismatchError("updates do not match the aggregated schema")

    updates = sorted(updates, key=lambda u: u.node_id)
    errors = np.array([u.mean_error for u in updates])
    total = float(errors.sum())
    if total == 0.0:
        return CorrectionResult(params=theta, outcome="zero-error-cohort")

    acc = np.zeros(len(theta))
    for e, u in zip(errors, updates):
        acc += e * u.params.values
    corrected = theta.values + cfg.correction * (acc / total)
    return CorrectionResult(params=ParamVector(values=corrected, schema=theta.schema), outcome="applied")


def extract_params(model: EnsembleModel) -> ParamVector:
    """Flatten the federable parameters: MLP layers then ridge coef/intercept."""
    parts = []
    for w, b in zip(model.mlp.weights, model.mlp.biases):
        parts.append(w.ravel())
        parts.append(b)
    parts.append(model.meta.coef)
    parts.append(np.array([model.meta.intercept]))
    schema = schema_hash(model.mlp.layer_sizes, len(model.meta.coef), model.mlp.activation)
    return ParamVector(values=np.concatenate(parts), schema=schema)


def apply_params(model: EnsembleModel, params: ParamVector) -> EnsembleModel:
    """Install federated parameters; the tree forest and scaling are untouched."""
    expected = schema_hash(model.mlp.layer_sizes, len(model.meta.coef), model.mlp.activation)
    if params.schema != expected:
        raise SchemaMismatchError(f"schema {params.schema} != model schema {expected}")

    flat = params.values
    pos = 0
    weights = []
    biases = []
    for w, b in zip(model.mlp.weights, model.mlp.biases):
        weights.append(flat[pos : pos + w.size].reshape(w.shape).copy())
        pos += w.size
        biases.append(flat[pos : pos + b.size].copy())
        pos += b.size
    coef = flat[pos : pos + len(model.meta.coef)].copy()
    pos += len(model.meta.coef)
    intercept = float(flat[pos])

    mlp = replace(model.mlp, weights=weights, biases=biases)
    meta = replace(model.meta, coef=coef, intercept=intercept)
    return replace(model, mlp=mlp, meta=meta)


@dataclass
class FederationHub:
    """Single-writer round orchestrator with staleness bookkeeping.

    Pending updates queue between rounds (last write per node wins); a round
    snapshots them, aggregates, corrects, and publishes a new immutable
    version. Nodes absent from a successful round gain one round of
    staleness; quorum-skipped rounds leave everything queued and untouched.
    """

    cfg: FederationConfig
    current: GlobalModel
    staleness: dict = field(default_factory=dict)
    pending: dict = field(default_factory=dict)
    last_outcome: str = ""

    @classmethod
    def bootstrap(cls, initial: ParamVector, cfg: FederationConfig, created_at: float = 0.0):
        return cls(cfg=cfg, current=GlobalModel(params=initial, version=0, created_at=created_at))

    def register(self, node_id: str) -> None:
        self.staleness.setdefault(node_id, 0)

    def submit(self, update: NodeUpdate) -> None:
        if update.params.schema != self.current.params.schema:
            raise SchemaMismatchError(
                f"schema {update.params.schema} != active schema {self.current.params.schema}"
            )
        self.register(update.node_id)
        self.pending[update.node_id] = update

    def run_round(self, now: Optional[float] = None) -> Optional[GlobalModel]:
        """Aggregate queued updates into a new version; None when below quorum."""
        if len(self.pending) < self.cfg.min_nodes:
            return None

        snapshot = [
            replace(update, staleness=self.staleness.get(node_id, 0))
            for node_id, update in sorted(self.pending.items())
        ]
        theta = aggregate(snapshot, self.cfg)
        correction = error_correct(theta, snapshot, self.cfg)
        self.last_outcome = correction.outcome

        weights = aggregation_weights(snapshot, self.cfg)
        weights = weights / weights.sum()
        provenance = tuple(
            Provenance(
                node_id=u.node_id,
                weight=float(w),
                usage_count=u.usage_count,
                staleness=u.staleness,
                mean_error=u.mean_error,
            )
            for w, u in zip(weights, snapshot)
        )
        self.current = GlobalModel(
            params=correction.params,
            version=self.current.version + 1,
            created_at=time.time() if now is None else now,
            provenance=provenance,
        )

        participants = {u.node_id for u in snapshot}
        for node_id in self.staleness:
            self.staleness[node_id] = 0 if node_id in participants else self.staleness[node_id] + 1
        self.pending.clear()
        return self.current
