"""Simulated rearview-mirror edge node.

Covers the whole loop of one node: scenario waveforms feeding quantized
sensor readings, first-order electrochromic transmittance dynamics, the
closed-loop auto-adjust policy (predict, then escalate one tap per tick
until the simulated glare is Acceptable), manual overrides that become
training samples and usage counts, and local fine-tuning that emits a
federable update.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from .ensemble import (
    EnsembleModel,
    MlpHyperparams,
    TrainingSample,
    mlp_train,
    predict_voltage,
    ridge_fit,
    samples_to_arrays,
    stack_predict,
)
from .ensemble.stacking import base_predictions, scale_features
from .federation import NodeUpdate, extract_params
from .glare import (
    ACCEPTABLE_RATING,
    GlareAssessment,
    LightReading,
    TopsisCalibration,
    assess,
    compute_criteria,
)
from .voltage import N_TAPS, VOLT_MAX, VOLT_MIN, VoltageCommand, adc_quantize, tap_to_volts, volts_to_tap

TRANS_BLEACHED = 0.80
TRANS_COLORED = 0.06
# Table-derived bound: a commanded swing settles to within 10% in <= 10 s.
TAU_DEFAULT = 4.34
CONTROL_TICK_S = 0.5


def target_transmittance(volts: float) -> float:
    """Steady-state transmittance for a drive voltage, linear between endpoints."""
    clamped = min(max(volts, VOLT_MIN), VOLT_MAX)
    span = (clamped - VOLT_MIN) / (VOLT_MAX - VOLT_MIN)
    return TRANS_BLEACHED + span * (TRANS_COLORED - TRANS_BLEACHED)


@dataclass(frozen=True)
class ECDeviceState:
    transmittance: float = TRANS_BLEACHED
    applied: VoltageCommand = VoltageCommand(0)
    tau_s: float = TAU_DEFAULT
    cycle_count: int = 0


def command_device(state: ECDeviceState, command: VoltageCommand) -> ECDeviceState:
    cycles = state.cycle_count + (command.tap != state.applied.tap)
    return replace(state, applied=command, cycle_count=cycles)


def device_step(state: ECDeviceState, dt_s: float) -> ECDeviceState:
    """First-order relaxation toward the applied voltage's target."""
    if dt_s <= 0.0:
        raise ValueError(f"dt_s must be positive, got {dt_s}")
    target = target_transmittance(state.applied.volts)
    trans = target + (state.transmittance - target) * math.exp(-dt_s / state.tau_s)
    trans = min(max(trans, TRANS_COLORED), TRANS_BLEACHED)
    return replace(state, transmittance=trans)


def attenuate_reading(reading: LightReading, transmittance: float) -> LightReading:
    """Incident light as seen through the mirror; fully bleached is identity."""
    seen = adc_quantize(reading.incident_v * transmittance / TRANS_BLEACHED)
    return LightReading(seen, reading.ambient_v, reading.timestamp_ms)


@dataclass(frozen=True)
class WaveformSegment:
    start_s: float
    duration_s: float
    incident_v: float
    ambient_v: float
    noise_sd: float = 0.0


@dataclass(frozen=True)
class GlareScenario:
    """Piecewise-constant light levels over time with seedable sensor noise."""

    scenario_id: int
    name: str
    segments: tuple[WaveformSegment, ...]

    def levels_at(self, t_s: float) -> tuple[float, float, float]:
        incident, ambient, noise = 0.0, 0.0, 0.0
        for seg in self.segments:
            if seg.start_s <= t_s < seg.start_s + seg.duration_s:
                incident, ambient, noise = seg.incident_v, seg.ambient_v, seg.noise_sd
        return incident, ambient, noise

    def reading_at(self, t_s: float, rng: np.random.Generator) -> LightReading:
        incident, ambient, noise = self.levels_at(t_s)
        if noise > 0.0:
            incident += rng.normal(0.0, noise)
            ambient += rng.normal(0.0, noise)
        return LightReading(
            adc_quantize(incident), adc_quantize(ambient), timestamp_ms=int(round(t_s * 1000))
        )


def default_scenarios(duration_s: float = 30.0) -> list[GlareScenario]:
    """Six canonical conditions, one per assessment band (two Disturbing)."""
    levels = [
        (1, "unbearable", 4.25, 0.02),
        (2, "disturbing-high", 3.00, 0.02),
        (3, "disturbing-low", 2.00, 0.02),
        (4, "just-admissible", 1.30, 0.02),
        (5, "acceptable", 0.50, 0.02),
        (6, "no-glare", 0.00, 0.00),
    ]
    return [
        GlareScenario(
            scenario_id=sid,
            name=name,
            segments=(WaveformSegment(0.0, duration_s, incident, 0.0, noise),),
        )
        for sid, name, incident, noise in levels
    ]


def load_scenarios(path: str | Path) -> list[GlareScenario]:
    """Scenario config: JSON list of {id, name, segments:[{start_s,...}]}."""
    data = json.loads(Path(path).read_text())
    scenarios = []
    for entry in data:
        segments = tuple(
            WaveformSegment(
                start_s=seg["start_s"],
                duration_s=seg["duration_s"],
                incident_v=seg["incident_v"],
                ambient_v=seg["ambient_v"],
                noise_sd=seg.get("noise_sd", 0.0),
            )
            for seg in entry["segments"]
        )
        scenarios.append(GlareScenario(entry["id"], entry.get("name", f"scenario-{entry['id']}"), segments))
    return scenarios


class NodeMode(Enum):
    AUTO = "auto"
    MANUAL = "manual"


@dataclass
class NodeState:
    node_id: str
    model: EnsembleModel
    calibration: TopsisCalibration = field(default_factory=TopsisCalibration)
    mode: NodeMode = NodeMode.AUTO
    device: ECDeviceState = field(default_factory=ECDeviceState)
    buffer: list = field(default_factory=list)
    replay: list = field(default_factory=list)
    usage_count: int = 0
    last_reading: Optional[LightReading] = None
    min_train_samples: int = 8


def _simulated_rating(node: NodeState, reading: LightReading, tap: int) -> int:
    """Rating the node expects once the given tap settles."""
    settled = attenuate_reading(reading, target_transmittance(tap_to_volts(tap)))
    return assess(settled, node.calibration).rating


def auto_adjust(node: NodeState, reading: LightReading) -> VoltageCommand:
    """One control tick: track the predictor, escalating while glare persists.

    The predicted tap is commanded outright when its settled assessment is
    Acceptable or better (this also relaxes the mirror once glare ends);
    otherwise the tap climbs one level per tick, holding whatever level
    reached Acceptable, and saturates at the top tap.
    """
    node.last_reading = reading
    criteria = compute_criteria(reading)
    predicted_tap = volts_to_tap(predict_voltage(node.model, criteria.incident, criteria.contrast))

    if _simulated_rating(node, reading, predicted_tap) >= ACCEPTABLE_RATING:
        tap = predicted_tap
    else:
        candidate = max(predicted_tap, node.device.applied.tap)
        if candidate == node.device.applied.tap and _simulated_rating(
            node, reading, candidate
        ) < ACCEPTABLE_RATING:
            candidate = min(candidate + 1, N_TAPS - 1)
        tap = candidate

    command = VoltageCommand(tap)
    node.device = command_device(node.device, command)
    return command


def manual_override(node: NodeState, tap: int) -> VoltageCommand:
    """Apply an operator-chosen tap; the choice becomes a training sample."""
    if not isinstance(tap, int) or not 0 <= tap < N_TAPS:
        raise ValueError(f"tap {tap!r} outside 0..{N_TAPS - 1}")

    command = VoltageCommand(tap)
    node.mode = NodeMode.MANUAL
    node.device = command_device(node.device, command)
    node.usage_count += 1
    if node.last_reading is not None:
        criteria = compute_criteria(node.last_reading)
        node.buffer.append(
            TrainingSample(criteria.incident, criteria.contrast, tap_to_volts(tap))
        )
    return command


def local_holdout_split(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded 80/20 split; the holdout always keeps at least one sample."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_holdout = max(1, int(round(n * 0.2)))
    return order[n_holdout:], order[:n_holdout]


def local_train(
    node: NodeState,
    fine_tune_epochs: int = 300,
    learning_rate: float = 0.02,
    seed: int = 0,
) -> Optional[NodeUpdate]:
    """Fine-tune the MLP and refit the ridge meta-model on local data.

    Trains on the buffered overrides plus replayed prior data (forest and
    feature scaling frozen from the initial configuration), measures mean
    absolute error on a seeded 20% holdout, and emits the node's federable
    update. Returns None while the buffer is below the minimum.
    """
    if len(node.buffer) < node.min_train_samples:
        return None

    samples = list(node.replay) + list(node.buffer)
    X, y = samples_to_arrays(samples)
    fit_idx, holdout_idx = local_holdout_split(len(y), seed)

    model = node.model
    Z_fit = scale_features(model, X[fit_idx])
    hp = MlpHyperparams(
        hidden_layer_sizes=model.mlp.layer_sizes[1:-1],
        alpha=model.mlp.alpha,
        learning_rate=learning_rate,
        max_epochs=fine_tune_epochs,
        seed=seed,
    )
    mlp = mlp_train(model.mlp, Z_fit, y[fit_idx], hp)
    meta = ridge_fit(base_predictions(model.gbt, mlp, Z_fit), y[fit_idx], model.meta.alpha)
    node.model = replace(model, mlp=mlp, meta=meta)

    holdout_pred = stack_predict(node.model, X[holdout_idx])
    mean_error = float(np.mean(np.abs(holdout_pred - y[holdout_idx])))

    update = NodeUpdate(
        node_id=node.node_id,
        params=extract_params(node.model),
        usage_count=node.usage_count,
        staleness=0,
        mean_error=mean_error,
    )
    node.replay = samples
    node.buffer = []
    node.usage_count = 0
    return update


@dataclass(frozen=True)
class TickRecord:
    t_s: float
    reading: LightReading
    before: GlareAssessment
    command: VoltageCommand
    transmittance: float
    after: GlareAssessment


def run_scenario(
    node: NodeState,
    scenario: GlareScenario,
    duration_s: float = 30.0,
    dt_s: float = CONTROL_TICK_S,
    seed: int = 0,
) -> list[TickRecord]:
    """Tick the node through a scenario, logging before/after assessments.

    The "after" view attenuates the incident channel by the device's actual
    (still settling) transmittance, normalized so a fully bleached mirror
    changes nothing.
    """
    rng = np.random.default_rng(seed)
    records = []
    t = 0.0
    while t < duration_s:
        reading = scenario.reading_at(t, rng)
        node.last_reading = reading
        before = assess(reading, node.calibration)
        if node.mode is NodeMode.AUTO:
            command = auto_adjust(node, reading)
        else:
            command = node.device.applied
        node.device = device_step(node.device, dt_s)
        after = assess(attenuate_reading(reading, node.device.transmittance), node.calibration)
        records.append(
            TickRecord(
                t_s=t,
                reading=reading,
                before=before,
                command=command,
                transmittance=node.device.transmittance,
                after=after,
            )
        )
        t += dt_s
    return records


RUN_LOG_HEADER = (
    "t_s,incident_v,ambient_v,before_score,before_rating,tap,volts,"
    "transmittance,after_score,after_rating"
)


def write_run_log(path: str | Path, records: list[TickRecord]) -> None:
    lines = [RUN_LOG_HEADER]
    for r in records:
        lines.append(
            f"{r.t_s!r},{r.reading.incident_v!r},{r.reading.ambient_v!r},"
            f"{r.before.topsis_score!r},{r.before.rating},{r.command.tap},"
            f"{r.command.volts!r},{r.transmittance!r},"
            f"{r.after.topsis_score!r},{r.after.rating}"
        )
    Path(path).write_text("\n".join(lines) + "\n")
