"""Synthetic training data for the voltage predictor.

Stands in for the unpublished driver-study recordings: a smooth monotone
surface from (incident, contrast) volts to the drive voltage that clears
glare, plus seedable Gaussian label noise. More glare asks for more voltage,
saturating at the ends of the drive range.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .voltage import VOLT_MAX, VOLT_MIN

DATASET_HEADER = "incident_v,contrast_v,label_v"


@dataclass(frozen=True)
class SyntheticDatasetSpec:
    n_samples: int = 1000
    seed: int = 7
    ground_truth: str = "sigmoid"
    noise_sd: float = 0.08
    train_fraction: float = 0.8

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction {self.train_fraction} outside (0, 1)")
        if self.noise_sd < 0.0:
            raise ValueError(f"noise_sd {self.noise_sd} must be >= 0")


def ground_truth_voltage(incident, contrast):
    """Target drive voltage for given criteria (vectorized)."""
    z = 1.2 * np.asarray(incident) + 0.8 * np.asarray(contrast) - 3.0
    return VOLT_MIN + (VOLT_MAX - VOLT_MIN) / (1.0 + np.exp(-z))


def generate_dataset(spec: SyntheticDatasetSpec) -> tuple[np.ndarray, np.ndarray]:
    """Draw (features, labels): incident ~ U(0,5), contrast ~ U(0, incident)."""
    if spec.ground_truth != "sigmoid":
        raise ValueError(f"unknown ground truth {spec.ground_truth!r}")
    rng = np.random.default_rng(spec.seed)
    incident = rng.uniform(0.0, 5.0, spec.n_samples)
    contrast = rng.uniform(0.0, incident)
    X = np.column_stack([incident, contrast])
    labels = ground_truth_voltage(incident, contrast)
    if spec.noise_sd > 0.0:
        labels = labels + rng.normal(0.0, spec.noise_sd, spec.n_samples)
    labels = np.clip(labels, VOLT_MIN, VOLT_MAX)
    return X, labels


def split_dataset(X: np.ndarray, y: np.ndarray, train_fraction: float):
    n_train = int(len(y) * train_fraction)
    return (X[:n_train], y[:n_train]), (X[n_train:], y[n_train:])


def write_dataset(path: str | Path, X: np.ndarray, y: np.ndarray) -> None:
    lines = [DATASET_HEADER]
    for (incident, contrast), label in zip(X, y):
        lines.append(f"{float(incident)!r},{float(contrast)!r},{float(label)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    rows = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line == DATASET_HEADER:
            continue
        incident, contrast, label = (float(part) for part in line.split(","))
        rows.append((incident, contrast, label))
    if not rows:
        raise ValueError(f"no samples in {path}")
    data = np.array(rows)
    return data[:, :2], data[:, 2]
