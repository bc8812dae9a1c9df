"""Stacking ensemble: boosted trees and an MLP under a ridge meta-model.

Both base learners train on the full training set and their in-sample
predictions form the meta-features, matching the deployed configuration;
an out-of-fold mode exists for leakage-free meta-features. Features are
z-scored inside the model (tanh saturates on raw volt-scale inputs);
labels stay in volts. Predictions clamp into the drive range.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..voltage import VOLT_MAX, VOLT_MIN
from .gbt import GbtHyperparams, GbtModel, gbt_fit, gbt_predict
from .mlp import MlpHyperparams, MlpModel, mlp_fit, mlp_forward
from .ridge import RidgeMeta, ridge_fit, ridge_predict


@dataclass(frozen=True)
class TrainingSample:
    """A (criteria -> chosen drive voltage) observation."""

    incident: float
    contrast: float
    voltage: float

    def __post_init__(self):
        if self.incident < 0.0 or self.contrast < 0.0:
            raise ValueError("features must be non-negative")
        if not VOLT_MIN <= self.voltage <= VOLT_MAX:
            raise ValueError(f"voltage {self.voltage} outside [{VOLT_MIN}, {VOLT_MAX}]")


def samples_to_arrays(samples) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([[s.incident, s.contrast] for s in samples], dtype=float)
    y = np.array([s.voltage for s in samples], dtype=float)
    return X, y


@dataclass
class EnsembleModel:
    gbt: GbtModel
    mlp: MlpModel
    meta: RidgeMeta
    feat_mean: np.ndarray
    feat_sd: np.ndarray
    label_mean: float = 0.0
    label_sd: float = 1.0


@dataclass(frozen=True)
class RegressionMetrics:
    """rmse in volts; r2 is None when the labels have zero variance."""

    rmse: float
    r2: Optional[float]


@dataclass(frozen=True)
class StackingHyperparams:
    gbt: GbtHyperparams = field(default_factory=GbtHyperparams)
    mlp: MlpHyperparams = field(default_factory=MlpHyperparams)
    ridge_alpha: float = 1.0
    out_of_fold: bool = False
    n_folds: int = 5


def _scale(X, mean, sd):
    return (np.atleast_2d(np.asarray(X, dtype=float)) - mean) / sd


def scale_features(model: "EnsembleModel", X) -> np.ndarray:
    """Apply the model's stored z-score parameters to raw features."""
    return _scale(X, model.feat_mean, model.feat_sd)


def base_predictions(gbt: GbtModel, mlp: MlpModel, Z: np.ndarray) -> np.ndarray:
    """Meta-feature columns: each base learner's prediction on scaled features."""
    return np.column_stack([gbt_predict(gbt, Z), mlp_forward(mlp, Z)])



def _out_of_fold_meta(Z, y, hp: StackingHyperparams) -> np.ndarray:
    n = len(y)
    if hp.n_folds < 2 or hp.n_folds > n:
        raise ValueError(f"n_folds {hp.n_folds} unusable for {n} samples")
    meta = np.empty((n, 2))
    bounds = np.linspace(0, n, hp.n_folds + 1).astype(int)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        mask = np.ones(n, dtype=bool)
        mask[lo:hi] = False
        fold_gbt = gbt_fit(Z[mask], y[mask], hp.gbt)
        fold_mlp = mlp_fit(Z[mask], y[mask], hp.mlp)
        meta[lo:hi] = base_predictions(fold_gbt, fold_mlp, Z[~mask])
    return meta


def stack_fit(X, y, hp: StackingHyperparams = StackingHyperparams()) -> EnsembleModel:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if len(y) < 4:
        raise ValueError(f"need at least 4 samples, got {len(y)}")

    feat_mean = X.mean(axis=0)
    feat_sd = X.std(axis=0)
    feat_sd[feat_sd == 0.0] = 1.0  # constant feature: pass through unscaled
    Z = _scale(X, feat_mean, feat_sd)

    gbt = gbt_fit(Z, y, hp.gbt)
    mlp = mlp_fit(Z, y, hp.mlp)
    if hp.out_of_fold:
        meta_features = _out_of_fold_meta(Z, y, hp)
    else:
        meta_features = base_predictions(gbt, mlp, Z)
    meta = ridge_fit(meta_features, y, hp.ridge_alpha)
    return EnsembleModel(gbt=gbt, mlp=mlp, meta=meta, feat_mean=feat_mean, feat_sd=feat_sd)


def stack_predict(model: EnsembleModel, X) -> np.ndarray:
    Z = _scale(X, model.feat_mean, model.feat_sd)
    raw = ridge_predict(model.meta, base_predictions(model.gbt, model.mlp, Z))
    return np.clip(raw, VOLT_MIN, VOLT_MAX)


def predict_voltage(model: EnsembleModel, incident: float, contrast: float) -> float:
    return float(stack_predict(model, [[incident, contrast]])[0])


def regression_metrics(y_true, y_pred) -> RegressionMetrics:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if len(y_true) == 0:
        raise ValueError("empty test set")
    sse = float(np.sum((y_true - y_pred) ** 2))
    sst = float(np.sum((y_true - y_true.mean()) ** 2))
    rmse = float(np.sqrt(sse / len(y_true)))
    r2 = None if sst == 0.0 else 1.0 - sse / sst
    return RegressionMetrics(rmse=rmse, r2=r2)


def evaluate(model: EnsembleModel, X, y) -> RegressionMetrics:
    return regression_metrics(y, stack_predict(model, X))
