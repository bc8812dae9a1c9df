"""Closed-form ridge regression used as the stacking meta-model.

Solved on mean-centered data so the intercept stays unpenalized:
beta = (Xc' Xc + alpha I)^-1 Xc' yc, intercept = y_mean - beta . x_mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SingularSystemError(np.linalg.LinAlgError):
    """alpha = 0 with a rank-deficient design matrix."""


@dataclass
class RidgeMeta:
    coef: np.ndarray
    intercept: float
    alpha: float


def ridge_fit(X, y, alpha: float = 1.0) -> RidgeMeta:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        raise ValueError(f"need at least 2 samples, got {len(y)}")
    if alpha < 0.0:
        raise ValueError("alpha must be >= 0")

    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xc = X - x_mean
    yc = y - y_mean
    system = Xc.T @ Xc + alpha * np.eye(X.shape[1])
    if alpha == 0.0 and np.linalg.matrix_rank(system) < X.shape[1]:
        raise SingularSystemError("alpha = 0 and centered design matrix is rank deficient")
    coef = np.linalg.solve(system, Xc.T @ yc)
    return RidgeMeta(coef=coef, intercept=y_mean - float(coef @ x_mean), alpha=alpha)


def ridge_predict(meta: RidgeMeta, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return X @ meta.coef + meta.intercept
