"""Exhaustive grid search over stacking hyperparameters by k-fold CV RMSE."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .gbt import GbtHyperparams
from .mlp import MlpHyperparams
from .stacking import StackingHyperparams, regression_metrics, stack_fit, stack_predict

DEFAULT_GRID = {
    "gbt_learning_rate": [0.1, 0.3],
    "gbt_n_estimators": [25, 50],
    "mlp_activation": ["tanh"],
    "mlp_alpha": [0.001, 0.01],
    "mlp_hidden_layer_sizes": [(100,)],
}


@dataclass(frozen=True)
class GridSearchResult:
    best_params: dict
    best_rmse: float
    table: list  # (params, cv_rmse) in grid order


def params_to_hyperparams(params: dict, mlp_max_epochs: int = 500, seed: int = 0) -> StackingHyperparams:
    return StackingHyperparams(
        gbt=GbtHyperparams(
            learning_rate=params.get("gbt_learning_rate", 0.1),
            n_estimators=params.get("gbt_n_estimators", 50),
        ),
        mlp=MlpHyperparams(
            activation=params.get("mlp_activation", "tanh"),
            alpha=params.get("mlp_alpha", 0.001),
            hidden_layer_sizes=tuple(params.get("mlp_hidden_layer_sizes", (100,))),
            max_epochs=mlp_max_epochs,
            seed=seed,
        ),
        ridge_alpha=params.get("ridge_alpha", 1.0),
    )


def _fold_bounds(n: int, k: int) -> list[tuple[int, int]]:
    edges = np.linspace(0, n, k + 1).astype(int)
    return list(zip(edges[:-1], edges[1:]))


def grid_search(X, y, grid: dict | None = None, k: int = 3, seed: int = 0,
                mlp_max_epochs: int = 500) -> GridSearchResult:
    """Evaluate every grid point; ties go to the earlier point in grid order."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    grid = dict(grid) if grid else dict(DEFAULT_GRID)
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValueError("grid must be non-empty")
    if k < 2:
        raise ValueError(f"need k >= 2 folds, got {k}")
    if len(y) < k:
        raise ValueError(f"{len(y)} samples cannot fill {k} folds")

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(y))
    X, y = X[order], y[order]
    folds = _fold_bounds(len(y), k)

    keys = list(grid.keys())
    table = []
    best_params = None
    best_rmse = np.inf
    for combo in itertools.product(*(grid[key] for key in keys)):
        params = dict(zip(keys, combo))
        hp = params_to_hyperparams(params, mlp_max_epochs=mlp_max_epochs, seed=seed)
        fold_rmse = []
        for lo, hi in folds:
            mask = np.ones(len(y), dtype=bool)
            mask[lo:hi] = False
            model = stack_fit(X[mask], y[mask], hp)
            fold_rmse.append(regression_metrics(y[~mask], stack_predict(model, X[~mask])).rmse)
        cv_rmse = float(np.mean(fold_rmse))
        table.append((params, cv_rmse))
        if cv_rmse < best_rmse:
            best_rmse = cv_rmse
            best_params = params
    return GridSearchResult(best_params=best_params, best_rmse=best_rmse, table=table)
