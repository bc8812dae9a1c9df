"""Stacking voltage predictor: boosted trees + MLP under a ridge meta-model."""

from .gbt import GbtHyperparams, GbtModel, TreeNode, gbt_fit, gbt_predict, gbt_staged_predict
from .mlp import (
    MlpHyperparams,
    MlpModel,
    TrainingDivergedError,
    init_mlp,
    mlp_fit,
    mlp_forward,
    mlp_loss,
    mlp_loss_and_grads,
    mlp_train,
)
from .ridge import RidgeMeta, SingularSystemError, ridge_fit, ridge_predict
from .serialize import (
    ModelFormatError,
    load_model,
    model_from_text,
    model_to_text,
    save_model,
)
from .stacking import (
    EnsembleModel,
    RegressionMetrics,
    StackingHyperparams,
    TrainingSample,
    base_predictions,
    evaluate,
    predict_voltage,
    regression_metrics,
    samples_to_arrays,
    scale_features,
    stack_fit,
    stack_predict,
)
from .tuning import DEFAULT_GRID, GridSearchResult, grid_search, params_to_hyperparams

__all__ = [
    "DEFAULT_GRID",
    "EnsembleModel",
    "GbtHyperparams",
    "GbtModel",
    "GridSearchResult",
    "MlpHyperparams",
    "MlpModel",
    "ModelFormatError",
    "RegressionMetrics",
    "RidgeMeta",
    "SingularSystemError",
    "StackingHyperparams",
    "TrainingDivergedError",
    "TrainingSample",
    "TreeNode",
    "base_predictions",
    "evaluate",
    "gbt_fit",
    "gbt_predict",
    "gbt_staged_predict",
    "grid_search",
    "init_mlp",
    "load_model",
    "mlp_fit",
    "mlp_forward",
    "mlp_loss",
    "mlp_loss_and_grads",
    "mlp_train",
    "model_from_text",
    "model_to_text",
    "params_to_hyperparams",
    "predict_voltage",
    "regression_metrics",
    "ridge_fit",
    "ridge_predict",
    "samples_to_arrays",
    "save_model",
    "scale_features",
    "stack_fit",
    "stack_predict",
]
