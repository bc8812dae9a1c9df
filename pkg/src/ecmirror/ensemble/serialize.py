"""Versioned, self-describing text serialization for fitted ensembles.

JSON with an explicit format tag and version; floats survive the round trip
exactly (shortest-repr encoding), so a deserialized model predicts
bit-identically to the original.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .gbt import GbtHyperparams, GbtModel, TreeNode
from .mlp import MlpModel
from .ridge import RidgeMeta
from .stacking import EnsembleModel

FORMAT_TAG = "ecmirror-ensemble"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


def model_to_dict(model: EnsembleModel) -> dict:
    hp = model.gbt.hyperparams
    return {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "scaling": {
            "feat_mean": list(map(float, model.feat_mean)),
            "feat_sd": list(map(float, model.feat_sd)),
            "label_mean": model.label_mean,
            "label_sd": model.label_sd,
        },
        "gbt": {
            "learning_rate": model.gbt.learning_rate,
            "base_score": model.gbt.base_score,
            "hyperparams": {
                "learning_rate": hp.learning_rate,
                "n_estimators": hp.n_estimators,
                "max_depth": hp.max_depth,
                "reg_lambda": hp.reg_lambda,
                "gamma": hp.gamma,
                "base_score": hp.base_score,
            },
            "trees": [tree.to_dict() for tree in model.gbt.trees],
        },
        "mlp": {
            "activation": model.mlp.activation,
            "alpha": model.mlp.alpha,
            "weights": [w.tolist() for w in model.mlp.weights],
            "biases": [b.tolist() for b in model.mlp.biases],
        },
        "meta": {
            "coef": list(map(float, model.meta.coef)),
            "intercept": model.meta.intercept,
            "alpha": model.meta.alpha,
        },
    }


def model_from_dict(data: dict) -> EnsembleModel:
    if data.get("format") != FORMAT_TAG:
        raise ModelFormatError(f"not a {FORMAT_TAG} document")
    if data.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format version {data.get('version')}")

    gbt_data = data["gbt"]
    hp_data = gbt_data["hyperparams"]
    gamma = hp_data["gamma"]
    gbt = GbtModel(
        trees=[TreeNode.from_dict(t) for t in gbt_data["trees"]],
        learning_rate=gbt_data["learning_rate"],
        base_score=gbt_data["base_score"],
        hyperparams=GbtHyperparams(
            learning_rate=hp_data["learning_rate"],
            n_estimators=hp_data["n_estimators"],
            max_depth=hp_data["max_depth"],
            reg_lambda=hp_data["reg_lambda"],
            gamma=float("inf") if gamma is None else gamma,
            base_score=hp_data["base_score"],
        ),
    )
    mlp_data = data["mlp"]
    mlp = MlpModel(
        weights=[np.array(w, dtype=float) for w in mlp_data["weights"]],
        biases=[np.array(b, dtype=float) for b in mlp_data["biases"]],
        activation=mlp_data["activation"],
        alpha=mlp_data["alpha"],
    )
    meta_data = data["meta"]
    meta = RidgeMeta(
        coef=np.array(meta_data["coef"], dtype=float),
        intercept=meta_data["intercept"],
        alpha=meta_data["alpha"],
    )
    scaling = data["scaling"]
    return EnsembleModel(
        gbt=gbt,
        mlp=mlp,
        meta=meta,
        feat_mean=np.array(scaling["feat_mean"], dtype=float),
        feat_sd=np.array(scaling["feat_sd"], dtype=float),
        label_mean=scaling["label_mean"],
        label_sd=scaling["label_sd"],
    )


def model_to_text(model: EnsembleModel) -> str:
    # json disallows inf; gamma = inf is stored as null and restored above
    data = model_to_dict(model)
    if data["gbt"]["hyperparams"]["gamma"] == float("inf"):
        data["gbt"]["hyperparams"]["gamma"] = None
    return json.dumps(data, indent=1, sort_keys=True)


def model_from_text(text: str) -> EnsembleModel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid model document: {exc}") from exc
    return model_from_dict(data)


def save_model(model: EnsembleModel, path: str | Path) -> None:
    Path(path).write_text(model_to_text(model) + "\n")


def load_model(path: str | Path) -> EnsembleModel:
    return model_from_text(Path(path).read_text())
