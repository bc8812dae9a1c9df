"""Gradient-boosted regression trees with second-order split gains.

Squared-error boosting in the regularized form: per-sample gradient
g = prediction - label, hessian h = 1, split gain
0.5 * (G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)) - gamma,
leaf weight -G/(H+lambda). Splits that do not clear the gamma bar are not
taken, so gamma = inf degenerates every tree to a single leaf.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class GbtHyperparams:
    learning_rate: float = 0.1
    n_estimators: int = 50
    max_depth: int = 3
    reg_lambda: float = 1.0
    gamma: float = 0.0
    base_score: Optional[float] = None  # None: mean of the training labels

    def __post_init__(self):
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError(f"learning_rate {self.learning_rate} outside (0, 1]")
        if self.reg_lambda < 0.0 or self.gamma < 0.0:
            raise ValueError("reg_lambda and gamma must be >= 0")
        if self.n_estimators < 0 or self.max_depth < 0:
            raise ValueError("n_estimators and max_depth must be >= 0")


@dataclass
class TreeNode:
    """Internal node (feature/threshold/children) or leaf (weight set)."""

    feature: int = -1
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    weight: Optional[float] = None

    @property
    def is_leaf(self) -> bool:
        return self.weight is not None

    def predict_one(self, x) -> float:
        node = self
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.weight

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"weight": self.weight}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TreeNode":
        if "weight" in data:
            return cls(weight=data["weight"])
        return cls(
            feature=data["feature"],
            threshold=data["threshold"],
            left=cls.from_dict(data["left"]),
            right=cls.from_dict(data["right"]),
        )


@dataclass
class GbtModel:
    trees: list[TreeNode] = field(default_factory=list)
    learning_rate: float = 0.1
    base_score: float = 0.0
    hyperparams: GbtHyperparams = field(default_factory=GbtHyperparams)


def _leaf_weight(g_sum: float, h_sum: float, reg_lambda: float) -> float:
    return -g_sum / (h_sum + reg_lambda)


def _split_score(g_sum: float, h_sum: float, reg_lambda: float) -> float:
    return g_sum * g_sum / (h_sum + reg_lambda)


def _build_tree(X: np.ndarray, g: np.ndarray, h: np.ndarray, depth: int, hp: GbtHyperparams) -> TreeNode:
    g_sum = float(g.sum())
    h_sum = float(h.sum())
    if depth >= hp.max_depth or len(g) < 2:
        return TreeNode(weight=_leaf_weight(g_sum, h_sum, hp.reg_lambda))

    parent_score = _split_score(g_sum, h_sum, hp.reg_lambda)
    best_gain = 0.0
    best = None
    for feature in range(X.shape[1]):
        order = np.argsort(X[:, feature], kind="stable")
        values = X[order, feature]
        g_sorted = g[order]
        h_sorted = h[order]
        g_left = 0.0
        h_left = 0.0
        for i in range(len(values) - 1):
            g_left += g_sorted[i]
            h_left += h_sorted[i]
            if values[i] == values[i + 1]:
                continue
            gain = (
                0.5
                * (
                    _split_score(g_left, h_left, hp.reg_lambda)
                    + _split_score(g_sum - g_left, h_sum - h_left, hp.reg_lambda)
                    - parent_score
                )
                - hp.gamma
            )
            if gain > best_gain:
                best_gain = gain
                best = (feature, (values[i] + values[i + 1]) / 2.0, order[: i + 1], order[i + 1 :])

    if best is None:
        return TreeNode(weight=_leaf_weight(g_sum, h_sum, hp.reg_lambda))

    feature, threshold, left_idx, right_idx = best
    return TreeNode(
        feature=feature,
        threshold=float(threshold),
        left=_build_tree(X[left_idx], g[left_idx], h[left_idx], depth + 1, hp),
        right=_build_tree(X[right_idx], g[right_idx], h[right_idx], depth + 1, hp),
    )


def gbt_fit(X, y, hp: GbtHyperparams = GbtHyperparams()) -> GbtModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(y) != len(X):
        raise ValueError("X must be 2-D with one label per row")
    if len(y) < 2:
        raise ValueError(f"need at least 2 samples, got {len(y)}")

    base = float(np.mean(y)) if hp.base_score is None else float(hp.base_score)
    model = GbtModel(learning_rate=hp.learning_rate, base_score=base, hyperparams=hp)
    pred = np.full(len(y), base)
    h = np.ones(len(y))
    for _ in range(hp.n_estimators):
        g = pred - y
        tree = _build_tree(X, g, h, 0, hp)
        model.trees.append(tree)
        pred = pred + hp.learning_rate * np.array([tree.predict_one(x) for x in X])
    return model


def gbt_predict(model: GbtModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.full(len(X), model.base_score)
    for tree in model.trees:
        out += model.learning_rate * np.array([tree.predict_one(x) for x in X])
    return out


def gbt_staged_predict(model: GbtModel, X):
    """Yield predictions after each successive tree (tree 0 = base score only)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.full(len(X), model.base_score)
    yield out.copy()
    for tree in model.trees:
        out += model.learning_rate * np.array([tree.predict_one(x) for x in X])
        yield out.copy()
