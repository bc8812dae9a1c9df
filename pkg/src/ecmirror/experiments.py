"""Desk-scale experiment harness behind the CLI.

Reproduces the shape of the published analyses on synthetic data: the
six-algorithm accuracy comparison, federated improvement over rounds,
aggregation timing versus fleet size, and per-scenario glare reduction.
Every run is deterministic under a fixed seed (timings excepted).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .edge import NodeState, default_scenarios, local_train, run_scenario
from .ensemble import (
    EnsembleModel,
    GbtHyperparams,
    MlpHyperparams,
    StackingHyperparams,
    TrainingSample,
    evaluate,
    gbt_fit,
    gbt_predict,
    mlp_forward,
    regression_metrics,
    ridge_fit,
    ridge_predict,
    scale_features,
    stack_fit,
    stack_predict,
)
from .federation import FederationConfig, FederationHub, aggregate, apply_params, error_correct
from .federation import NodeUpdate, ParamVector, extract_params, schema_hash
from .glare import score_to_rating
from .synth import SyntheticDatasetSpec, generate_dataset, split_dataset

TABLE_II_STACK = StackingHyperparams(
    gbt=GbtHyperparams(learning_rate=0.1, n_estimators=50),
    mlp=MlpHyperparams(hidden_layer_sizes=(100,), activation="tanh", alpha=0.001, seed=0),
    ridge_alpha=1.0,
)

COMPARISON_MODELS = ("gbt", "mlp", "ridge_raw", "knn5", "dtree", "stacking")


def knn_predict(X_train, y_train, X, k: int = 5) -> np.ndarray:
    """Plain Euclidean k-nearest-neighbour mean."""
    X_train = np.asarray(X_train)
    X = np.atleast_2d(np.asarray(X))
    out = np.empty(len(X))
    for i, x in enumerate(X):
        dist = np.sqrt(((X_train - x) ** 2).sum(axis=1))
        nearest = np.argsort(dist, kind="stable")[:k]
        out[i] = float(np.mean(np.asarray(y_train)[nearest]))
    return out


def decision_tree_hyperparams(max_depth: int = 5) -> GbtHyperparams:
    """A single unregularized full-step tree is a depth-limited regression tree."""
    return GbtHyperparams(
        learning_rate=1.0, n_estimators=1, max_depth=max_depth, reg_lambda=0.0, base_score=0.0
    )


@dataclass(frozen=True)
class ComparisonRow:
    model: str
    rmse: float
    r2: float | None


def compare_models(X_train, y_train, X_test, y_test, seed: int = 0) -> list[ComparisonRow]:
    """Held-out metrics for the six-algorithm comparison.

    The gbt and mlp rows are the stacking ensemble's own base learners, so
    the stacking row differs from them only by the meta-model.
    """
    hp = replace(TABLE_II_STACK, mlp=replace(TABLE_II_STACK.mlp, seed=seed))
    stacked = stack_fit(X_train, y_train, hp)
    Z_test = scale_features(stacked, X_test)

    rows = []
    predictions = {
        "gbt": gbt_predict(stacked.gbt, Z_test),
        "mlp": mlp_forward(stacked.mlp, Z_test),
        "ridge_raw": ridge_predict(ridge_fit(X_train, y_train, alpha=1.0), X_test),
        "knn5": knn_predict(X_train, y_train, X_test, k=5),
        "dtree": gbt_predict(gbt_fit(X_train, y_train, decision_tree_hyperparams()), X_test),
        "stacking": stack_predict(stacked, X_test),
    }
    for name in COMPARISON_MODELS:
        metrics = regression_metrics(y_test, predictions[name])
        rows.append(ComparisonRow(model=name, rmse=metrics.rmse, r2=metrics.r2))
    return rows


@dataclass(frozen=True)
class RoundRow:
    round_index: int
    version: int
    test_rmse: float
    test_r2: float | None
    train_r2: float | None
    correction: str


def federate_experiment(
    n_nodes: int = 5,
    n_rounds: int = 10,
    cfg: FederationConfig = FederationConfig(),
    seed: int = 7,
    shard_size: int = 120,
    bootstrap_samples: int = 8,
    bootstrap_epochs: int = 40,
    fine_tune_epochs: int = 250,
    test_samples: int = 400,
) -> list[RoundRow]:
    """Disjoint-shard federated simulation reporting global metrics per round.

    Nodes reveal an equal slice of their shard each round (each revealed
    sample stands for one manual adjustment, so it counts toward usage),
    fine-tune from the freshly pulled global model, and push; the hub then
    aggregates and publishes. Row 0 is the bootstrap model before any round.
    """
    if n_nodes < 1 or n_rounds < 1:
        raise ValueError("need at least one node and one round")

    total = bootstrap_samples + n_nodes * shard_size + test_samples
    X, y = generate_dataset(SyntheticDatasetSpec(n_samples=total, seed=seed))
    X_boot, y_boot = X[:bootstrap_samples], y[:bootstrap_samples]
    X_test, y_test = X[-test_samples:], y[-test_samples:]

    boot_hp = replace(
        TABLE_II_STACK,
        mlp=replace(TABLE_II_STACK.mlp, max_epochs=bootstrap_epochs, seed=seed),
    )
    bootstrap = stack_fit(X_boot, y_boot, boot_hp)
    hub = FederationHub.bootstrap(extract_params(bootstrap), cfg)

    nodes = []
    per_round = shard_size // n_rounds
    for i in range(n_nodes):
        lo = bootstrap_samples + i * shard_size
        shard_X, shard_y = X[lo : lo + shard_size], y[lo : lo + shard_size]
        nodes.append(
            {
                "state": NodeState(node_id=f"node-{i:02d}", model=bootstrap),
                "X": shard_X,
                "y": shard_y,
                "cursor": 0,
            }
        )

    def global_eval(version: int, round_index: int) -> RoundRow:
        model = apply_params(bootstrap, hub.current.params)
        test = evaluate(model, X_test, y_test)
        train_pool_X = np.vstack([n["X"][: n["cursor"]] for n in nodes] + [X_boot])
        train_pool_y = np.concatenate([n["y"][: n["cursor"]] for n in nodes] + [y_boot])
        train = evaluate(model, train_pool_X, train_pool_y)
        return RoundRow(
            round_index=round_index,
            version=version,
            test_rmse=test.rmse,
            test_r2=test.r2,
            train_r2=train.r2,
            correction=hub.last_outcome,
        )

    rows = [global_eval(version=0, round_index=0)]
    for round_index in range(1, n_rounds + 1):
        for node in nodes:
            state: NodeState = node["state"]
            state.model = apply_params(state.model, hub.current.params)
            lo, hi = node["cursor"], min(node["cursor"] + per_round, len(node["y"]))
            node["cursor"] = hi
            state.buffer = [
                TrainingSample(float(xi[0]), float(xi[1]), float(yi))
                for xi, yi in zip(node["X"][lo:hi], node["y"][lo:hi])
            ]
            state.usage_count = hi - lo
            state.min_train_samples = min(state.min_train_samples, max(2, hi - lo))
            update = local_train(state, fine_tune_epochs=fine_tune_epochs, seed=seed + round_index)
            if update is not None:
                hub.submit(update)
        published = hub.run_round(now=float(round_index))
        version = hub.current.version if published is None else published.version
        rows.append(global_eval(version=version, round_index=round_index))
    return rows


@dataclass(frozen=True)
class BenchRow:
    n_nodes: int
    param_dim: int
    mean_wall_s: float
    mean_cpu_s: float
    rounds: int


def bench_aggregation(
    node_counts=(2, 4, 8, 16, 32),
    rounds_per_point: int = 30,
    param_dim: int = 50_000,
    seed: int = 0,
    cfg: FederationConfig = FederationConfig(),
) -> list[BenchRow]:
    """Mean aggregation wall/CPU time per round for growing fleet sizes."""
    rng = np.random.default_rng(seed)
    schema = schema_hash((2, 100, 1), 2)
    rows = []
    for n in node_counts:
        if n < 1:
            raise ValueError("node counts must be >= 1")
        updates = [
            NodeUpdate(
                node_id=f"n{i:03d}",
                params=ParamVector(rng.normal(0, 1, param_dim), schema),
                usage_count=int(rng.integers(1, 6)),
                staleness=int(rng.integers(0, 3)),
                mean_error=float(rng.uniform(0.01, 0.3)),
            )
            for i in range(n)
        ]
        for _ in range(3):  # warm-up
            error_correct(aggregate(updates, cfg), updates, cfg)
        wall = cpu = 0.0
        for _ in range(rounds_per_point):
            w0 = time.perf_counter()
            c0 = time.process_time()
            theta = aggregate(updates, cfg)
            error_correct(theta, updates, cfg)
            cpu += time.process_time() - c0
            wall += time.perf_counter() - w0
        rows.append(
            BenchRow(
                n_nodes=n,
                param_dim=param_dim,
                mean_wall_s=wall / rounds_per_point,
                mean_cpu_s=cpu / rounds_per_point,
                rounds=rounds_per_point,
            )
        )
    return rows


@dataclass(frozen=True)
class GlareEvalRow:
    scenario_id: int
    name: str
    before_mean: float
    after_mean: float
    before_rating: int
    after_rating: int
    participants: int


def glare_eval(
    model: EnsembleModel,
    participants: int = 10,
    duration_s: float = 30.0,
    seed: int = 0,
    scenarios=None,
) -> list[GlareEvalRow]:
    """Average before/after severity per scenario across simulated participants."""
    scenarios = list(scenarios) if scenarios else default_scenarios(duration_s)
    rows = []
    for scenario in scenarios:
        before_means = []
        after_means = []
        for participant in range(participants):
            node = NodeState(node_id=f"p{participant:02d}", model=model)
            records = run_scenario(
                node,
                scenario,
                duration_s=duration_s,
                seed=seed * 100_000 + scenario.scenario_id * 1000 + participant,
            )
            before_means.append(float(np.mean([r.before.topsis_score for r in records])))
            after_means.append(float(np.mean([r.after.topsis_score for r in records])))
        before = float(np.mean(before_means))
        after = float(np.mean(after_means))
        rows.append(
            GlareEvalRow(
                scenario_id=scenario.scenario_id,
                name=scenario.name,
                before_mean=before,
                after_mean=after,
                before_rating=score_to_rating(min(before, 1.0)).rating,
                after_rating=score_to_rating(min(after, 1.0)).rating,
                participants=participants,
            )
        )
    return rows


def train_model(X, y, use_grid_search: bool = False, seed: int = 0,
                mlp_max_epochs: int = 2000) -> tuple[EnsembleModel, dict]:
    """Fit the deployable stack, optionally picking hyperparameters by grid search."""
    from .ensemble import grid_search, params_to_hyperparams

    if use_grid_search:
        result = grid_search(X, y, k=3, seed=seed, mlp_max_epochs=min(400, mlp_max_epochs))
        hp = params_to_hyperparams(result.best_params, mlp_max_epochs=mlp_max_epochs, seed=seed)
        chosen = dict(result.best_params)
    else:
        hp = replace(
            TABLE_II_STACK,
            mlp=replace(TABLE_II_STACK.mlp, seed=seed, max_epochs=mlp_max_epochs),
        )
        chosen = {
            "gbt_learning_rate": hp.gbt.learning_rate,
            "gbt_n_estimators": hp.gbt.n_estimators,
            "mlp_activation": hp.mlp.activation,
            "mlp_alpha": hp.mlp.alpha,
            "mlp_hidden_layer_sizes": hp.mlp.hidden_layer_sizes,
        }
    return stack_fit(X, y, hp), chosen


def default_benchmark(seed: int = 7):
    """The fixed benchmark split the comparison criteria run against."""
    spec = SyntheticDatasetSpec(n_samples=1000, seed=seed, noise_sd=0.08)
    X, y = generate_dataset(spec)
    return split_dataset(X, y, spec.train_fraction)
