"""Command-line entry points: data generation, training, the experiment
harness, and the service/node launchers.

Every command takes --seed and --out-dir, writes a machine-readable result
file plus a human-readable summary, and exits nonzero with a one-line cause
on failure. --config points at a JSON file whose keys override the
command's defaults.
"""

from __future__ import annotations

import asyncio
import json
import logging
from pathlib import Path

import click

from . import __version__

logger = logging.getLogger(__name__)


def _load_config_overrides(ctx, param, value):
    if value is None:
        return {}
    try:
        data = json.loads(Path(value).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"cannot read config {value}: {exc}")
    if not isinstance(data, dict):
        raise click.ClickException(f"config {value} must be a JSON object")
    return data


def _apply_overrides(ctx: click.Context, overrides: dict) -> None:
    params_by_name = {param.name: param for param in ctx.command.params}
    for key, value in overrides.items():
        name = key.replace("-", "_")
        if name not in ctx.params:
            raise click.ClickException(f"config key {key!r} is not a flag of this command")
        if ctx.get_parameter_source(name) == click.core.ParameterSource.DEFAULT:
            ctx.params[name] = params_by_name[name].type_cast_value(ctx, value)


def common_options(fn):
    fn = click.option("--seed", type=int, default=7, show_default=True, help="RNG seed.")(fn)
    fn = click.option(
        "--out-dir",
        type=click.Path(file_okay=False, path_type=Path),
        default=Path("out"),
        show_default=True,
        help="Directory for result files.",
    )(fn)
    fn = click.option(
        "--config",
        type=click.Path(exists=True, dir_okay=False),
        callback=_load_config_overrides,
        expose_value=True,
        help="JSON file overriding flag defaults.",
    )(fn)
    return fn


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text)
    return path


def _table(rows: list[dict], columns: list[str]) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join("" if row[c] is None else str(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


@click.group()
@click.version_option(__version__)
def main():
    """Intelligent electrochromic rearview-mirror toolkit."""
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")


@main.command()
@common_options
@click.option("--samples", type=int, default=1000, show_default=True)
@click.option("--noise-sd", type=float, default=0.08, show_default=True)
@click.option("--train-fraction", type=float, default=0.8, show_default=True)
@click.pass_context
def generate(ctx, config, seed, out_dir, samples, noise_sd, train_fraction):
    """Write a synthetic train/test dataset."""
    _apply_overrides(ctx, config)
    p = ctx.params
    from .synth import SyntheticDatasetSpec, generate_dataset, split_dataset, write_dataset

    spec = SyntheticDatasetSpec(
        n_samples=p["samples"], seed=p["seed"], noise_sd=p["noise_sd"],
        train_fraction=p["train_fraction"],
    )
    X, y = generate_dataset(spec)
    (X_tr, y_tr), (X_te, y_te) = split_dataset(X, y, spec.train_fraction)
    train_path = _write_dataset(p["out_dir"], "train.csv", X_tr, y_tr, write_dataset)
    test_path = _write_dataset(p["out_dir"], "test.csv", X_te, y_te, write_dataset)
    click.echo(f"wrote {len(y_tr)} train rows to {train_path}")
    click.echo(f"wrote {len(y_te)} test rows to {test_path}")


def _write_dataset(out_dir: Path, name: str, X, y, writer) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    writer(path, X, y)
    return path


@main.command()
@common_options
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Training CSV (incident_v,contrast_v,label_v).")
@click.option("--grid/--no-grid", default=False, show_default=True,
              help="Pick hyperparameters by cross-validated grid search.")
@click.option("--mlp-epochs", type=int, default=2000, show_default=True)
@click.pass_context
def train(ctx, config, seed, out_dir, data, grid, mlp_epochs):
    """Fit the stacking predictor and save the model artifact."""
    _apply_overrides(ctx, config)
    p = ctx.params
    from .ensemble import evaluate, save_model
    from .experiments import train_model
    from .synth import load_dataset

    X, y = load_dataset(p["data"])
    model, chosen = train_model(X, y, use_grid_search=p["grid"], seed=p["seed"],
                                mlp_max_epochs=p["mlp_epochs"])
    p["out_dir"].mkdir(parents=True, exist_ok=True)
    model_path = p["out_dir"] / "model.json"
    save_model(model, model_path)
    metrics = evaluate(model, X, y)
    summary = {
        "model_path": str(model_path),
        "train_rmse": metrics.rmse,
        "train_r2": metrics.r2,
        "hyperparameters": {k: list(v) if isinstance(v, tuple) else v for k, v in chosen.items()},
        "samples": len(y),
    }
    _write(p["out_dir"], "train_summary.json", json.dumps(summary, indent=2) + "\n")
    click.echo(f"model saved to {model_path} (train rmse {metrics.rmse:.4f})")


@main.command()
@common_options
@click.option("--train-data", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Training CSV; omit to use the default synthetic benchmark.")
@click.option("--test-data", type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_context
def compare(ctx, config, seed, out_dir, train_data, test_data):
    """Held-out accuracy of six regressors (stand-in algorithm set)."""
    _apply_overrides(ctx, config)
    p = ctx.params
    from .experiments import compare_models, default_benchmark
    from .synth import load_dataset

    if p["train_data"] and p["test_data"]:
        X_tr, y_tr = load_dataset(p["train_data"])
        X_te, y_te = load_dataset(p["test_data"])
    elif p["train_data"] or p["test_data"]:
        raise click.ClickException("--train-data and --test-data must be given together")
    else:
        (X_tr, y_tr), (X_te, y_te) = default_benchmark(seed=p["seed"])

    rows = compare_models(X_tr, y_tr, X_te, y_te, seed=p["seed"])
    dicts = [{"model": r.model, "rmse": r.rmse, "r2": r.r2} for r in rows]
    path = _write(p["out_dir"], "compare.csv", _table(dicts, ["model", "rmse", "r2"]))
    click.echo(f"{'model':<10} {'rmse':>8} {'r2':>8}")
    for r in rows:
        r2 = "undef" if r.r2 is None else f"{r.r2:.4f}"
        click.echo(f"{r.model:<10} {r.rmse:>8.4f} {r2:>8}")
    click.echo(f"table written to {path}")


@main.command()
@common_options
@click.option("--nodes", type=int, default=5, show_default=True)
@click.option("--rounds", type=int, default=10, show_default=True)
@click.option("--decay", type=float, default=0.9, show_default=True)
@click.option("--alpha", type=float, default=0.1, show_default=True)
@click.option("--quorum", type=int, default=1, show_default=True)
@click.pass_context
def federate(ctx, config, seed, out_dir, nodes, rounds, decay, alpha, quorum):
    """In-process federated simulation over disjoint data shards."""
    _apply_overrides(ctx, config)
    p = ctx.params
    from .experiments import federate_experiment
    from .federation import FederationConfig

    rows = federate_experiment(
        n_nodes=p["nodes"],
        n_rounds=p["rounds"],
        cfg=FederationConfig(decay=p["decay"], correction=p["alpha"], min_nodes=p["quorum"]),
        seed=p["seed"],
    )
    dicts = [
        {
            "round": r.round_index,
            "version": r.version,
            "test_rmse": r.test_rmse,
            "test_r2": r.test_r2,
            "train_r2": r.train_r2,
            "correction": r.correction,
        }
        for r in rows
    ]
    path = _write(
        p["out_dir"], "federate.csv",
        _table(dicts, ["round", "version", "test_rmse", "test_r2", "train_r2", "correction"]),
    )
    for d in dicts:
        click.echo(
            f"round {d['round']:>2} v{d['version']:<3} test_r2={d['test_r2']:.4f} "
            f"test_rmse={d['test_rmse']:.4f}"
        )
    click.echo(f"table written to {path}")


@main.command("bench-aggregation")
@common_options
@click.option("--node-counts", default="2,4,8,16,32", show_default=True,
              help="Comma-separated fleet sizes.")
@click.option("--rounds-per-point", type=int, default=30, show_default=True)
@click.option("--param-dim", type=int, default=50000, show_default=True)
@click.pass_context
def bench_aggregation_cmd(ctx, config, seed, out_dir, node_counts, rounds_per_point, param_dim):
    """Aggregation wall/CPU time versus number of nodes."""
    _apply_overrides(ctx, config)
    p = ctx.params
    from .experiments import bench_aggregation

    counts = [int(part) for part in str(p["node_counts"]).split(",") if part.strip()]
    rows = bench_aggregation(
        node_counts=counts, rounds_per_point=p["rounds_per_point"],
        param_dim=p["param_dim"], seed=p["seed"],
    )
    dicts = [
        {
            "n_nodes": r.n_nodes,
            "param_dim": r.param_dim,
            "mean_wall_s": f"{r.mean_wall_s:.6e}",
            "mean_cpu_s": f"{r.mean_cpu_s:.6e}",
            "rounds": r.rounds,
        }
        for r in rows
    ]
    path = _write(
        p["out_dir"], "bench_aggregation.csv",
        _table(dicts, ["n_nodes", "param_dim", "mean_wall_s", "mean_cpu_s", "rounds"]),
    )
    for d in dicts:
        click.echo(f"nodes {d['n_nodes']:>3}: wall {d['mean_wall_s']} s, cpu {d['mean_cpu_s']} s")
    click.echo(f"table written to {path}")


@main.command("glare-eval")
@common_options
@click.option("--participants", type=int, default=10, show_default=True)
@click.option("--duration", type=float, default=30.0, show_default=True)
@click.option("--scenario-file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON scenario definitions; defaults to the six canonical scenarios.")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Serialized predictor; omit to train one on the synthetic benchmark.")
@click.pass_context
def glare_eval_cmd(ctx, config, seed, out_dir, participants, duration, scenario_file, model_path):
    """Before/after glare severity per scenario across simulated participants."""
    _apply_overrides(ctx, config)
    p = ctx.params
    from .edge import load_scenarios
    from .ensemble import load_model
    from .experiments import default_benchmark, glare_eval, train_model

    if p["model_path"]:
        model = load_model(p["model_path"])
    else:
        (X_tr, y_tr), _ = default_benchmark(seed=p["seed"])
        model, _ = train_model(X_tr, y_tr, seed=p["seed"], mlp_max_epochs=800)
    scenarios = load_scenarios(p["scenario_file"]) if p["scenario_file"] else None
    rows = glare_eval(
        model, participants=p["participants"], duration_s=p["duration"],
        seed=p["seed"], scenarios=scenarios,
    )
    dicts = [
        {
            "scenario_id": r.scenario_id,
            "name": r.name,
            "before_mean": f"{r.before_mean:.4f}",
            "after_mean": f"{r.after_mean:.4f}",
            "before_rating": r.before_rating,
            "after_rating": r.after_rating,
            "participants": r.participants,
        }
        for r in rows
    ]
    path = _write(
        p["out_dir"], "glare_eval.csv",
        _table(dicts, ["scenario_id", "name", "before_mean", "after_mean",
                       "before_rating", "after_rating", "participants"]),
    )
    for d in dicts:
        click.echo(
            f"scenario {d['scenario_id']} {d['name']:<16} before {d['before_mean']} "
            f"(W{d['before_rating']}) -> after {d['after_mean']} (W{d['after_rating']})"
        )
    click.echo(f"table written to {path}")


@main.command()
@common_options
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--http-port", type=int, default=8000, show_default=True)
@click.option("--tcp-port", type=int, default=8700, show_default=True)
@click.option("--round-period", type=float, default=10.0, show_default=True)
@click.option("--decay", type=float, default=0.9, show_default=True)
@click.option("--alpha", type=float, default=0.1, show_default=True)
@click.option("--quorum", type=int, default=1, show_default=True)
@click.option("--data-dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Append-only log directory; defaults to OUT_DIR/service.")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Initial model artifact; omit to train a seeded bootstrap.")
@click.pass_context
def serve(ctx, config, seed, out_dir, host, http_port, tcp_port, round_period, decay, alpha,
          quorum, data_dir, model_path):
    """Run the cloud service (HTTP + framed TCP + round scheduler)."""
    _apply_overrides(ctx, config)
    p = ctx.params
    from .federation import FederationConfig
    from .service.core import CloudService
    from .service.runner import serve_forever
    from .service.storage import EventLog

    model = _load_or_bootstrap_model(p["model_path"], p["seed"])
    storage = EventLog(p["data_dir"] or (p["out_dir"] / "service"))
    service = CloudService(
        bootstrap_model=model,
        cfg=FederationConfig(decay=p["decay"], correction=p["alpha"], min_nodes=p["quorum"]),
        round_period_s=p["round_period"],
        storage=storage,
    )
    click.echo(
        f"serving http on {p['host']}:{p['http_port']}, tcp on {p['host']}:{p['tcp_port']}, "
        f"logs in {storage.root}"
    )
    try:
        asyncio.run(serve_forever(service, p["host"], p["http_port"], p["tcp_port"]))
    except KeyboardInterrupt:
        click.echo("interrupted")


def _load_or_bootstrap_model(model_path, seed):
    from .ensemble import load_model
    from .experiments import train_model
    from .synth import SyntheticDatasetSpec, generate_dataset

    if model_path:
        return load_model(model_path)
    X, y = generate_dataset(SyntheticDatasetSpec(n_samples=400, seed=seed))
    model, _ = train_model(X, y, seed=seed, mlp_max_epochs=600)
    return model


@main.command()
@common_options
@click.option("--server", default="127.0.0.1:8700", show_default=True,
              help="host:port of the service's TCP listener.")
@click.option("--node-id", required=True)
@click.option("--scenario", "scenario_id", type=int, default=2, show_default=True)
@click.option("--duration", type=float, default=60.0, show_default=True,
              help="Simulated seconds to run.")
@click.option("--time-scale", type=float, default=0.1, show_default=True,
              help="Real seconds per simulated second (0 = flat out).")
@click.option("--min-train", type=int, default=8, show_default=True)
@click.pass_context
def node(ctx, config, seed, out_dir, server, node_id, scenario_id, duration, time_scale, min_train):
    """Run one simulated edge node against a running service."""
    _apply_overrides(ctx, config)
    p = ctx.params
    from .node_client import NodeClient, NodeClientConfig

    host, _, port = str(p["server"]).partition(":")
    if not port:
        raise click.ClickException(f"--server must be host:port, got {p['server']!r}")
    client = NodeClient(
        NodeClientConfig(
            node_id=p["node_id"],
            host=host,
            port=int(port),
            scenario_id=p["scenario_id"],
            duration_s=p["duration"],
            time_scale=p["time_scale"],
            min_train_samples=p["min_train"],
            seed=p["seed"],
        )
    )
    try:
        client.run()
    except (ConnectionError, OSError, RuntimeError) as exc:
        raise click.ClickException(str(exc))
    click.echo(f"{p['node_id']} finished after {p['duration']} simulated seconds")


if __name__ == "__main__":
    main()
