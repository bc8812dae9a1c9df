import json

import pytest
from click.testing import CliRunner

from ecmirror.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def dataset_dir(tmp_path, runner):
    result = runner.invoke(
        main, ["generate", "--out-dir", str(tmp_path), "--samples", "120", "--seed", "3"]
    )
    assert result.exit_code == 0, result.output
    return tmp_path


def test_generate_writes_split(dataset_dir):
    train = (dataset_dir / "train.csv").read_text().splitlines()
    test = (dataset_dir / "test.csv").read_text().splitlines()
    assert len(train) == 97 and len(test) == 25  # header + rows


def test_generate_deterministic(tmp_path, runner):
    for sub in ("a", "b"):
        result = runner.invoke(
            main, ["generate", "--out-dir", str(tmp_path / sub), "--samples", "50", "--seed", "11"]
        )
        assert result.exit_code == 0
    assert (tmp_path / "a/train.csv").read_bytes() == (tmp_path / "b/train.csv").read_bytes()


def test_train_and_glare_eval(runner, dataset_dir, tmp_path):
    out = tmp_path / "model_out"
    result = runner.invoke(
        main,
        ["train", "--data", str(dataset_dir / "train.csv"), "--out-dir", str(out),
         "--mlp-epochs", "150", "--seed", "3"],
    )
    assert result.exit_code == 0, result.output
    summary = json.loads((out / "train_summary.json").read_text())
    assert summary["train_rmse"] < 0.2
    assert (out / "model.json").exists()

    result = runner.invoke(
        main,
        ["glare-eval", "--out-dir", str(out), "--participants", "2", "--duration", "5",
         "--model", str(out / "model.json"), "--seed", "3"],
    )
    assert result.exit_code == 0, result.output
    lines = (out / "glare_eval.csv").read_text().splitlines()
    assert len(lines) == 7  # header + six scenarios


def test_compare_on_files(runner, dataset_dir, tmp_path):
    out = tmp_path / "cmp"
    result = runner.invoke(
        main,
        ["compare", "--train-data", str(dataset_dir / "train.csv"),
         "--test-data", str(dataset_dir / "test.csv"), "--out-dir", str(out), "--seed", "3"],
    )
    assert result.exit_code == 0, result.output
    lines = (out / "compare.csv").read_text().splitlines()
    assert lines[0] == "model,rmse,r2"
    assert len(lines) == 7
    models = [line.split(",")[0] for line in lines[1:]]
    assert models == ["gbt", "mlp", "ridge_raw", "knn5", "dtree", "stacking"]


def test_compare_requires_both_files(runner, dataset_dir, tmp_path):
    result = runner.invoke(
        main, ["compare", "--train-data", str(dataset_dir / "train.csv"), "--out-dir", str(tmp_path)]
    )
    assert result.exit_code != 0
    assert "must be given together" in result.output


def test_federate_rows(runner, tmp_path):
    result = runner.invoke(
        main, ["federate", "--nodes", "2", "--rounds", "3", "--out-dir", str(tmp_path), "--seed", "5"]
    )
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "federate.csv").read_text().splitlines()
    assert len(lines) == 5  # header + round 0 + 3 rounds


def test_federate_single_node_matches_its_update(runner, tmp_path):
    # weighted aggregation over one participant is the identity, visible with correction off
    result = runner.invoke(
        main,
        ["federate", "--nodes", "1", "--rounds", "2", "--alpha", "0.0",
         "--out-dir", str(tmp_path), "--seed", "5"],
    )
    assert result.exit_code == 0, result.output


def test_bench_aggregation_rows(runner, tmp_path):
    result = runner.invoke(
        main,
        ["bench-aggregation", "--node-counts", "1,2", "--rounds-per-point", "3",
         "--param-dim", "500", "--out-dir", str(tmp_path)],
    )
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "bench_aggregation.csv").read_text().splitlines()
    assert len(lines) == 3


def test_config_file_overrides_defaults(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"samples": 30, "out-dir": str(tmp_path / "cfgout")}))
    result = runner.invoke(main, ["generate", "--config", str(cfg)])
    assert result.exit_code == 0, result.output
    assert len((tmp_path / "cfgout" / "train.csv").read_text().splitlines()) == 25

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"no-such-flag": 1}))
    result = runner.invoke(main, ["generate", "--config", str(bad), "--out-dir", str(tmp_path)])
    assert result.exit_code != 0


def test_explicit_flag_beats_config(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"samples": 30}))
    result = runner.invoke(
        main,
        ["generate", "--config", str(cfg), "--samples", "40", "--out-dir", str(tmp_path / "o")],
    )
    assert result.exit_code == 0, result.output
    assert len((tmp_path / "o" / "train.csv").read_text().splitlines()) == 33


def test_node_requires_valid_server(runner, tmp_path):
    result = runner.invoke(
        main, ["node", "--node-id", "n1", "--server", "nowhere", "--out-dir", str(tmp_path)]
    )
    assert result.exit_code != 0
    assert "host:port" in result.output
