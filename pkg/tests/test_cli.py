import json

from conftest import SMALL_SPEC
from relex.cli import run

SMALL_CONFIG = {
    "arch": {"num_layers": 2, "width": 16, "output_dim": 4},
    "train": {"temperature": 0.1, "learning_rate": 1e-2, "batch_size": 16,
              "max_epochs": 4, "patience": 3, "seed": 3},
    "inference": {"k": 10, "c": 0.5},
}


def write_config(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(SMALL_CONFIG))
    return str(path)


def run_chain(tmp_path, spec_file, seed=11):
    """synth -> train -> predict -> eval, asserting exit 0 at each step."""
    data = str(tmp_path / "data")
    config = write_config(tmp_path)
    model = str(tmp_path / "model.json")
    pred = str(tmp_path / "pred.jsonl")
    report = str(tmp_path / "report.json")
    steps = [
        ["synth", "--spec", str(spec_file), "--out", data, "--seed", str(seed)],
        ["train", "--data", data, "--config", config, "--out", model,
         "--seed", str(seed)],
        ["predict", "--data", data, "--model", model, "--out", pred,
         "--config", config],
        ["eval", "--pred", pred, "--data", data, "--out", report,
         "--m-values", "5,10"],
    ]
    for argv in steps:
        assert run(argv) == 0, f"step failed: {argv}"
    return model, pred, report


def test_happy_path_chain(tmp_path, small_spec_file, capsys):
    model, pred, report = run_chain(tmp_path, small_spec_file)
    for path in (model, pred, report):
        assert json.loads(open(path).readline())
    assert run(["validate", "--data", str(tmp_path / "data")]) == 0
    out = capsys.readouterr().out
    assert '"ok": true' in out


def test_flags_override_config_file(tmp_path, small_spec_file, capsys):
    data = str(tmp_path / "data")
    config = write_config(tmp_path)
    model = str(tmp_path / "model.json")
    assert run(["synth", "--spec", str(small_spec_file), "--out", data]) == 0
    assert run(["train", "--data", data, "--config", config, "--out", model]) == 0
    capsys.readouterr()
    # k flag overrides the config file's k=10 with the datastore size + 1
    bad_k = 1000
    code = run(["predict", "--data", data, "--model", model,
                "--out", str(tmp_path / "p.jsonl"), "--config", config,
                "--k", str(bad_k)])
    assert code == 1
    assert "exceeds datastore size" in capsys.readouterr().err


def test_eval_dimension_conflict_exits_1(tmp_path, small_spec_file, capsys):
    model, pred, report = run_chain(tmp_path, small_spec_file)
    other = tmp_path / "other"
    spec = dict(SMALL_SPEC)
    spec["num_classes"] = 6
    spec["label_sets_per_cluster"] = [[0], [1], [1, 2]]
    spec_file = tmp_path / "spec6.json"
    spec_file.write_text(json.dumps(spec))
    assert run(["synth", "--spec", str(spec_file), "--out", str(other)]) == 0
    # same sample ids (same generator layout), different declared class count
    (other / "test.jsonl").write_text((tmp_path / "data" / "test.jsonl").read_text())
    capsys.readouterr()
    code = run(["eval", "--pred", pred, "--truth", str(other / "test.jsonl")])
    assert code == 1
    assert "dimension conflict" in capsys.readouterr().err


def test_missing_input_exits_2(tmp_path, capsys):
    code = run(["train", "--data", str(tmp_path / "absent"),
                "--out", str(tmp_path / "m.json")])
    assert code == 2
    assert "error (io)" in capsys.readouterr().err


def test_unknown_flag_prints_usage_and_exits_1(capsys):
    code = run(["synth", "--bogus", "x"])
    assert code == 1
    err = capsys.readouterr().err
    assert "--bogus" in err or "Usage" in err


def test_unknown_subcommand_exits_1(capsys):
    assert run(["frobnicate"]) == 1


def test_gridsearch_command(tmp_path, small_spec_file):
    data = str(tmp_path / "data")
    assert run(["synth", "--spec", str(small_spec_file), "--out", data]) == 0
    grid = {
        "cells": [
            {"arch": SMALL_CONFIG["arch"], "train": SMALL_CONFIG["train"],
             "k": 5, "c": 0.5},
        ]
    }
    grid_file = tmp_path / "grid.json"
    grid_file.write_text(json.dumps(grid))
    out = tmp_path / "results.json"
    assert run(["gridsearch", "--data", data, "--grid", str(grid_file),
                "--out", str(out)]) == 0
    results = json.loads(out.read_text())["results"]
    assert results[0]["status"] == "ok"


def test_build_pairs_command(tmp_path, capsys):
    tokens = tmp_path / "tokens.jsonl"
    tokens.write_text(
        '{"sentence_id": "s0", "hidden_dim": 2, '
        '"token_embeddings": [[1.0, 1.0], [3.0, 3.0]], '
        '"mentions": [{"head": [0], "tail": [1], "relations": [0]}]}\n'
    )
    out = tmp_path / "pairs.jsonl"
    assert run(["build-pairs", "--tokens", str(tokens), "--out", str(out)]) == 0
    record = json.loads(out.read_text())
    assert record["x"] == [1.0, 1.0, 3.0, 3.0]


def test_timing_log_sidecar(tmp_path, small_spec_file):
    log = tmp_path / "timing.log"
    assert run(["--timing-log", str(log), "synth", "--spec", str(small_spec_file),
                "--out", str(tmp_path / "data")]) == 0
    line = log.read_text().strip()
    assert "cmd=synth" in line and "wall=" in line and "cpu=" in line


def test_validate_exits_1_on_bad_data(tmp_path, small_spec_file, capsys):
    data = tmp_path / "data"
    assert run(["synth", "--spec", str(small_spec_file), "--out", str(data)]) == 0
    lines = (data / "test.jsonl").read_text().splitlines()
    first = json.loads(lines[0])
    first["labels"] = [99]
    lines[0] = json.dumps(first)
    (data / "test.jsonl").write_text("\n".join(lines) + "\n")
    assert run(["validate", "--data", str(data)]) == 1
