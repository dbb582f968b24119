import csv
import json

import pytest

from fairsample import (Learner, SweepSpec, SynthSpec, fit, generate,
                        run_ssb_sweep)
from fairsample.cli import main
from fairsample.dataset import holdout_split
from fairsample.group_metrics import disc_vector


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


SYNTH = {"synth": {"n": 400, "d": 2, "group1_share": 0.4, "seed": 21}}
TREE = {"kind": "decision_tree", "max_depth": 3, "min_leaf": 5}


def test_metrics_matches_library_call(tmp_path):
    cfg = write_config(tmp_path, {
        "dataset": SYNTH, "learner": TREE, "metrics": ["EO", "SD"],
        "seed": 4})
    out = tmp_path / "out"
    assert main(["metrics", "--config", cfg, "--out", str(out)]) == 0

    ds = generate(SynthSpec(n=400, d=2, group1_share=0.4, seed=21))
    pool, test = holdout_split(ds, 0.3, 4)
    model = fit(Learner("decision_tree", max_depth=3, min_leaf=5), pool)
    scores, labels = model.predict(test.X)
    expected = disc_vector(test.y, labels, scores, test.a, ["EO", "SD"])

    with open(out / "metrics.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["metric"] for r in rows] == ["EO", "SD"]
    for row, rep in zip(rows, expected):
        v0, v1, d = rep.as_floats()
        assert float(row["value_a0"]) == v0
        assert float(row["value_a1"]) == v1
        assert float(row["disc"]) == d

    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 4
    assert manifest["dataset_sha256"] == ds.fingerprint()
    assert manifest["rows_written"] == 2
    assert 0 < manifest["population_ratio"] < 1


def test_sweep_matches_library_call(tmp_path):
    cfg = write_config(tmp_path, {
        "dataset": SYNTH, "learner": TREE, "metrics": ["SD"],
        "sweep": {"family": "ssb_size", "grid": [20, 50], "replicates": 3},
        "seed": 6})
    out = tmp_path / "out"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0

    ds = generate(SynthSpec(n=400, d=2, group1_share=0.4, seed=21))
    spec = SweepSpec(family="ssb_size", grid=(20, 50), replicates=3, seed=6,
                     learner=Learner("decision_tree", max_depth=3,
                                     min_leaf=5),
                     metrics=("SD",))
    expected = run_ssb_sweep(ds, spec)
    expected.write_csv(tmp_path / "expected.csv")
    assert (out / "sweep.csv").read_bytes() == \
        (tmp_path / "expected.csv").read_bytes()
    assert (out / "bias_estimates.csv").exists()


def test_seed_override_beats_config(tmp_path):
    base = {"dataset": SYNTH, "learner": TREE, "metrics": ["SD"],
            "sweep": {"family": "ssb_size", "grid": [20, 50],
                      "replicates": 3},
            "seed": 6}
    cfg = write_config(tmp_path, base)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["sweep", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(out2),
                 "--seed", "7"]) == 0
    assert (out1 / "sweep.csv").read_bytes() != \
        (out2 / "sweep.csv").read_bytes()
    assert json.loads((out2 / "manifest.json").read_text())["seed"] == 7


def test_missing_config_exit_2(tmp_path, capsys):
    assert main(["metrics", "--config", str(tmp_path / "nope.json")]) == 2
    assert "config error" in capsys.readouterr().err


def test_invalid_json_exit_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["metrics", "--config", str(path)]) == 2


def test_unknown_keys_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, {"dataset": SYNTH, "typo_key": 1})
    assert main(["metrics", "--config", cfg, "--out",
                 str(tmp_path / "o")]) == 2
    assert "typo_key" in capsys.readouterr().err
    cfg = write_config(tmp_path, {
        "dataset": SYNTH, "learner": {"kind": "knn", "n_neighbors": 3}})
    assert main(["metrics", "--config", cfg, "--out",
                 str(tmp_path / "o")]) == 2


def test_missing_data_file_exit_3(tmp_path, capsys):
    schema = tmp_path / "schema.json"
    schema.write_text(json.dumps({
        "target": "outcome", "positive_label": "pos", "sensitive": "group",
        "privileged_value": "a0",
        "features": [{"name": "x0", "kind": "numeric"}]}))
    cfg = write_config(tmp_path, {
        "dataset": {"csv": str(tmp_path / "missing.csv"),
                    "schema": str(schema)}})
    assert main(["metrics", "--config", cfg, "--out",
                 str(tmp_path / "o")]) == 3
    assert "data error" in capsys.readouterr().err


def test_mse_on_classification_exit_2(tmp_path):
    cfg = write_config(tmp_path, {
        "dataset": SYNTH, "learner": TREE, "metrics": ["MSE"],
        "sweep": {"grid": [20, 50], "replicates": 3}})
    assert main(["decompose", "--config", cfg, "--out",
                 str(tmp_path / "o")]) == 2


def test_synth_roundtrip_through_sweep(tmp_path):
    gen_cfg = write_config(tmp_path, {"dataset": SYNTH}, "gen.json")
    data_dir = tmp_path / "data"
    assert main(["synth", "--config", gen_cfg, "--out", str(data_dir)]) == 0
    assert (data_dir / "data.csv").exists()
    assert (data_dir / "schema.json").exists()

    run_cfg = write_config(tmp_path, {
        "dataset": {"csv": str(data_dir / "data.csv"),
                    "schema": str(data_dir / "schema.json")},
        "learner": TREE, "metrics": ["SD"],
        "sweep": {"family": "ssb_size", "grid": [20, 50],
                  "replicates": 3}}, "run.json")
    out = tmp_path / "run_out"
    assert main(["sweep", "--config", run_cfg, "--out", str(out)]) == 0
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert {r["grid_value"] for r in rows} == {"20", "50"}


def test_threads_flag_does_not_change_output(tmp_path):
    cfg = write_config(tmp_path, {
        "dataset": SYNTH, "learner": TREE, "metrics": ["SD"],
        "sweep": {"family": "collect", "grid": [4, 8], "replicates": 3,
                  "fixed_majority": 30},
        "seed": 2})
    out1, out4 = tmp_path / "t1", tmp_path / "t4"
    assert main(["sweep", "--config", cfg, "--out", str(out1),
                 "--threads", "1"]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(out4),
                 "--threads", "4"]) == 0
    assert (out1 / "sweep.csv").read_bytes() == \
        (out4 / "sweep.csv").read_bytes()
