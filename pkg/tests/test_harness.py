import csv
import dataclasses
import json
import warnings

import numpy as np
import pytest

from ptrlearn import cli, harness
from ptrlearn.data import balanced_accuracy, rank_sum_test
from ptrlearn.forest import fit
from ptrlearn.harness import BudgetError, DatasetSpec, ExperimentConfig, ResultRecord

SMALL = dict(
    datasets=(DatasetSpec("tg", synthetic="two_gaussians"),),
    budgets=(3,),
    n_splits=5,
    trials=30,
    max_lambda_steps=15,
    rounds=2,
    n_trees=15,
)


@pytest.fixture(autouse=True)
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


@pytest.fixture(scope="module")
def coldstart_records():
    cfg = ExperimentConfig(**SMALL, coldstart_methods=("ptr", "rs", "km", "fft"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return cfg, harness.run_coldstart(cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(**{**SMALL, "budgets": (0,)})
    with pytest.raises(ValueError):
        ExperimentConfig(**SMALL, coldstart_methods=("magic",))
    with pytest.raises(ValueError):
        ExperimentConfig(**SMALL, strategies=("random",))
    with pytest.raises(ValueError):
        ExperimentConfig(datasets=())
    with pytest.raises(ValueError):
        DatasetSpec("x")
    with pytest.raises(ValueError):
        DatasetSpec("x", synthetic="spirals")
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"datasets": [], "bogus": 1})


def test_config_json_round_trip(tmp_path):
    cfg = ExperimentConfig(**SMALL)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert ExperimentConfig.from_json(path) == cfg
    assert ExperimentConfig.from_dict({"config": cfg.to_dict()}) == cfg


def test_one_record_per_key_and_budget(coldstart_records):
    cfg, records = coldstart_records
    keys = [r.key for r in records]
    assert len(keys) == len(set(keys)) == 4 * 5
    assert keys == sorted(keys)
    for r in records:
        assert r.oracle_queries == r.expected_queries
        if r.method != "ptr":
            assert r.oracle_queries == 3


def test_budget_audit_rejects_overspend():
    bad = ResultRecord("d", "rs", 3, "none", 0, 0, 0.5, 4, 3, 4, 0, 0)
    with pytest.raises(BudgetError):
        harness.audit_budget([bad])


def test_summary_recomputes_from_records(tmp_path, coldstart_records):
    cfg, records = coldstart_records
    paths = harness.emit_results(records, tmp_path, cfg, "coldstart")
    back = harness.read_records(paths["records.csv"])
    assert [r.key for r in back] == [r.key for r in records]
    with open(paths["summary.csv"], newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    ref = {r.split_seed: r.balanced_accuracy for r in back if r.method == "rs"}
    for row in rows:
        acc = [r.balanced_accuracy for r in back if r.method == row["method"]]
        assert float(row["mean"]) == pytest.approx(np.mean(acc), abs=1e-9)
        assert float(row["std"]) == pytest.approx(np.std(acc, ddof=1), abs=1e-9)
        if row["method"] == "rs":
            assert row["flag"] == ""
            continue
        p = rank_sum_test(acc, list(ref.values()))
        assert float(row["p_vs_rs"]) == pytest.approx(p, abs=1e-12)
        expected = "" if p >= 0.05 else ("↑" if np.mean(acc) > np.mean(list(ref.values())) else "↓")
        assert row["flag"] == expected
    manifest = json.loads(paths["manifest.json"].read_text())
    assert manifest["split_seeds"] == [0, 1, 2, 3, 4] and manifest["command"] == "coldstart"


def test_emit_errors(tmp_path, coldstart_records):
    cfg, records = coldstart_records
    with pytest.raises(ValueError):
        harness.emit_results([], tmp_path, cfg, "coldstart")
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        harness.emit_results(records, blocker / "sub", cfg, "coldstart")


def test_rs_with_full_budget_matches_supervised():
    cfg = ExperimentConfig(**{**SMALL, "n_splits": 1}, coldstart_methods=("rs",))
    spec = cfg.datasets[0]
    pool, test = harness._prepare(cfg, spec, 0)
    cfg = dataclasses.replace(cfg, budgets=(pool.n,))
    (record,) = harness.run_coldstart(cfg)
    model = fit(pool.features, pool.labels, seed=0, n_trees=cfg.n_trees)
    assert record.balanced_accuracy == balanced_accuracy(test.labels, model.predict(test.features))


def test_al_rounds_and_reduction_to_coldstart():
    cfg = ExperimentConfig(**{**SMALL, "n_splits": 2})
    records = harness.run_al(cfg)
    for r in records:
        assert r.oracle_queries <= (r.round + 1) * r.budget
    zero = harness.run_al(dataclasses.replace(cfg, rounds=0))
    cold = harness.run_coldstart(dataclasses.replace(cfg, coldstart_methods=("ptr", "rs")))
    strip = lambda rs: [(r.method, r.split_seed, r.balanced_accuracy, r.oracle_queries) for r in rs]  # noqa: E731
    assert strip(zero) == strip(cold)


def write_config(tmp_path, **extra):
    path = tmp_path / "cfg.json"
    cfg = ExperimentConfig(**{**SMALL, **extra})
    path.write_text(json.dumps(cfg.to_dict()))
    return path


def test_cli_coldstart_deterministic_and_manifest_replay(tmp_path, capsys):
    cfg = write_config(tmp_path, n_splits=2, coldstart_methods=("ptr", "rs"))
    assert cli.main(["coldstart", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["coldstart", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "records.csv").read_bytes()
    assert a == (tmp_path / "b" / "records.csv").read_bytes()
    manifest = tmp_path / "a" / "manifest.json"
    assert cli.main(["coldstart", "--config", str(manifest), "--out", str(tmp_path / "c")]) == 0
    assert a == (tmp_path / "c" / "records.csv").read_bytes()
    assert (tmp_path / "a" / "summary.csv").read_bytes() == (tmp_path / "c" / "summary.csv").read_bytes()


def test_cli_seed_override_and_jobs(tmp_path):
    cfg = write_config(tmp_path, n_splits=2, coldstart_methods=("rs",))
    assert cli.main(["coldstart", "--config", str(cfg), "--out", str(tmp_path / "s"), "--seed", "7"]) == 0
    seeds = {r.split_seed for r in harness.read_records(tmp_path / "s" / "records.csv")}
    assert seeds == {7, 8}
    assert cli.main(["coldstart", "--config", str(cfg), "--out", str(tmp_path / "j"), "--jobs", "2"]) == 0
    assert cli.main(["coldstart", "--config", str(cfg), "--out", str(tmp_path / "k")]) == 0
    assert (tmp_path / "j" / "records.csv").read_bytes() == (tmp_path / "k" / "records.csv").read_bytes()


def test_cli_al_graph_compare_and_ptr_fit(tmp_path):
    cfg = write_config(tmp_path, n_splits=1)
    assert cli.main(["al", "--config", str(cfg), "--out", str(tmp_path / "al")]) == 0
    rounds = {r.round for r in harness.read_records(tmp_path / "al" / "records.csv")}
    assert rounds <= {0, 1, 2} and 0 in rounds
    assert cli.main(["graph-compare", "--config", str(cfg), "--out", str(tmp_path / "g")]) == 0
    with open(tmp_path / "g" / "graph_compare.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["kind"] for r in rows] == ["rips", "sigma"] and all(0 <= float(r["purity_size"]) <= 1 for r in rows)
    with open(tmp_path / "g" / "curves.csv", newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 2 * 101
    assert cli.main(["ptr-fit", "--config", str(cfg), "--out", str(tmp_path / "p")]) == 0
    payload = json.loads((tmp_path / "p" / "ptr_tg_0.json").read_text())
    assert {"delta", "r", "t", "tau", "assignment", "lambda_final"} <= set(payload)


def test_cli_failures_exit_nonzero(tmp_path, capsys):
    assert cli.main(["al", "--config", str(tmp_path / "missing.json")]) == 1
    assert "error" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"datasets": [{"name": "x", "path": str(tmp_path / "nope.csv")}]}))
    assert cli.main(["coldstart", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1
    with pytest.raises(SystemExit):
        cli.main(["unknown"])


def test_csv_dataset_path(tmp_path):
    rng = np.random.default_rng(0)
    X = np.concatenate([rng.normal(0, 1, (40, 2)), rng.normal(6, 1, (40, 2))])
    path = tmp_path / "blobs.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["a", "b", "class"])
        for row, label in zip(X, ["p"] * 40 + ["q"] * 40):
            w.writerow([*row, label])
    cfg = ExperimentConfig(**{**SMALL, "datasets": (DatasetSpec("blobs", path=str(path)),), "n_splits": 1})
    records = harness.run_coldstart(cfg)
    assert {r.dataset for r in records} == {"blobs"}
