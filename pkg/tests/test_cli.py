import csv
import json

import numpy as np
import pytest

from malurl import pipeline as pipeline_mod
from malurl.cli import main
from malurl.data_io import FEATURE_NAMES, generate_synthetic, load_csv, write_csv
from malurl.errors import TrainingError
from malurl.modelfile import ModelFile
from malurl.pipeline import PipelineConfig, run_pipeline

FAST_HGBC = '{"learning_rate": 0.1, "max_iter": 15, "min_samples_leaf": 10}'


def read_stamped_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# seed=") and "config_hash=" in lines[0]
    return list(csv.reader(lines[1:]))


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    write_csv(generate_synthetic(400, 0.3, seed=5), d / "data.csv", comment="seed=5")
    return d / "data.csv"


@pytest.fixture(scope="module")
def model_file(data_csv):
    path = data_csv.parent / "model.json"
    assert main(["train", "--data", str(data_csv), "--params", FAST_HGBC, "--out", str(path)]) == 0
    return path


def test_synth(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["synth", "--rows", "300", "--ratio", "0.5", "--seed", "3", "--out", str(out)]) == 0
    assert out.read_text().startswith("# seed=3 config_hash=")
    assert load_csv(out).n_rows == 300
    assert json.loads(capsys.readouterr().out)["rows"] == 300


def test_ingest(data_csv, capsys):
    assert main(["ingest", "--data", str(data_csv)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["rows"] == 400 and summary["features"] == list(FEATURE_NAMES)


def test_split(data_csv, tmp_path):
    assert main(["split", "--data", str(data_csv), "--seed", "1", "--out", str(tmp_path)]) == 0
    train, test = load_csv(tmp_path / "train.csv"), load_csv(tmp_path / "test.csv")
    assert train.n_rows + test.n_rows == 400
    assert train.n_rows == 300


def test_resample_with_figure(data_csv, tmp_path):
    out, fig = tmp_path / "bal.csv", tmp_path / "counts.svg"
    assert main(["resample", "--data", str(data_csv), "--preprocess", "--figure", str(fig), "--out", str(out)]) == 0
    counts = load_csv(out).class_counts()
    assert counts[0] == counts[1]
    assert fig.read_text().lstrip().startswith("<?xml")


def test_resample_rejects_missing_without_preprocess(data_csv, tmp_path):
    # SMOTE needs complete rows
    assert main(["resample", "--data", str(data_csv), "--out", str(tmp_path / "x.csv")]) == 3


def test_tune(data_csv, tmp_path, capsys):
    grid = '{"n_neighbors": [3, 5], "weights": ["uniform"]}'
    assert main(["tune", "--data", str(data_csv), "--model", "knn", "--grid", grid, "--folds", "3",
                 "--out", str(tmp_path)]) == 0
    rows = read_stamped_csv(tmp_path / "cv_table.csv")
    assert rows[0] == ["combo_id", "params", "fold", "score"]
    assert len(rows) == 1 + 2 * 4
    doc = json.loads((tmp_path / "search.json").read_text())
    assert doc["best_combination"] == json.loads(capsys.readouterr().out)["best_combination"]


def test_evaluate(data_csv, model_file, tmp_path):
    assert main(["evaluate", "--data", str(data_csv), "--model-file", str(model_file), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "eval_report.json").read_text())
    for key in ("accuracy", "precision_weighted", "recall_weighted", "f1_weighted", "auc"):
        assert 0.0 <= rep[key] <= 1.0
    assert rep["config_hash"] == ModelFile.load(model_file).metadata["config_hash"]


def test_roc(data_csv, model_file, tmp_path):
    assert main(["roc", "--data", str(data_csv), "--model-file", str(model_file), "--out", str(tmp_path)]) == 0
    rows = read_stamped_csv(tmp_path / "roc.csv")
    assert rows[0] == ["fpr", "tpr", "threshold"]
    assert rows[1] == ["0.0", "0.0", "inf"] and rows[-1][:2] == ["1.0", "1.0"]
    assert (tmp_path / "roc.svg").exists()


@pytest.mark.parametrize("method", ["permutation", "gain"])
def test_importance(data_csv, model_file, tmp_path, method):
    argv = ["importance", "--model-file", str(model_file), "--method", method, "--repeats", "2",
            "--out", str(tmp_path)]
    if method == "permutation":
        argv += ["--data", str(data_csv)]
    assert main(argv) == 0
    rows = read_stamped_csv(tmp_path / "importance.csv")
    assert rows[0] == ["feature", "importance", "rank"]
    assert sorted(int(r[2]) for r in rows[1:]) == list(range(1, 14))
    assert "not SHAP" in (tmp_path / "importance.csv").read_text().splitlines()[0]


def test_importance_permutation_needs_data(model_file, tmp_path):
    assert main(["importance", "--model-file", str(model_file), "--out", str(tmp_path)]) == 2


def test_model_file_round_trip_bit_exact(tmp_path):
    ds = generate_synthetic(1000, 0.25, seed=8)
    cfg = PipelineConfig(synthetic={"n_rows": 600, "imbalance_ratio": 0.3}, seed=2,
                         params=json.loads(FAST_HGBC), out=str(tmp_path), importance_repeats=1)
    res = run_pipeline(cfg, figures=False)
    back = ModelFile.load(tmp_path / "model.json")
    np.testing.assert_array_equal(back.predict_proba(ds), res.model_file.predict_proba(ds))


@pytest.mark.parametrize("kind", ["knn", "lr", "dt", "rf"])
def test_baseline_model_files_round_trip(data_csv, tmp_path, kind):
    params = {"rf": '{"n_estimators": 5}', "dt": "{}", "lr": '{"C": 1.0}', "knn": '{"n_neighbors": 5}'}[kind]
    path = tmp_path / "m.json"
    assert main(["train", "--data", str(data_csv), "--model", kind, "--params", params, "--out", str(path)]) == 0
    ds = load_csv(data_csv)
    a = ModelFile.load(path).predict_proba(ds)
    b = ModelFile.load(path).predict_proba(ds)
    np.testing.assert_array_equal(a, b)
    assert np.all((a >= 0) & (a <= 1))


def _pipeline(out, *extra):
    return main(["pipeline", "--synthetic", "500,0.3", "--seed", "4", "--params", FAST_HGBC, "--repeats", "2",
                 "--out", str(out), *extra])


def test_pipeline_artifacts_and_determinism(tmp_path):
    assert _pipeline(tmp_path / "a", "--compare", "lr,dt") == 0
    assert _pipeline(tmp_path / "b", "--compare", "lr,dt") == 0
    a, b = tmp_path / "a", tmp_path / "b"
    expected = {"class_counts.csv", "model.json", "eval_report.json", "eval_table.txt", "roc.csv",
                "comparison.csv", "importance.csv", "gain_importance.csv", "smote_counts.svg", "roc.svg",
                "importance.svg"}
    assert {p.name for p in a.iterdir()} == expected
    for name in expected:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    rep = json.loads((a / "eval_report.json").read_text())
    chash = rep["config_hash"]
    for name in expected - {"model.json", "eval_report.json"}:
        assert chash in (a / name).read_text(), name
    assert ModelFile.load(a / "model.json").metadata["config_hash"] == chash
    rows = read_stamped_csv(a / "comparison.csv")
    assert [r[0] for r in rows[1:]] == ["hgbc", "lr", "dt"]


def test_pipeline_threads_do_not_change_outputs(tmp_path):
    assert main(["--threads", "1", "pipeline", "--synthetic", "400,0.3", "--grid",
                 '{"max_iter": [5, 10]}', "--folds", "3", "--repeats", "2", "--no-figures",
                 "--out", str(tmp_path / "t1")]) == 0
    assert main(["--threads", "8", "pipeline", "--synthetic", "400,0.3", "--grid",
                 '{"max_iter": [5, 10]}', "--folds", "3", "--repeats", "2", "--no-figures",
                 "--out", str(tmp_path / "t8")]) == 0
    for name in ("model.json", "eval_report.json", "cv_table.csv", "search.json", "importance.csv"):
        assert (tmp_path / "t1" / name).read_bytes() == (tmp_path / "t8" / name).read_bytes(), name


def test_pipeline_config_file(tmp_path):
    cfg = {"version": 1, "model": "lr", "synthetic": {"n_rows": 300, "imbalance_ratio": 0.4},
           "params": {"C": 1.0}, "importance_repeats": 1, "seed": 9}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert main(["pipeline", "--config", str(path), "--no-figures", "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "eval_report.json").read_text())
    assert rep["model"] == "lr" and rep["seed"] == 9


def test_params_and_grid_are_exclusive(tmp_path):
    assert _pipeline(tmp_path, "--grid", "default") == 2
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"synthetic": {"n_rows": 100, "imbalance_ratio": 0.5}, "params": {}, "grid": {}}))
    assert main(["pipeline", "--config", str(cfg)]) == 2


def test_config_errors_exit_2(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"synthetic": {"n_rows": 100, "imbalance_ratio": 0.5}, "params": {}, "bogus": 1}))
    assert main(["pipeline", "--config", str(cfg)]) == 2
    assert main(["pipeline", "--synthetic", "100", "--out", str(tmp_path)]) == 2
    assert main(["pipeline", "--synthetic", "300,0.3", "--params", '{"learning_rate": -1}',
                 "--out", str(tmp_path / "neg")]) == 2


def test_data_errors_exit_3(tmp_path):
    assert main(["pipeline", "--data", str(tmp_path / "absent.csv"), "--out", str(tmp_path)]) == 3
    bad = tmp_path / "bad.csv"
    bad.write_text(",".join([*FEATURE_NAMES, "Type"]) + "\n" + ",".join(["1"] * 12 + ["x", "0"]) + "\n")
    assert main(["ingest", "--data", str(bad)]) == 3


def test_training_error_exit_4(tmp_path, capsys):
    # a column with no observed values cannot be imputed
    rows = [[("" if j == 3 else str(i + j)) for j in range(13)] + [str(i % 2)] for i in range(40)]
    path = tmp_path / "empty_col.csv"
    path.write_text("\n".join([",".join([*FEATURE_NAMES, "Type"])] + [",".join(r) for r in rows]) + "\n")
    assert main(["train", "--data", str(path), "--params", FAST_HGBC, "--out", str(tmp_path / "m.json")]) == 4
    assert "TCP_CONVERSATION_EXCHANGE" in capsys.readouterr().err


def test_failure_removes_partial_outputs(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise TrainingError("synthetic failure")

    monkeypatch.setattr(pipeline_mod, "permutation_importance", boom)
    out = tmp_path / "partial"
    assert _pipeline(out) == 4
    assert list(out.iterdir()) == []
    assert "[importance]" in capsys.readouterr().err
