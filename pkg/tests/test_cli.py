import json

import pytest

from mdrml import cli


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert cli.main(["gen", "--n", "300", "--seed", "3", "--out", str(d / "raw.csv"),
                     "--truth", str(d / "truth.json")]) == 0
    assert cli.main(["clean", str(d / "raw.csv"), "--out", str(d / "clean.csv"),
                     "--report", str(d / "report.json")]) == 0
    assert cli.main(["features", str(d / "clean.csv"), "--out", str(d / "features.csv")]) == 0
    assert cli.main(["split", str(d / "features.csv"), "--out", str(d / "split.json")]) == 0
    return d


def test_step_outputs(work):
    report = json.loads((work / "report.json").read_text())
    assert report["rows_in"] == 300
    split = json.loads((work / "split.json").read_text())
    assert len(split["test"]) == 60


def test_train_evaluate_compare_explain(work):
    d = work
    for kind, params in (("adaboost", '{"n_stages": 5}'), ("logistic_regression", "{}")):
        assert cli.main(["train", str(d / "features.csv"), "--kind", kind, "--split", str(d / "split.json"),
                         "--params", params, "--out", str(d / f"{kind}.json")]) == 0
    assert cli.main(["evaluate", str(d / "features.csv"), "--split", str(d / "split.json"),
                     "--model", str(d / "adaboost.json"), str(d / "logistic_regression.json"),
                     "--out", str(d / "metrics.json"), "--predictions", str(d / "preds.json"),
                     "--table", str(d / "table.csv")]) == 0
    assert (d / "table.csv").read_text().startswith("Performance Indicators,")
    assert cli.main(["compare", str(d / "preds.json"), "--out", str(d / "sig.json"),
                     "--csv", str(d / "sig.csv")]) == 0
    assert len(json.loads((d / "sig.json").read_text())["pairs"]) == 1
    assert cli.main(["explain", str(d / "features.csv"), "--split", str(d / "split.json"),
                     "--model", str(d / "adaboost.json"), "--instances", "0,5", "--n-samples", "200",
                     "--out", str(d / "exp")]) == 0
    assert sorted(p.name for p in (d / "exp").iterdir()) == [
        "instance_0.json", "instance_0.svg", "instance_5.json", "instance_5.svg"]


def test_tune(work):
    d = work
    assert cli.main(["tune", str(d / "features.csv"), "--kind", "logistic_regression",
                     "--split", str(d / "split.json"), "--grid", '{"l2_lambda": [0.1, 1.0]}',
                     "--folds", "3", "--out", str(d / "tuned.json"), "--result", str(d / "cv.json")]) == 0
    assert len(json.loads((d / "cv.json").read_text())["cells"]) == 2


def test_gen_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert cli.main(["gen", "--n", "50", "--seed", "9", "--out", str(tmp_path / f"{name}.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_bad_kind_is_usage_error(work):
    with pytest.raises(SystemExit) as exc:
        cli.main(["train", str(work / "features.csv"), "--kind", "svm", "--out", "x.json"])
    assert exc.value.code == 2


def test_malformed_csv_exit_code(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("not,a,valid\nheader,at,all\n")
    assert cli.main(["clean", str(bad), "--out", str(tmp_path / "c.csv")]) == 3


def test_bad_params_exit_code(work, tmp_path):
    assert cli.main(["train", str(work / "features.csv"), "--kind", "adaboost",
                     "--params", '{"n_trees": 3}', "--out", str(tmp_path / "m.json")]) == 2
