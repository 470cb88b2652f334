import json

import pytest

from perfest import load_iris, load_results
from perfest.cli import main


def write_config(tmp_path, **over):
    load_iris().to_csv(tmp_path / "iris.csv")
    cfg = {
        "tasks": [{"id": "iris", "csvPath": "iris.csv", "formula": "Species ~ ."}],
        "workflows": [{"learner": "knn", "learner.pars": {"k": 3}},
                      {"variants": {"learner": "knn", "learner.pars": {"k": [1, 7]}}},
                      {"wf": "standardWF", "wfID": "mode", "learner": "modeBaseline"}],
        "estimation": {"metrics": ["err", "acc"], "method": {"name": "CV", "nFolds": 5, "seed": 1234}},
        "cluster": "off",
        "output": "res.json",
    }
    cfg.update(over)
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    return path


@pytest.fixture
def results_file(tmp_path):
    assert main(["run", str(write_config(tmp_path)), "--quiet"]) == 0
    return tmp_path / "res.json"


def test_run_writes_results(results_file, capsys):
    res = load_results(results_file)
    assert res.workflow_ids == ["knn", "knn.v1", "knn.v2", "mode"]
    assert len(res.cell("iris", "knn")) == 5


def test_run_prints_trace(tmp_path, capsys):
    assert main(["run", str(write_config(tmp_path))]) == 0
    assert "Iteration :  1  2  3  4  5" in capsys.readouterr().out


def test_unknown_metric_exit_2_and_no_output(tmp_path, capsys):
    cfg = write_config(tmp_path, estimation={"metrics": ["mse", "nope"], "method": {"name": "CV"}},
                       workflows=[{"learner": "nolearner"}])
    assert main(["run", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "nope" in err and "nolearner" in err and "mse" in err
    assert not (tmp_path / "res.json").exists()


def test_summary_rank_top(results_file, tmp_path, capsys):
    assert main(["summary", str(results_file), "--csv", str(tmp_path / "s.csv")]) == 0
    out = capsys.readouterr().out
    assert "*Workflow: knn" in out and "invalid" in out
    assert (tmp_path / "s.csv").read_text().startswith("task,workflow,metric")
    assert main(["rank", str(results_file), "--top", "2", "--maxs", "acc"]) == 0
    out = capsys.readouterr().out
    assert out.count("\n      1 ") == 2 and out.count("\n      3 ") == 0
    assert main(["top", str(results_file)]) == 0


def test_subset_and_merge(results_file, tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["subset", str(results_file), "--workflows", r"\.v", "--output", str(a)]) == 0
    assert main(["subset", str(results_file), "--workflows", "^(knn|mode)$", "--output", str(b)]) == 0
    assert load_results(a).workflow_ids == ["knn.v1", "knn.v2"]
    m = tmp_path / "m.json"
    assert main(["merge", str(a), str(b), "--by", "workflows", "--output", str(m)]) == 0
    assert sorted(load_results(m).workflow_ids) == ["knn", "knn.v1", "knn.v2", "mode"]
    assert main(["merge", str(a), str(a), "--output", str(m)]) == 2


def test_merge_seed_mismatch_exit_2(tmp_path, capsys):
    d1, d2 = tmp_path / "one", tmp_path / "two"
    d1.mkdir()
    d2.mkdir()
    main(["run", str(write_config(d1)), "--quiet"])
    cfg = write_config(d2, estimation={"metrics": ["err"], "method": {"name": "CV", "nFolds": 5, "seed": 9}},
                       workflows=[{"wfID": "other", "learner": "knn"}])
    main(["run", str(cfg), "--quiet"])
    code = main(["merge", str(d1 / "res.json"), str(d2 / "res.json"), "--output", str(tmp_path / "m.json")])
    assert code == 2 and "seed" in capsys.readouterr().err


def test_compare_and_diagrams(results_file, tmp_path, capsys):
    rep = tmp_path / "rep.json"
    assert main(["compare", str(results_file), "--metric", "err", "--output", str(rep)]) == 0
    out = capsys.readouterr().out
    assert "N >= 2" in out
    data = json.loads(rep.read_text())
    assert "t.test" in data["err"] and data["err"]["F.test"] is None
    assert main(["cd-diagram", str(results_file), "--metric", "err", "--output", str(tmp_path / "cd.svg")]) == 2
    svg = tmp_path / "box.svg"
    assert main(["boxplot", str(results_file), "--metrics", "err", "--output", str(svg)]) == 0
    first = svg.read_text()
    main(["boxplot", str(results_file), "--metrics", "err", "--output", str(svg)])
    assert svg.read_text() == first and first.count("<rect") == 1 + 4


def test_list_metrics(capsys):
    assert main(["list-metrics"]) == 0
    assert "theil" in capsys.readouterr().out


def test_env_override_of_workers(tmp_path, monkeypatch):
    monkeypatch.setenv("PERFEST_WORKERS", "many")
    assert main(["run", str(write_config(tmp_path)), "--quiet"]) == 2
    monkeypatch.setenv("PERFEST_WORKERS", "2")
    assert main(["run", str(write_config(tmp_path)), "--quiet"]) == 0


def test_plugin_file(tmp_path):
    (tmp_path / "plug.py").write_text(
        "from perfest import register_learner\n"
        "from perfest.learners import ModeBaseline\n"
        "register_learner('myMode', ModeBaseline)\n")
    cfg = write_config(tmp_path, plugins=["plug.py"], workflows=[{"learner": "plugin:myMode"}])
    assert main(["run", str(cfg), "--quiet"]) == 0
    assert load_results(tmp_path / "res.json").workflow_ids == ["plugin:myMode"]
