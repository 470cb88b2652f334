import numpy as np
import pytest

from perfest import ConfigError, ContractViolation, Workflow, WorkflowError, register_workflow, workflow_variants
from perfest.frame import select_rows
from perfest.learners import PROBA
from perfest.workflow import run_user_workflow, standard_wf, timeseries_wf

from conftest import regression_frame


def split(df, n_train):
    return select_rows(df, np.arange(n_train)), select_rows(df, np.arange(n_train, df.n_rows))


def test_standard_wf_knn_on_iris(iris):
    idx = np.arange(150)
    train, test = select_rows(iris, idx[idx % 5 != 0]), select_rows(iris, idx[idx % 5 == 0])
    res = standard_wf("Species ~ .", train, test, learner="knn", learner_pars={"k": 3})
    assert len(res.trues) == 30 == len(res.preds)
    acc = np.mean(res.preds.values == res.trues)
    assert acc > 0.9
    assert res.times["train"] >= 0 and res.times["test"] >= 0


def test_learner_never_sees_test_target(iris):
    seen = {}

    class Spy:
        class_order = None

        def predict(self, test):
            seen["target"] = test["Species"].values.tolist()
            return ["setosa"] * test.n_rows

    from perfest import register_learner
    register_learner("spy", lambda formula, train: Spy())
    train, test = split(iris, 140)
    standard_wf("Species ~ .", train, test, learner="spy")
    assert seen["target"] == [None] * 10


def test_probability_predictions(iris):
    train, test = split(iris, 120)
    res = standard_wf("Species ~ .", train, test, learner="knn", predictor_pars={"type": "prob"})
    assert res.preds.shape == PROBA
    np.testing.assert_allclose(res.preds.values.sum(axis=1), 1.0)


def test_standard_wf_na_omit_aligns_truths():
    df = regression_frame(30)
    x1 = df["x1"].values.copy()
    x1[[25, 27]] = np.nan
    df["x1"] = x1
    train, test = split(df, 20)
    res = standard_wf("y ~ .", train, test, learner="linreg", pre=["na.omit"])
    assert len(res.trues) == 8
    expected = np.delete(df["y"].values[20:], [5, 7])
    np.testing.assert_array_equal(res.trues, expected)


def test_timeseries_refits_every_step():
    df = regression_frame(50)
    train, test = split(df, 30)
    res = timeseries_wf("y ~ .", train, test, type="slide", relearn_step=5, learner="linreg")
    fits = res.extras["fits"]
    assert [f["offset"] for f in fits] == [0, 5, 10, 15]
    assert all(f["trainRows"] == 30 for f in fits)
    grow = timeseries_wf("y ~ .", train, test, type="grow", relearn_step=5, learner="linreg")
    assert [f["trainRows"] for f in grow.extras["fits"]] == [30, 35, 40, 45]
    assert len(res.preds) == 20
    np.testing.assert_array_equal(res.trues, df["y"].values[30:])


def test_timeseries_step_one_matches_manual_refit():
    df = regression_frame(25)
    train, test = split(df, 20)
    res = timeseries_wf("y ~ .", train, test, type="slide", relearn_step=1, learner="meanBaseline")
    y = df["y"].values
    expected = [y[i:20 + i].mean() for i in range(5)]
    np.testing.assert_allclose(res.preds.values, expected)


def test_workflow_defaults_and_round_trip():
    w = Workflow(learner="knn", **{"learner.pars": {"k": 5}})
    assert w.wf == "standardWF" and w.wf_id == "knn"
    assert w.params["learner_pars"] == {"k": 5}
    assert Workflow.from_dict(w.to_dict()) == w
    ts = Workflow(learner="linreg", type="slide", **{"learner.pars": {"relearn.step": 3}})
    assert ts.wf == "timeseriesWF" and ts.params["relearn_step"] == 3
    with pytest.raises(ConfigError):
        Workflow("timeseriesWF", learner="linreg")


def test_user_workflow_contract():
    df = regression_frame(20)
    train, test = split(df, 15)

    def good(form, train, test, bias=0.0):
        return {"trues": test["y"].values, "preds": np.zeros(test.n_rows) + bias, "note": "hi"}

    res = run_user_workflow(good, "y ~ .", train, test, {"bias": 1.0})
    assert res.preds.values.tolist() == [1.0] * 5 and res.extras == {"note": "hi"}
    with pytest.raises(ContractViolation):
        run_user_workflow(lambda f, tr, ts: {"preds": []}, "y ~ .", train, test)
    with pytest.raises(ContractViolation):
        run_user_workflow(lambda f, tr, ts: {"trues": [1.0], "preds": [1.0, 2.0]}, "y ~ .", train, test)
    with pytest.raises(WorkflowError):
        run_user_workflow(lambda f, tr, ts: 1 / 0, "y ~ .", train, test)


def test_registered_workflow_runs_through_workflow_object():
    register_workflow("constWF", lambda f, tr, ts, c=2.0: {"trues": ts["y"].values, "preds": [c] * ts.n_rows})
    df = regression_frame(10)
    train, test = split(df, 8)
    res = Workflow("constWF", c=4.0).run("y ~ .", train, test)
    assert res.preds.values.tolist() == [4.0, 4.0]
    with pytest.raises(ConfigError):
        register_workflow("standardWF", lambda: None)


def test_variants_count_and_ids():
    v = workflow_variants(learner="svm", learner_pars={"cost": [1, 2, 3, 4, 5], "gamma": [0.1, 0.05, 0.01]})
    assert len(v) == 15
    assert [w.wf_id for w in v[:3]] == ["svm.v1", "svm.v2", "svm.v3"]
    # last declared parameter varies fastest
    assert [w.params["learner_pars"]["gamma"] for w in v[:3]] == [0.1, 0.05, 0.01]
    assert v[3].params["learner_pars"] == {"cost": 2, "gamma": 0.1}


def test_variants_as_is_and_step_lists():
    v = workflow_variants(learner="knn", learner_pars={"k": [1, 3]}, pre=["scale", "centralImp"],
                          as_is=["weights"], weights=[0.2, 0.8])
    assert len(v) == 2
    assert v[0].params["pre"] == ["scale", "centralImp"] and v[0].params["weights"] == [0.2, 0.8]
    with pytest.raises(ConfigError):
        workflow_variants(learner="knn", learner_pars={"k": []})


def test_variants_single_combination_gets_v1():
    assert [w.wf_id for w in workflow_variants(learner="knn")] == ["knn.v1"]
