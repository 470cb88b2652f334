import numpy as np
import pytest

from perfest import CostBenefitMatrix, DataFrame, Predictions, WorkflowError
from perfest.learners import LABELS, NUMERIC_PREDS, PROBA
from perfest.prepost import (apply_post, apply_pre, mode_label, post_cast2int, post_maxutil, post_na2central,
                             post_only_pos, pre_central_imp, pre_na_omit, pre_scale, pre_smote,
                             pre_undersample)

from conftest import two_class_frame


def frames():
    train = DataFrame.from_dict({"a": [1.0, 2.0, 3.0, None], "b": ["x", None, "y", "x"], "t": [1.0, 2.0, 3.0, 4.0]})
    test = DataFrame.from_dict({"a": [None, 5.0], "b": ["y", None], "t": [None, None]})
    return train, test


def test_mode_label_tie_goes_to_smallest():
    assert mode_label(["b", "a", "b", "a"]) == "a"
    assert mode_label([None, None]) is None


def test_scale_uses_training_statistics():
    train = DataFrame.from_dict({"a": [1.0, 2.0, 3.0], "c": [5.0, 5.0, 5.0], "t": [0.0, 1.0, 2.0]})
    test = DataFrame.from_dict({"a": [4.0], "c": [6.0], "t": [0.0]})
    tr, ts = pre_scale(train, test, "t")
    np.testing.assert_allclose(tr["a"].values, [-1, 0, 1])
    assert ts["a"].values[0] == pytest.approx(2.0)
    assert ts["c"].values[0] == pytest.approx(1.0)
    np.testing.assert_array_equal(tr["t"].values, train["t"].values)


def test_central_imputation():
    train, test = frames()
    tr, ts = pre_central_imp(train, test, "t")
    assert tr["a"].values[3] == 2.0
    assert tr["b"].values[1] == "x"
    assert ts["a"].values[0] == 2.0 and ts["b"].values[1] == "x"


def test_central_imputation_all_missing_column():
    train = DataFrame.from_dict({"a": [None, None], "t": [1.0, 2.0]})
    with pytest.raises(WorkflowError):
        pre_central_imp(train, train, "t")


def test_na_omit_keeps_origin_ids():
    train, test = frames()
    test.row_ids = np.arange(test.n_rows)
    tr, ts = pre_na_omit(train, test, "t")
    assert tr.n_rows == 2
    assert ts.n_rows == 0


def test_undersample_keeps_minority():
    df = two_class_frame(100, 10)
    tr, _ = pre_undersample(df, df, "cls", rng=np.random.default_rng(1), perc_under=2.0)
    vals = list(tr["cls"].values)
    assert vals.count("rare") == 10 and vals.count("common") == 20


def test_undersample_needs_classification():
    df = DataFrame.from_dict({"x": [1.0, 2.0], "y": [1.0, 2.0]})
    with pytest.raises(WorkflowError):
        pre_undersample(df, df, "y")


def test_smote_counts_and_interpolation():
    df = two_class_frame(100, 10)
    tr, _ = pre_smote(df, df, "cls", rng=np.random.default_rng(3), perc_over=200, perc_under=200, k=3)
    vals = list(tr["cls"].values)
    assert vals.count("rare") == 10 + 20
    assert vals.count("common") == 40
    syn = tr.row_ids == -1
    assert syn.sum() == 20
    rare_x = df["x"].values[df["cls"].values == "rare"]
    sx = tr["x"].values[syn]
    assert sx.min() >= rare_x.min() - 1e-12 and sx.max() <= rare_x.max() + 1e-12


def test_smote_is_seeded():
    df = two_class_frame(60, 8)
    a, _ = pre_smote(df, df, "cls", rng=np.random.default_rng(5))
    b, _ = pre_smote(df, df, "cls", rng=np.random.default_rng(5))
    assert a == b


def test_post_steps():
    target = DataFrame.from_dict({"t": [1.0, 3.0, 10.0]})["t"]
    p = Predictions(NUMERIC_PREDS, [np.nan, -2.0, 7.5])
    assert post_na2central(p, target).values.tolist() == [3.0, -2.0, 7.5]
    assert post_only_pos(p, target).values[1] == 0.0
    assert post_cast2int(p, target, inf_lim=0, sup_lim=5).values.tolist()[1:] == [0.0, 5.0]
    with pytest.raises(WorkflowError):
        post_cast2int(p, target)
    labels = DataFrame.from_dict({"c": ["b", "a", "b"]})["c"]
    assert post_na2central(Predictions(LABELS, [None, "a"]), labels).values.tolist() == ["b", "a"]


def test_maxutil_changes_decision():
    probs = Predictions(PROBA, [[0.7, 0.3], [0.9, 0.1]], ("neg", "pos"))
    cb = CostBenefitMatrix(("neg", "pos"), [[1, -1], [-10, 5]])
    out = post_maxutil(probs, cb_matrix=cb)
    # expected utility of "pos" for row 1: 0.7*-1 + 0.3*5 = 0.8 > 0.7 - 3 = -2.3
    assert out.values.tolist() == ["pos", "neg"]


def test_cost_benefit_sign_rules():
    with pytest.raises(ValueError):
        CostBenefitMatrix(("a", "b"), [[1, 2], [0, 1]])
    with pytest.raises(ValueError):
        CostBenefitMatrix(("a", "b"), [[1, 0, 0], [0, 1, 0]])


def test_chains_and_step_parameters():
    df = two_class_frame(40, 10)
    tr, _ = apply_pre(["undersampl"], df, df, "cls", {"perc.under": 1}, rng=np.random.default_rng(0))
    assert list(tr["cls"].values).count("common") == 10
    target = DataFrame.from_dict({"t": [1.0]})["t"]
    out = apply_post(["onlyPos", "cast2int"], Predictions(NUMERIC_PREDS, [-1.0, 9.0]), target,
                     {"infLim": 0, "supLim": 4})
    assert out.values.tolist() == [0.0, 4.0]
    with pytest.raises(WorkflowError):
        apply_pre(["nope"], df, df, "cls")
