import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perfest import CSVParseError, DataFrame, FormulaSyntaxError, PredTask, parse_formula, read_csv, write_csv
from perfest.frame import CATEGORICAL, NUMERIC, Column, concat_rows, parse_csv_text, select_rows


def test_read_csv_infers_kinds_and_missing():
    df = parse_csv_text("a,b,c\n1,x,2.5\nNA,y,\n3,NA,1e3\n")
    assert df["a"].kind == NUMERIC and df["b"].kind == CATEGORICAL
    assert np.isnan(df["a"].values[1])
    assert df["b"].values[2] is None
    assert df["c"].values.tolist()[2] == 1000.0
    assert math.isnan(df["c"].values[1])


def test_custom_na_tokens():
    df = parse_csv_text("a\n1\n?\n", na_tokens=("?",))
    assert df["a"].kind == NUMERIC
    assert df["a"].missing.tolist() == [False, True]


def test_ragged_row_reports_row_number():
    with pytest.raises(CSVParseError) as exc:
        parse_csv_text("a,b\n1,2\n3\n")
    assert exc.value.row == 3


def test_empty_csv_is_an_error():
    with pytest.raises(CSVParseError):
        parse_csv_text("")


def test_headerless_names():
    df = parse_csv_text("1,2\n3,4\n", header=False)
    assert df.names == ["col1", "col2"]


def test_read_csv_file_name_and_filelike(tmp_path):
    p = tmp_path / "sales.csv"
    p.write_text("q,r\n1,a\n")
    assert read_csv(p).name == "sales"
    assert read_csv(io.StringIO("q\n2\n"), name="x")["q"].values.tolist() == [2.0]


def test_csv_round_trip(iris, tmp_path):
    path = tmp_path / "iris.csv"
    write_csv(iris, path)
    back = read_csv(path)
    assert back == iris


def test_categories_sorted():
    col = Column.infer("c", ["b", "a", None, "b"])
    assert list(col.categories) == ["a", "b"]
    assert col.codes().tolist() == [1, 0, -1, 1]


def test_select_rows_allows_duplicates_and_tracks_origin(iris):
    sub = select_rows(iris, [3, 3, 0])
    assert sub.n_rows == 3
    assert sub.row_ids.tolist() == [3, 3, 0]
    assert select_rows(sub, [2]).row_ids.tolist() == [0]
    with pytest.raises(IndexError):
        select_rows(iris, [150])


def test_concat_rows():
    a = DataFrame.from_dict({"v": [1.0, 2.0]})
    b = DataFrame.from_dict({"v": [3.0]})
    assert concat_rows(a, b)["v"].values.tolist() == [1.0, 2.0, 3.0]


@pytest.mark.parametrize("text,target,preds", [
    ("Species ~ .", "Species", None),
    ("y ~ a + b", "y", ("a", "b")),
    ("  y~a  ", "y", ("a",)),
])
def test_parse_formula(text, target, preds):
    f = parse_formula(text)
    assert f.target == target and f.predictors == preds


@pytest.mark.parametrize("text", ["~ a", "y ~", "y ~ a +", "y a", "y ~ a ~ b", "y ~ . + a"])
def test_bad_formulas(text):
    with pytest.raises(FormulaSyntaxError):
        parse_formula(text)


def test_pred_task_defaults(iris):
    t = PredTask("Species ~ .", iris)
    assert t.id == "iris.Species"
    assert t.task_type == "classification"
    assert t.predictors == ["Sepal.Length", "Sepal.Width", "Petal.Length", "Petal.Width"]
    assert "Task Name         :: iris.Species" in repr(t)


def test_pred_task_rejects_missing_target():
    df = DataFrame.from_dict({"x": [1.0, 2.0], "y": [1.0, None]})
    with pytest.raises(ValueError):
        PredTask("y ~ x", df)


def test_pred_task_unknown_column(iris):
    with pytest.raises(KeyError):
        PredTask("Species ~ Nope", iris)


def test_copy_semantics(iris):
    live = PredTask("Species ~ .", iris)
    frozen = PredTask("Species ~ .", iris, copy=True)
    values = iris["Sepal.Length"].values.copy()
    iris["Sepal.Length"] = values * 0
    assert live.data["Sepal.Length"].values.sum() == 0
    assert frozen.data["Sepal.Length"].values.sum() > 0


def test_timeseries_task_needs_numeric_target(iris):
    with pytest.raises(ValueError):
        PredTask("Species ~ .", iris, task_type="timeseries")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.one_of(st.none(), st.floats(-1e6, 1e6, allow_nan=False)), min_size=1, max_size=20))
def test_numeric_csv_round_trip_property(values):
    df = DataFrame.from_dict({"v": values, "k": ["a"] * len(values)})
    back = parse_csv_text(write_csv(df))
    if all(v is None for v in values):
        assert back["v"].missing.all()
    else:
        np.testing.assert_array_equal(back["v"].values, df["v"].values)
