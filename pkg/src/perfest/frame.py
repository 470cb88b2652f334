"""Columnar datasets, CSV ingestion and predictive task definitions.

Numeric columns hold ``float64`` arrays with ``NaN`` marking missing cells.
Categorical columns hold object arrays of ``str`` labels with ``None`` marking
missing cells, plus the sorted tuple of known categories.
"""

from __future__ import annotations

import copy as _copy
import csv
import io
import os
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exceptions import CSVParseError, FormulaSyntaxError

NUMERIC = "numeric"
CATEGORICAL = "categorical"

CLASSIFICATION = "classification"
REGRESSION = "regression"
TIMESERIES = "timeseries-regression"
TASK_TYPES = (CLASSIFICATION, REGRESSION, TIMESERIES)

DEFAULT_NA_TOKENS = ("NA", "")

_NUMBER_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def is_number_token(token: str) -> bool:
    return bool(_NUMBER_RE.match(token.strip()))


class Column:
    """A named, typed column with missing-value support."""

    __slots__ = ("name", "kind", "values", "categories")

    def __init__(self, name: str, kind: str, values, categories: Sequence[str] | None = None):
        if kind not in (NUMERIC, CATEGORICAL):
            raise ValueError(f"unknown column kind {kind!r}")
        self.name = name
        self.kind = kind
        if kind == NUMERIC:
            arr = np.asarray(values, dtype=float).reshape(-1)
            if np.isinf(arr).any():
                raise ValueError(f"column {name!r} contains non-finite values")
            self.values = arr
            self.categories: tuple[str, ...] = ()
        else:
            arr = np.empty(len(values), dtype=object)
            for i, v in enumerate(values):
                arr[i] = None if _is_missing(v) else str(v)
            present = {v for v in arr if v is not None}
            if categories is None:
                categories = sorted(present)
            categories = tuple(str(c) for c in categories)
            unknown = present.difference(categories)
            if unknown:
                raise ValueError(f"column {name!r} has labels outside its categories: {sorted(unknown)}")
            self.values = arr
            self.categories = categories

    @classmethod
    def infer(cls, name: str, values: Sequence) -> "Column":
        """Build a column, numeric iff every present value is a number."""
        present = [v for v in values if not _is_missing(v)]
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)
               for v in present):
            return cls(name, NUMERIC, [np.nan if _is_missing(v) else v for v in values])
        return cls(name, CATEGORICAL, values)

    @property
    def is_numeric(self) -> bool:
        return self.kind == NUMERIC

    @property
    def missing(self) -> np.ndarray:
        if self.kind == NUMERIC:
            return np.isnan(self.values)
        return np.array([v is None for v in self.values], dtype=bool)

    def take(self, indices) -> "Column":
        return Column(self.name, self.kind, self.values[np.asarray(indices, dtype=int)], self.categories)

    def codes(self) -> np.ndarray:
        """Integer category codes (-1 for missing); categorical only."""
        lookup = {c: i for i, c in enumerate(self.categories)}
        return np.array([-1 if v is None else lookup[v] for v in self.values], dtype=int)

    def tolist(self) -> list:
        if self.kind == NUMERIC:
            return [None if np.isnan(v) else float(v) for v in self.values]
        return list(self.values)

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, Column):
            return NotImplemented
        return (self.name == other.name and self.kind == other.kind
                and self.categories == other.categories and self.tolist() == other.tolist())

    def __repr__(self):
        return f"Column({self.name!r}, {self.kind}, n={len(self)})"


def _is_missing(v) -> bool:
    if v is None:
        return True
    if isinstance(v, (float, np.floating)) and np.isnan(v):
        return True
    return False


class DataFrame:
    """Ordered collection of equal-length columns.

    ``row_ids`` tracks, for every row, its position in the frame this one was
    derived from through row selection, so dropped rows can be accounted for.
    """

    def __init__(self, columns: Iterable[Column], name: str | None = None, n_rows: int | None = None):
        cols = list(columns)
        names = [c.name for c in cols]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate column names: {dup}")
        lengths = {len(c) for c in cols}
        if len(lengths) > 1:
            raise ValueError("columns have different lengths")
        self._columns = {c.name: c for c in cols}
        if cols:
            self.n_rows = lengths.pop()
        else:
            self.n_rows = int(n_rows or 0)
        self.name = name
        self.row_ids = np.arange(self.n_rows)

    @classmethod
    def from_dict(cls, data: Mapping[str, Sequence], name: str | None = None) -> "DataFrame":
        return cls([Column.infer(k, v) for k, v in data.items()], name=name)

    @property
    def columns(self) -> list[Column]:
        return list(self._columns.values())

    @property
    def names(self) -> list[str]:
        return list(self._columns)

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_rows, len(self._columns)

    def __getitem__(self, name: str) -> Column:
        try:
            return self._columns[name]
        except KeyError:
            raise KeyError(f"no column named {name!r}") from None

    def __setitem__(self, name: str, values) -> None:
        # in-place replacement; frames bound to tasks with copy=False see it
        col = values if isinstance(values, Column) else Column.infer(name, list(values))
        if col.name != name:
            col = Column(name, col.kind, col.values, col.categories or None)
        if self._columns and len(col) != self.n_rows:
            raise ValueError(f"column {name!r} has {len(col)} rows, frame has {self.n_rows}")
        if not self._columns:
            self.n_rows = len(col)
            self.row_ids = np.arange(self.n_rows)
        self._columns[name] = col

    def __contains__(self, name) -> bool:
        return name in self._columns

    def __len__(self) -> int:
        return self.n_rows

    def __eq__(self, other):
        if not isinstance(other, DataFrame):
            return NotImplemented
        return self.names == other.names and all(a == b for a, b in zip(self.columns, other.columns))

    def __repr__(self):
        return f"DataFrame({self.n_rows}x{len(self._columns)}, name={self.name!r})"

    def copy(self) -> "DataFrame":
        out = _copy.deepcopy(self)
        return out

    def select_rows(self, indices) -> "DataFrame":
        return select_rows(self, indices)

    def with_columns(self, columns: Iterable[Column]) -> "DataFrame":
        """New frame with the given columns replaced (same order) or appended."""
        cols = dict(self._columns)
        for c in columns:
            cols[c.name] = c
        out = DataFrame(cols.values(), name=self.name, n_rows=self.n_rows)
        out.row_ids = self.row_ids.copy()
        return out

    def mask_column(self, name: str) -> "DataFrame":
        """Copy of the frame with every cell of ``name`` set missing."""
        col = self[name]
        if col.kind == NUMERIC:
            masked = Column(name, NUMERIC, np.full(self.n_rows, np.nan))
        else:
            masked = Column(name, CATEGORICAL, [None] * self.n_rows, col.categories)
        return self.with_columns([masked])

    def to_csv(self, path=None, na_token: str = "NA") -> str:
        return write_csv(self, path, na_token=na_token)


def select_rows(data: DataFrame, indices) -> DataFrame:
    """Rows of ``data`` in the given order; duplicates allowed."""
    idx = np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices, dtype=int).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= data.n_rows):
        bad = idx[(idx < 0) | (idx >= data.n_rows)][0]
        raise IndexError(f"row index {bad} out of range for {data.n_rows} rows")
    out = DataFrame([c.take(idx) for c in data.columns], name=data.name, n_rows=len(idx))
    out.row_ids = data.row_ids[idx]
    return out


def concat_rows(first: DataFrame, second: DataFrame) -> DataFrame:
    """Stack two frames with identical column layouts."""
    if first.names != second.names:
        raise ValueError("cannot concatenate frames with different columns")
    cols = []
    for a in first.columns:
        b = second[a.name]
        if a.kind != b.kind:
            raise ValueError(f"column {a.name!r} kind mismatch")
        if a.kind == NUMERIC:
            cols.append(Column(a.name, NUMERIC, np.concatenate([a.values, b.values])))
        else:
            cats = a.categories + tuple(c for c in b.categories if c not in a.categories)
            cols.append(Column(a.name, CATEGORICAL, np.concatenate([a.values, b.values]), cats))
    out = DataFrame(cols, name=first.name, n_rows=first.n_rows + second.n_rows)
    out.row_ids = np.concatenate([first.row_ids, second.row_ids])
    return out


# -- CSV -----------------------------------------------------------------------

def read_csv(path, na_tokens: Sequence[str] = DEFAULT_NA_TOKENS, header: bool = True,
             name: str | None = None) -> DataFrame:
    """Read a CSV file into a :class:`DataFrame`.

    Column kinds are inferred per column: numeric when every non-missing token
    is an integer, decimal or scientific literal, categorical otherwise.
    ``path`` may also be a file-like object.
    """
    if hasattr(path, "read"):
        text = path.read()
        default_name = name
    else:
        with open(path, newline="", encoding="utf-8") as fh:
            text = fh.read()
        default_name = name or os.path.splitext(os.path.basename(str(path)))[0]
    return parse_csv_text(text, na_tokens=na_tokens, header=header, name=default_name)


def parse_csv_text(text: str, na_tokens: Sequence[str] = DEFAULT_NA_TOKENS, header: bool = True,
                   name: str | None = None) -> DataFrame:
    rows = [r for r in csv.reader(io.StringIO(text))]
    # a trailing blank line yields an empty record
    while rows and rows[-1] == []:
        rows.pop()
    if not rows:
        raise CSVParseError("empty file")
    if header:
        names = [h.strip() for h in rows[0]]
        body = rows[1:]
        first_row = 2
    else:
        names = [f"col{i + 1}" for i in range(len(rows[0]))]
        body = rows
        first_row = 1
    width = len(names)
    for i, r in enumerate(body):
        if len(r) != width:
            raise CSVParseError(f"expected {width} fields, found {len(r)}", row=first_row + i)
    na = set(na_tokens)
    columns = []
    for j, col_name in enumerate(names):
        tokens = [r[j] for r in body]
        present = [t for t in tokens if t not in na]
        if all(is_number_token(t) for t in present):
            vals = [np.nan if t in na else float(t) for t in tokens]
            columns.append(Column(col_name, NUMERIC, vals))
        else:
            columns.append(Column(col_name, CATEGORICAL, [None if t in na else t for t in tokens]))
    return DataFrame(columns, name=name, n_rows=len(body))


def write_csv(data: DataFrame, path=None, na_token: str = "NA") -> str:
    """Write ``data`` as CSV; returns the text and writes it to ``path`` if given."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(data.names)
    cols = data.columns
    for i in range(data.n_rows):
        row = []
        for c in cols:
            v = c.values[i]
            if c.kind == NUMERIC:
                row.append(na_token if np.isnan(v) else repr(float(v)))
            else:
                row.append(na_token if v is None else v)
        writer.writerow(row)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    return text


# -- formulas and tasks --------------------------------------------------------

@dataclass(frozen=True)
class Formula:
    """``target ~ .`` (all predictors) or ``target ~ a + b``."""

    target: str
    predictors: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.predictors is not None and self.target in self.predictors:
            raise ValueError(f"target {self.target!r} listed among predictors")

    @property
    def uses_all(self) -> bool:
        return self.predictors is None

    def resolve(self, data: DataFrame) -> list[str]:
        if self.predictors is None:
            return [n for n in data.names if n != self.target]
        return list(self.predictors)

    def __str__(self):
        rhs = "." if self.predictors is None else " + ".join(self.predictors)
        return f"{self.target} ~ {rhs}"


_TOKEN_RE = re.compile(r"\s*(?:(?P<tilde>~)|(?P<plus>\+)|(?P<ident>[A-Za-z_][A-Za-z0-9_.]*|\.[A-Za-z_][A-Za-z0-9_.]*)|(?P<dot>\.))")


def parse_formula(text: str) -> Formula:
    """Parse ``"y ~ ."`` or ``"y ~ x1 + x2"``.

    Raises :class:`FormulaSyntaxError` with the offending position.
    """
    tokens = []
    pos = 0
    stripped_end = len(text.rstrip())
    while pos < stripped_end:
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise FormulaSyntaxError("unexpected character", text, pos)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()

    def expect(i, kind, what):
        if i >= len(tokens):
            raise FormulaSyntaxError(f"expected {what}", text, len(text))
        if tokens[i][0] != kind:
            raise FormulaSyntaxError(f"expected {what}", text, tokens[i][2])
        return tokens[i][1]

    target = expect(0, "ident", "target name")
    expect(1, "tilde", "'~'")
    if len(tokens) > 2 and tokens[2][0] == "dot":
        if len(tokens) > 3:
            raise FormulaSyntaxError("unexpected token after '.'", text, tokens[3][2])
        return Formula(target, None)
    preds = [expect(2, "ident", "predictor name")]
    i = 3
    while i < len(tokens):
        expect(i, "plus", "'+'")
        preds.append(expect(i + 1, "ident", "predictor name"))
        i += 2
    if target in preds:
        raise FormulaSyntaxError("target repeated among predictors", text, 0)
    return Formula(target, tuple(preds))


def as_formula(formula) -> Formula:
    return formula if isinstance(formula, Formula) else parse_formula(formula)


class PredTask:
    """A predictive task: a formula bound to a data frame."""

    def __init__(self, formula, data: DataFrame, id: str | None = None, copy: bool = False,
                 task_type: str | None = None, data_name: str | None = None):
        formula = as_formula(formula)
        if formula.target not in data:
            raise KeyError(f"target column {formula.target!r} not found in data")
        for p in formula.predictors or ():
            if p not in data:
                raise KeyError(f"predictor column {p!r} not found in data")
        target = data[formula.target]
        if target.missing.any():
            raise ValueError(f"target column {formula.target!r} has missing values")
        inferred = CLASSIFICATION if target.kind == CATEGORICAL else REGRESSION
        if task_type in (None, "auto"):
            task_type = inferred
        elif task_type in ("timeseries", TIMESERIES):
            if inferred != REGRESSION:
                raise ValueError("time-series tasks need a numeric target")
            task_type = TIMESERIES
        elif task_type != inferred:
            raise ValueError(f"task type {task_type!r} does not match target kind {target.kind}")
        self.formula = formula
        self.data_name = data_name or data.name or "data"
        self.id = id or f"{self.data_name}.{formula.target}"
        self.task_type = task_type
        self.copied = copy
        self._data = data.copy() if copy else data

    @property
    def data(self) -> DataFrame:
        return self._data

    @property
    def target(self) -> str:
        return self.formula.target

    @property
    def predictors(self) -> list[str]:
        return self.formula.resolve(self._data)

    @property
    def n_rows(self) -> int:
        return self._data.n_rows

    def describe(self) -> dict:
        return {"id": self.id, "formula": str(self.formula), "target": self.target,
                "taskType": self.task_type, "dataName": self.data_name, "nRows": self.n_rows}

    def __repr__(self):
        source = f"internal  {self.n_rows}x{len(self._data.names)} data frame." if self.copied else self.data_name
        return ("Prediction Task Object:\n"
                f"\tTask Name         :: {self.id}\n"
                f"\tTask Type         :: {self.task_type}\n"
                f"\tTarget Feature    :: {self.target}\n"
                f"\tFormula           :: {self.formula}\n"
                f"\tTask Data Source  :: {source}")


def make_task(formula, data: DataFrame, id: str | None = None, copy: bool = False,
              task_type: str | None = None, data_name: str | None = None) -> PredTask:
    return PredTask(formula, data, id=id, copy=copy, task_type=task_type, data_name=data_name)


def response_values(formula, data: DataFrame) -> Column:
    """Target column of ``data`` according to ``formula``."""
    formula = as_formula(formula)
    if formula.target not in data:
        raise KeyError(f"target column {formula.target!r} not found in data")
    return data[formula.target]
