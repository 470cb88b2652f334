"""Prediction containers and the small built-in learners.

The built-ins (k-nearest neighbours, least squares, constant baselines) exist
to drive the estimation machinery; anything else plugs in through
:func:`register_learner`.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .exceptions import WorkflowError
from .frame import CATEGORICAL, NUMERIC, DataFrame, Formula, as_formula

LABELS = "labels"
NUMERIC_PREDS = "numeric"
PROBA = "probabilityMatrix"


class Predictions:
    """Workflow predictions: a label vector, a numeric vector or a row-wise
    class probability matrix (columns follow ``class_order``)."""

    def __init__(self, shape: str, values, class_order=None):
        if shape == LABELS:
            arr = np.empty(len(values), dtype=object)
            for i, v in enumerate(values):
                arr[i] = None if v is None or (isinstance(v, float) and np.isnan(v)) else str(v)
        elif shape == NUMERIC_PREDS:
            arr = np.asarray(values, dtype=float).reshape(-1)
        elif shape == PROBA:
            arr = np.asarray(values, dtype=float)
            if arr.ndim != 2:
                raise ValueError("probability predictions must be a 2-D matrix")
            if class_order is None or len(class_order) != arr.shape[1]:
                raise ValueError("probability matrix needs one class label per column")
            if arr.size and ((arr < 0).any() or np.abs(arr.sum(axis=1) - 1).max() > 1e-9):
                raise ValueError("probability rows must be non-negative and sum to 1")
            class_order = tuple(str(c) for c in class_order)
        else:
            raise ValueError(f"unknown prediction shape {shape!r}")
        self.shape = shape
        self.values = arr
        self.class_order = class_order

    def __len__(self):
        return self.values.shape[0]

    def take(self, idx) -> "Predictions":
        return Predictions(self.shape, self.values[np.asarray(idx, dtype=int)], self.class_order)

    def as_labels(self) -> np.ndarray:
        """Label vector; probability rows resolve by argmax, ties to the lowest index."""
        if self.shape == LABELS:
            return self.values
        if self.shape == PROBA:
            out = np.empty(len(self), dtype=object)
            for i, j in enumerate(np.argmax(self.values, axis=1)):
                out[i] = self.class_order[j]
            return out
        raise ValueError("numeric predictions have no labels")

    @staticmethod
    def concat(parts: list["Predictions"]) -> "Predictions":
        if not parts:
            raise ValueError("nothing to concatenate")
        shape = parts[0].shape
        if any(p.shape != shape for p in parts):
            raise ValueError("cannot concatenate predictions of different shapes")
        if shape == PROBA:
            order = parts[0].class_order
            if any(p.class_order != order for p in parts):
                raise ValueError("probability blocks disagree on class order")
            return Predictions(shape, np.vstack([p.values for p in parts]), order)
        return Predictions(shape, np.concatenate([p.values for p in parts]))

    def tolist(self):
        if self.shape == NUMERIC_PREDS:
            return [None if np.isnan(v) else float(v) for v in self.values]
        if self.shape == PROBA:
            return self.values.tolist()
        return list(self.values)

    def __repr__(self):
        return f"Predictions({self.shape}, n={len(self)})"


def as_predictions(values, class_order=None) -> Predictions:
    """Coerce raw workflow output to :class:`Predictions`."""
    if isinstance(values, Predictions):
        return values
    arr = np.asarray(values, dtype=object)
    if arr.ndim == 2:
        return Predictions(PROBA, arr.astype(float), class_order)
    flat = [v for v in arr if v is not None]
    if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in flat):
        return Predictions(NUMERIC_PREDS, [np.nan if v is None else v for v in arr])
    return Predictions(LABELS, list(arr))


# -- design matrices -----------------------------------------------------------

class Encoder:
    """Numeric + one-hot encoding fitted on a training frame."""

    def __init__(self, data: DataFrame, predictors: list[str], standardize: bool = True,
                 drop_first: bool = False):
        self.predictors = predictors
        self.standardize = standardize
        self.drop_first = drop_first
        self.stats = {}
        self._kinds = {p: data[p].kind for p in predictors}
        for p in predictors:
            col = data[p]
            if col.missing.any():
                raise WorkflowError(f"predictor {p!r} has missing values")
            if col.kind == NUMERIC:
                if standardize and len(col) > 1:
                    mu, sd = col.values.mean(), col.values.std(ddof=1)
                else:
                    mu, sd = (col.values.mean() if standardize else 0.0), 1.0
                self.stats[p] = (mu, sd if sd > 0 else 1.0)
            else:
                self.stats[p] = col.categories[1:] if drop_first else col.categories

    @property
    def width(self) -> int:
        return sum(len(s) if self._kinds[p] == CATEGORICAL else 1 for p, s in self.stats.items())

    def transform(self, data: DataFrame) -> np.ndarray:
        blocks = []
        for p in self.predictors:
            col = data[p]
            if col.missing.any():
                raise WorkflowError(f"predictor {p!r} has missing values")
            st = self.stats[p]
            if self._kinds[p] == NUMERIC:
                mu, sd = st
                blocks.append(((col.values - mu) / sd)[:, None])
            else:
                blocks.append(np.array([[v == c for c in st] for v in col.values], dtype=float)
                              .reshape(len(col), len(st)))
        if not blocks:
            return np.empty((data.n_rows, 0))
        return np.hstack(blocks)


# -- models --------------------------------------------------------------------

class Model:
    """Fitted model; ``predict`` returns :class:`Predictions`."""

    def __init__(self, formula: Formula, train: DataFrame):
        self.formula = formula
        target = train[formula.target]
        self.classification = target.kind == CATEGORICAL
        self.class_order = target.categories if self.classification else None
        self.predictors = formula.resolve(train)

    def predict(self, test: DataFrame, type: str | None = None) -> Predictions:
        raise NotImplementedError

    def _shape(self, type):
        if not self.classification:
            return NUMERIC_PREDS
        return PROBA if type in ("prob", "probability", "raw", PROBA) else LABELS

    def _from_proba(self, proba: np.ndarray, type) -> Predictions:
        p = Predictions(PROBA, proba, self.class_order)
        if self._shape(type) == PROBA:
            return p
        return Predictions(LABELS, p.as_labels())


class KNN(Model):
    def __init__(self, formula, train, k: int = 3, weighted: bool = False):
        super().__init__(formula, train)
        if k < 1:
            raise WorkflowError("knn needs k >= 1")
        self.k = int(k)
        self.weighted = bool(weighted)
        self.encoder = Encoder(train, self.predictors)
        if self.encoder.width == 0:
            raise WorkflowError("knn needs at least one usable predictor")
        self.X = self.encoder.transform(train)
        target = train[formula.target]
        self.y = target.codes() if self.classification else target.values

    def _neighbours(self, Q: np.ndarray):
        d = np.sqrt(((Q[:, None, :] - self.X[None, :, :]) ** 2).sum(axis=2))
        k = min(self.k, len(self.X))
        # stable sort: equidistant points resolve by training order
        idx = np.argsort(d, axis=1, kind="stable")[:, :k]
        dist = np.take_along_axis(d, idx, axis=1)
        if self.weighted:
            w = 1.0 / np.maximum(dist, 1e-12)
        else:
            w = np.ones_like(dist)
        return idx, w

    def predict(self, test, type=None):
        Q = self.encoder.transform(test)
        idx, w = self._neighbours(Q)
        if not self.classification:
            return Predictions(NUMERIC_PREDS, (self.y[idx] * w).sum(axis=1) / w.sum(axis=1))
        proba = np.zeros((len(Q), len(self.class_order)))
        for j in range(len(self.class_order)):
            proba[:, j] = ((self.y[idx] == j) * w).sum(axis=1)
        proba /= proba.sum(axis=1, keepdims=True)
        return self._from_proba(proba, type)


class LinearRegression(Model):
    """Least squares via the normal equations with a tiny ridge jitter."""

    def __init__(self, formula, train, ridge: float = 1e-8):
        super().__init__(formula, train)
        if self.classification:
            raise WorkflowError("linreg needs a numeric target")
        self.encoder = Encoder(train, self.predictors, standardize=False, drop_first=True)
        X = np.hstack([np.ones((train.n_rows, 1)), self.encoder.transform(train)])
        y = train[formula.target].values
        A = X.T @ X + ridge * np.eye(X.shape[1])
        self.coef = np.linalg.solve(A, X.T @ y)

    @property
    def intercept(self) -> float:
        return float(self.coef[0])

    def predict(self, test, type=None):
        X = np.hstack([np.ones((test.n_rows, 1)), self.encoder.transform(test)])
        return Predictions(NUMERIC_PREDS, X @ self.coef)


class MeanBaseline(Model):
    def __init__(self, formula, train):
        super().__init__(formula, train)
        if self.classification:
            raise WorkflowError("meanBaseline needs a numeric target")
        self.value = float(np.mean(train[formula.target].values))

    def predict(self, test, type=None):
        return Predictions(NUMERIC_PREDS, np.full(test.n_rows, self.value))


class ModeBaseline(Model):
    def __init__(self, formula, train):
        super().__init__(formula, train)
        target = train[formula.target]
        if not self.classification:
            raise WorkflowError("modeBaseline needs a categorical target")
        counts = np.bincount(target.codes(), minlength=len(self.class_order))
        self.proba = counts / counts.sum()

    def predict(self, test, type=None):
        return self._from_proba(np.tile(self.proba, (test.n_rows, 1)), type)


_LEARNERS: dict[str, Callable] = {
    "knn": KNN,
    "linreg": LinearRegression,
    "meanBaseline": MeanBaseline,
    "modeBaseline": ModeBaseline,
}


def register_learner(name: str, fit: Callable) -> None:
    """Register ``fit(formula, train, **pars) -> model``.

    The returned model must offer ``predict(test, **predictor_pars)``
    returning :class:`Predictions` or anything :func:`as_predictions` accepts.
    """
    _LEARNERS[name] = fit


def learner_names() -> list[str]:
    return sorted(_LEARNERS)


def fit_learner(name, formula, train: DataFrame, pars: dict | None = None):
    formula = as_formula(formula)
    if callable(name):
        fit = name
    else:
        key = name[len("plugin:"):] if name.startswith("plugin:") else name
        if key not in _LEARNERS:
            raise WorkflowError(f"unknown learner {name!r}")
        fit = _LEARNERS[key]
    if train.n_rows < 1:
        raise WorkflowError("cannot fit a learner on an empty training set")
    return fit(formula, train, **(pars or {}))


def predict_model(model, test: DataFrame, pars: dict | None = None) -> Predictions:
    out = model.predict(test, **(pars or {}))
    return as_predictions(out, getattr(model, "class_order", None))
