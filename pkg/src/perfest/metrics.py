"""Classification, regression and timing metrics plus user evaluators.

Undefined values (zero predicted positives for precision, a constant training
target for ``nmse`` ...) come back as ``nan`` rather than 0 so downstream
summaries can count them as missing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exceptions import ConfigError, ContractViolation
from .learners import Predictions, as_predictions
from .prepost import CostBenefitMatrix

CLASSIFICATION_METRICS = ("acc", "err", "prec", "rec", "F", "macroF", "macroPrec", "macroRec", "totU")
REGRESSION_METRICS = ("mae", "mse", "rmse", "mape", "nmse", "nmae", "theil")
TIME_METRICS = ("trTime", "tsTime", "totTime")
NEEDS_TRAIN_TARGET = ("nmse", "nmae", "theil")
POS_CLASS_METRICS = ("prec", "rec", "F")


def all_metric_names() -> list[str]:
    return list(CLASSIFICATION_METRICS + REGRESSION_METRICS + TIME_METRICS)


@dataclass(frozen=True)
class ConfusionMatrix:
    class_order: tuple[str, ...]
    counts: np.ndarray

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def confusion_matrix(trues, preds, class_order: Sequence[str] | None = None) -> ConfusionMatrix:
    """``counts[i][j]``: rows with truth ``class_order[i]`` predicted as ``class_order[j]``.

    Missing predictions are left out of the matrix.
    """
    trues = list(trues)
    preds = list(preds)
    if class_order is None:
        class_order = sorted({t for t in trues if t is not None} | {p for p in preds if p is not None})
    lookup = {c: i for i, c in enumerate(class_order)}
    counts = np.zeros((len(class_order), len(class_order)), dtype=int)
    for t, p in zip(trues, preds):
        if p is None:
            continue
        counts[lookup[t], lookup[p]] += 1
    return ConfusionMatrix(tuple(class_order), counts)


def _ratio(a: float, b: float) -> float:
    return a / b if b else math.nan


def _f_score(p: float, r: float, beta: float) -> float:
    if math.isnan(p) or math.isnan(r):
        return math.nan
    b2 = beta * beta
    denom = b2 * p + r
    return (1 + b2) * p * r / denom if denom else 0.0


def _nanmean(values: list[float]) -> float:
    vals = [v for v in values if not math.isnan(v)]
    return sum(vals) / len(vals) if vals else math.nan


def classification_metrics(trues, preds, metrics: Sequence[str] = ("acc", "err"), pos_class=None,
                           beta: float = 1.0, cb_matrix=None, class_order=None) -> dict[str, float]:
    """Scores for label (or probability) predictions.

    Probability predictions are turned into labels by argmax. ``prec``,
    ``rec`` and ``F`` are computed for ``pos_class``; the ``macro*`` scores
    average per-class values over the classes where they are defined.
    ``totU`` sums ``cb_matrix[true][pred]`` over the rows.
    """
    preds = as_predictions(preds, class_order)
    labels = list(preds.as_labels())
    trues = [None if t is None else str(t) for t in trues]
    if len(labels) != len(trues):
        raise ValueError(f"{len(trues)} true values but {len(labels)} predictions")
    unknown = [m for m in metrics if m not in CLASSIFICATION_METRICS]
    if unknown:
        raise ConfigError(f"unknown classification metric(s): {unknown}")
    present = {t for t in trues} | {p for p in labels if p is not None}
    order = list(class_order) if class_order is not None else []
    order += sorted(present.difference(order))
    if pos_class is not None:
        pos_class = str(pos_class)
    if any(m in POS_CLASS_METRICS for m in metrics):
        if pos_class is None:
            raise ConfigError("prec/rec/F need pos_class")
        if pos_class not in order:
            raise ConfigError(f"positive class {pos_class!r} is not one of {order}")
    cm = confusion_matrix(trues, labels, order)
    n = len(trues)
    correct = int(np.trace(cm.counts))
    counts = cm.counts
    out = {}
    per_class = None
    for m in metrics:
        if m == "acc":
            out[m] = _ratio(correct, n)
        elif m == "err":
            out[m] = 1.0 - _ratio(correct, n) if n else math.nan
        elif m in POS_CLASS_METRICS:
            i = order.index(pos_class)
            tp = counts[i, i]
            prec = _ratio(tp, counts[:, i].sum())
            rec = _ratio(tp, counts[i, :].sum())
            out[m] = {"prec": prec, "rec": rec, "F": _f_score(prec, rec, beta)}[m]
        elif m in ("macroF", "macroPrec", "macroRec"):
            if per_class is None:
                per_class = []
                for i in range(len(order)):
                    if counts[i, :].sum() == 0 and counts[:, i].sum() == 0:
                        continue
                    p = _ratio(counts[i, i], counts[:, i].sum())
                    r = _ratio(counts[i, i], counts[i, :].sum())
                    per_class.append((p, r, _f_score(p, r, beta)))
            pick = {"macroPrec": 0, "macroRec": 1, "macroF": 2}[m]
            out[m] = _nanmean([pc[pick] for pc in per_class])
        elif m == "totU":
            if cb_matrix is None:
                raise ConfigError("totU needs cb_matrix")
            cb = CostBenefitMatrix.coerce(cb_matrix, class_order or order)
            idx = {c: i for i, c in enumerate(cb.class_order)}
            out[m] = float(sum(cb.entries[idx[t], idx[p]] for t, p in zip(trues, labels) if p is not None))
    return out


def regression_metrics(trues, preds, metrics: Sequence[str] = ("mse",), train_y=None,
                       last_train_value: float | None = None) -> dict[str, float]:
    """Scores for numeric predictions.

    ``nmse``/``nmae`` normalise by the errors of the training-mean predictor
    and need ``train_y``. ``theil`` compares against the no-change forecast,
    seeded with ``last_train_value`` (defaults to the last of ``train_y``).
    """
    unknown = [m for m in metrics if m not in REGRESSION_METRICS]
    if unknown:
        raise ConfigError(f"unknown regression metric(s): {unknown}")
    y = np.asarray(trues, dtype=float)
    p = as_predictions(preds).values if not isinstance(preds, np.ndarray) else preds
    p = np.asarray(p, dtype=float)
    if y.shape != p.shape:
        raise ValueError(f"{len(y)} true values but {len(p)} predictions")
    e = y - p
    n = len(y)
    out = {}
    for m in metrics:
        if n == 0:
            out[m] = math.nan
        elif m == "mae":
            out[m] = float(np.mean(np.abs(e)))
        elif m == "mse":
            out[m] = float(np.mean(e ** 2))
        elif m == "rmse":
            out[m] = float(np.sqrt(np.mean(e ** 2)))
        elif m == "mape":
            nz = y != 0
            out[m] = float(np.mean(np.abs(e[nz]) / np.abs(y[nz]))) if nz.any() else math.nan
        elif m in ("nmse", "nmae"):
            if train_y is None:
                raise ConfigError(f"{m} needs the training target values")
            ty = np.asarray(train_y, dtype=float)
            mean = ty.mean()
            if ty.size == 0 or np.all(ty == ty[0]):
                out[m] = math.nan
                continue
            if m == "nmse":
                out[m] = float(_ratio(np.sum(e ** 2), np.sum((y - mean) ** 2)))
            else:
                out[m] = float(_ratio(np.sum(np.abs(e)), np.sum(np.abs(y - mean))))
        elif m == "theil":
            if last_train_value is None:
                if train_y is None or len(train_y) == 0:
                    raise ConfigError("theil needs the last training target value")
                last_train_value = float(np.asarray(train_y, dtype=float)[-1])
            prev = np.concatenate([[last_train_value], y[:-1]])
            out[m] = float(np.sqrt(_ratio(np.sum(e ** 2), np.sum((y - prev) ** 2))))
    return out


def time_metrics(times: dict, metrics: Sequence[str] = TIME_METRICS) -> dict[str, float]:
    tr = float(times.get("train", 0.0))
    ts = float(times.get("test", 0.0))
    values = {"trTime": tr, "tsTime": ts, "totTime": tr + ts}
    return {m: values[m] for m in metrics}


# -- user evaluators -----------------------------------------------------------

_EVALUATORS: dict[str, tuple[Callable, tuple[str, ...]]] = {}


def register_evaluator(name: str, fn: Callable, metrics: Sequence[str]) -> None:
    """Register ``fn(trues, preds, metrics, train_y=None, **pars) -> {name: score}``.

    ``metrics`` lists the score names the evaluator can produce.
    """
    _EVALUATORS[name] = (fn, tuple(metrics))


def evaluator_metrics(name: str) -> tuple[str, ...]:
    if name not in _EVALUATORS:
        raise ConfigError(f"unknown evaluator {name!r}")
    return _EVALUATORS[name][1]


def run_evaluator(name: str, trues, preds, metrics: Sequence[str] | None = None, train_y=None,
                  pars: dict | None = None) -> dict[str, float]:
    fn, declared = _EVALUATORS.get(name, (None, ()))
    if fn is None:
        raise ConfigError(f"unknown evaluator {name!r}")
    metrics = list(metrics or declared)
    undeclared = [m for m in metrics if m not in declared]
    if undeclared:
        raise ConfigError(f"evaluator {name!r} does not provide {undeclared}")
    values = preds.values if isinstance(preds, Predictions) else preds
    kwargs = dict(pars or {})
    if train_y is not None:
        kwargs["train_y"] = train_y
    scores = fn(np.asarray(trues), values, metrics, **kwargs)
    try:
        scores = dict(scores)
    except (TypeError, ValueError):
        raise ContractViolation(f"evaluator {name!r} must return a name -> score mapping") from None
    missing = [m for m in metrics if m not in scores]
    if missing:
        raise ContractViolation(f"evaluator {name!r} returned no score for {missing}")
    return {m: float(scores[m]) for m in metrics}
