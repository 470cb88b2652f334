"""Pre-processing of (train, test) frames and post-processing of predictions.

Pre steps have the signature ``step(train, test, target, rng=None, **pars)``
and return the transformed ``(train, test)``. Every statistic they use comes
from the training frame. Post steps have the signature
``step(preds, train_target, rng=None, **pars)`` and return new predictions of
the same length and order.

Parameter scales follow the original tools: ``undersampl``'s ``perc_under``
is a ratio (1 = balanced) while SMOTE's ``perc_over``/``perc_under`` are
percentages (``perc_over=200`` creates two synthetic cases per minority case).
"""

from __future__ import annotations

import inspect
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exceptions import WorkflowError
from .frame import CATEGORICAL, NUMERIC, Column, DataFrame, concat_rows, select_rows
from .learners import LABELS, NUMERIC_PREDS, PROBA, Encoder, Predictions


def _predictor_names(frame: DataFrame, target: str) -> list[str]:
    return [n for n in frame.names if n != target]


def mode_label(values: Sequence) -> str | None:
    """Most frequent label; ties go to the lexicographically smallest."""
    counts: dict[str, int] = {}
    for v in values:
        if v is not None:
            counts[v] = counts.get(v, 0) + 1
    if not counts:
        return None
    best = max(counts.values())
    return min(k for k, c in counts.items() if c == best)


# -- pre-processing ------------------------------------------------------------

def pre_scale(train: DataFrame, test: DataFrame, target: str, rng=None):
    """Standardise numeric predictors with training mean and sample std.

    Constant training columns are only centred. The target is untouched.
    """
    new_train, new_test = [], []
    for name in _predictor_names(train, target):
        col = train[name]
        if col.kind != NUMERIC:
            continue
        vals = col.values[~np.isnan(col.values)]
        mu = vals.mean() if vals.size else 0.0
        sd = vals.std(ddof=1) if vals.size > 1 else 0.0
        if not sd > 0:
            sd = 1.0
        new_train.append(Column(name, NUMERIC, (col.values - mu) / sd))
        new_test.append(Column(name, NUMERIC, (test[name].values - mu) / sd))
    return train.with_columns(new_train), test.with_columns(new_test)


def pre_central_imp(train: DataFrame, test: DataFrame, target: str, rng=None):
    """Fill missing predictor cells with the training median (numeric) or mode."""
    new_train, new_test = [], []
    for name in _predictor_names(train, target):
        col = train[name]
        miss = col.missing
        if miss.all():
            raise WorkflowError(f"predictor {name!r} is entirely missing in the training data")
        tcol = test[name]
        if col.kind == NUMERIC:
            fill = float(np.median(col.values[~miss]))
            new_train.append(Column(name, NUMERIC, np.where(miss, fill, col.values)))
            new_test.append(Column(name, NUMERIC, np.where(tcol.missing, fill, tcol.values)))
        else:
            fill = mode_label(col.values)
            new_train.append(Column(name, CATEGORICAL, [fill if v is None else v for v in col.values],
                                    col.categories))
            cats = tcol.categories if fill in tcol.categories else tcol.categories + (fill,)
            new_test.append(Column(name, CATEGORICAL, [fill if v is None else v for v in tcol.values], cats))
    return train.with_columns(new_train), test.with_columns(new_test)


def pre_na_omit(train: DataFrame, test: DataFrame, target: str, rng=None):
    """Drop rows with missing cells from both frames.

    Test rows are judged on predictors only (their target is hidden at this
    stage); the surviving rows keep their ``row_ids`` so truths stay aligned.
    """
    preds = _predictor_names(train, target)
    keep_train = ~np.any([train[n].missing for n in train.names], axis=0) if train.names else None
    keep_test = ~np.any([test[n].missing for n in preds], axis=0) if preds else np.ones(test.n_rows, bool)
    new_train = select_rows(train, np.flatnonzero(keep_train))
    if new_train.n_rows == 0:
        raise WorkflowError("no training rows left after removing missing values")
    return new_train, select_rows(test, np.flatnonzero(keep_test))


def _class_counts(train: DataFrame, target: str, step: str):
    col = train[target]
    if col.kind != CATEGORICAL:
        raise WorkflowError(f"{step} is only available for classification tasks")
    codes = col.codes()
    counts = np.bincount(codes[codes >= 0], minlength=len(col.categories))
    present = np.flatnonzero(counts)
    if len(present) < 2:
        raise WorkflowError(f"{step} needs at least two classes in the training data")
    # categories are sorted, so the first minimal code is the smallest label
    minority = present[np.argmin(counts[present])]
    return codes, counts, present, minority


def pre_undersample(train: DataFrame, test: DataFrame, target: str, rng=None, perc_under: float = 1.0):
    """Keep the minority class whole and downsample every other class to
    ``round(perc_under * minority_count)`` cases (capped at the class size)."""
    rng = rng if rng is not None else np.random.default_rng(0)
    codes, counts, present, minority = _class_counts(train, target, "undersampl")
    size = int(np.floor(perc_under * counts[minority] + 0.5))
    keep = []
    for c in present:
        members = np.flatnonzero(codes == c)
        if c == minority or size >= len(members):
            keep.append(members)
        else:
            keep.append(rng.choice(members, size=size, replace=False))
    return select_rows(train, np.sort(np.concatenate(keep))), test


def pre_smote(train: DataFrame, test: DataFrame, target: str, rng=None,
              perc_over: float = 200, perc_under: float = 200, k: int = 5):
    """SMOTE oversampling of the minority class plus majority undersampling.

    Each minority case yields ``floor(perc_over / 100)`` synthetic cases
    (with ``perc_over < 100`` a random subset of cases yields one each),
    interpolated towards a random one of its ``k`` nearest minority
    neighbours; categorical predictors are copied from either end of the
    pair. The other classes are then sampled down to
    ``floor(perc_under / 100 * n_synthetic)`` cases in total.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    if k < 1:
        raise WorkflowError("smote needs k >= 1")
    codes, counts, present, minority = _class_counts(train, target, "smote")
    min_idx = np.flatnonzero(codes == minority)
    if len(min_idx) < 2:
        raise WorkflowError("smote needs at least two minority cases to find neighbours")
    preds = _predictor_names(train, target)
    minority_frame = select_rows(train, min_idx)
    enc = Encoder(minority_frame, preds)
    X = enc.transform(minority_frame)
    d = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))
    np.fill_diagonal(d, np.inf)
    k_eff = min(int(k), len(min_idx) - 1)
    nn = np.argsort(d, axis=1, kind="stable")[:, :k_eff]

    if perc_over >= 100:
        per_case = int(perc_over // 100)
        sources = np.repeat(np.arange(len(min_idx)), per_case)
    else:
        n_cases = int(np.floor(perc_over / 100 * len(min_idx) + 0.5))
        sources = np.sort(rng.choice(len(min_idx), size=n_cases, replace=False))
    n_syn = len(sources)
    neighbours = nn[sources, rng.integers(0, k_eff, size=n_syn)] if n_syn else np.empty(0, int)
    gaps = rng.random(n_syn)
    pick_neighbour = rng.random(n_syn) < 0.5

    synthetic = []
    for name in train.names:
        col = minority_frame[name]
        a, b = col.values[sources], col.values[neighbours]
        if name == target:
            synthetic.append(Column(name, CATEGORICAL, a, col.categories))
        elif col.kind == NUMERIC:
            synthetic.append(Column(name, NUMERIC, a + gaps * (b - a)))
        else:
            synthetic.append(Column(name, CATEGORICAL, np.where(pick_neighbour, b, a), col.categories))
    syn_frame = DataFrame(synthetic, name=train.name, n_rows=n_syn)
    syn_frame.row_ids = np.full(n_syn, -1)

    others = np.flatnonzero((codes != minority) & (codes >= 0))
    n_major = min(int(np.floor(perc_under / 100 * n_syn)), len(others))
    major = np.sort(rng.choice(others, size=n_major, replace=False))
    base = select_rows(train, np.concatenate([major, min_idx]))
    return concat_rows(base, syn_frame), test


# -- post-processing -----------------------------------------------------------

def _numeric_only(preds: Predictions, step: str):
    if preds.shape != NUMERIC_PREDS:
        raise WorkflowError(f"{step} only applies to numeric predictions")


def post_na2central(preds: Predictions, train_target: Column, rng=None) -> Predictions:
    """Replace missing predictions by the training target median or mode."""
    if preds.shape == PROBA:
        raise WorkflowError("na2central only applies to vector predictions")
    if preds.shape == NUMERIC_PREDS:
        fill = float(np.median(train_target.values[~train_target.missing]))
        return Predictions(NUMERIC_PREDS, np.where(np.isnan(preds.values), fill, preds.values))
    fill = mode_label(train_target.values)
    return Predictions(LABELS, [fill if v is None else v for v in preds.values])


def post_only_pos(preds: Predictions, train_target=None, rng=None) -> Predictions:
    """Cast negative numeric predictions to zero."""
    _numeric_only(preds, "onlyPos")
    return Predictions(NUMERIC_PREDS, np.where(preds.values < 0, 0.0, preds.values))


def post_cast2int(preds: Predictions, train_target=None, rng=None, inf_lim=None, sup_lim=None) -> Predictions:
    """Clamp numeric predictions into ``[inf_lim, sup_lim]``."""
    _numeric_only(preds, "cast2int")
    if inf_lim is None or sup_lim is None:
        raise WorkflowError("cast2int requires both inf_lim and sup_lim")
    if inf_lim > sup_lim:
        raise WorkflowError("cast2int requires inf_lim <= sup_lim")
    return Predictions(NUMERIC_PREDS, np.clip(preds.values, inf_lim, sup_lim))


@dataclass(frozen=True)
class CostBenefitMatrix:
    """``entries[i][j]``: utility of predicting class j when the truth is class i."""

    class_order: tuple[str, ...]
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        k = len(self.class_order)
        if m.shape != (k, k):
            raise ValueError(f"cost-benefit matrix must be {k}x{k}, got {m.shape}")
        off = m[~np.eye(k, dtype=bool)]
        if (np.diag(m) < 0).any() or (off > 0).any():
            raise ValueError("cost-benefit matrix needs benefits (>= 0) on the diagonal and costs (<= 0) elsewhere")
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "class_order", tuple(str(c) for c in self.class_order))

    @classmethod
    def coerce(cls, cb, class_order) -> "CostBenefitMatrix":
        if isinstance(cb, CostBenefitMatrix):
            return cb
        if isinstance(cb, dict):
            return cls(tuple(cb["classOrder"]), np.asarray(cb["entries"], dtype=float))
        return cls(tuple(class_order), np.asarray(cb, dtype=float))


def post_maxutil(preds: Predictions, train_target=None, rng=None, cb_matrix=None) -> Predictions:
    """Predict, per row, the class with the highest expected utility
    ``sum_i p_i * cb[i][j]`` (ties to the lowest class index)."""
    if preds.shape != PROBA:
        raise WorkflowError("maxutil needs class-probability predictions (predictor type='prob')")
    if cb_matrix is None:
        raise WorkflowError("maxutil requires cb_matrix")
    cb = CostBenefitMatrix.coerce(cb_matrix, preds.class_order)
    if cb.class_order != preds.class_order:
        raise WorkflowError(f"cost-benefit classes {cb.class_order} do not match predictions {preds.class_order}")
    utilities = preds.values @ cb.entries
    best = np.argmax(utilities, axis=1)
    return Predictions(LABELS, [preds.class_order[j] for j in best])


# -- registries and chains -----------------------------------------------------

PRE_STEPS: dict[str, Callable] = {
    "scale": pre_scale,
    "centralImp": pre_central_imp,
    "na.omit": pre_na_omit,
    "naOmit": pre_na_omit,
    "undersampl": pre_undersample,
    "smote": pre_smote,
}

POST_STEPS: dict[str, Callable] = {
    "na2central": post_na2central,
    "onlyPos": post_only_pos,
    "cast2int": post_cast2int,
    "maxutil": post_maxutil,
}


def register_pre(name: str, fn: Callable) -> None:
    PRE_STEPS[name] = fn


def register_post(name: str, fn: Callable) -> None:
    POST_STEPS[name] = fn


def _normalise_key(k: str) -> str:
    # perc.under -> perc_under, cb.matrix -> cb_matrix, infLim -> inf_lim
    k = k.replace(".", "_")
    out = []
    for ch in k:
        if ch.isupper():
            out.append("_" + ch.lower())
        else:
            out.append(ch)
    return "".join(out)


def _step_kwargs(fn: Callable, name: str, pars: dict | None) -> dict:
    """Parameters for one step: a per-step sub-map if present, else the shared
    map filtered to what the step accepts."""
    pars = pars or {}
    if isinstance(pars.get(name), dict):
        pars = pars[name]
    params = inspect.signature(fn).parameters
    takes_any = any(p.kind is inspect.Parameter.VAR_KEYWORD for p in params.values())
    out = {}
    for k, v in pars.items():
        key = _normalise_key(k)
        if key in params or takes_any:
            out[key] = v
    return out


def _resolve(registry, name, what):
    if callable(name):
        return getattr(name, "__name__", "step"), name
    key = name[len("plugin:"):] if name.startswith("plugin:") else name
    if key not in registry:
        raise WorkflowError(f"unknown {what} step {name!r}")
    return key, registry[key]


def apply_pre(steps, train: DataFrame, test: DataFrame, target: str, pars: dict | None = None, rng=None):
    for step in steps or ():
        name, fn = _resolve(PRE_STEPS, step, "pre-processing")
        train, test = fn(train, test, target, rng=rng, **_step_kwargs(fn, name, pars))
    return train, test


def apply_post(steps, preds: Predictions, train_target: Column, pars: dict | None = None, rng=None):
    for step in steps or ():
        name, fn = _resolve(POST_STEPS, step, "post-processing")
        n = len(preds)
        preds = fn(preds, train_target, rng=rng, **_step_kwargs(fn, name, pars))
        if len(preds) != n:
            raise WorkflowError(f"post-processing step {name!r} changed the number of predictions")
    return preds
