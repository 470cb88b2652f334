"""Workflows: learn on a training frame, predict a test frame.

Two generic workflows are built in (``standardWF`` and ``timeseriesWF``);
user workflows register under a name and follow the same contract,
``fn(formula, train, test, **params)`` returning a :class:`WorkflowResult`
or a mapping with ``trues`` and ``preds``.
"""

from __future__ import annotations

import inspect
import itertools
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import ConfigError, ContractViolation, WorkflowError
from .frame import DataFrame, as_formula, concat_rows, select_rows
from .learners import Predictions, as_predictions, fit_learner, predict_model
from .prepost import apply_post, apply_pre

STANDARD = "standard"
TIMESERIES = "timeseries"
USER = "user-plugin"

# parameters holding an ordered list of step names, never expanded into variants
LIST_VALUED = ("pre", "post")


@dataclass
class WorkflowResult:
    trues: np.ndarray
    preds: Predictions
    times: dict = field(default_factory=lambda: {"train": 0.0, "test": 0.0})
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.preds) != len(self.trues):
            raise ContractViolation(f"{len(self.preds)} predictions for {len(self.trues)} test cases")


def _normalise_params(params: dict) -> dict:
    out = {}
    for k, v in params.items():
        key = k.replace(".", "_")
        if isinstance(v, dict) and key.endswith("_pars"):
            v = dict(v)
        out[key] = v
    pars = out.get("learner_pars")
    if isinstance(pars, dict):
        for k in ("relearn.step", "relearn_step"):
            if k in pars:
                out.setdefault("relearn_step", pars.pop(k))
    return out


class Workflow:
    """A workflow function name plus its parameters."""

    def __init__(self, wf: str | None = None, wf_id: str | None = None, **params):
        params = _normalise_params(params)
        if wf is None:
            wf = "timeseriesWF" if "type" in params else "standardWF"
        self.wf = wf
        self.params = params
        if wf == "timeseriesWF" and params.get("type") not in ("slide", "grow"):
            raise ConfigError("timeseriesWF needs type='slide' or type='grow'")
        learner = params.get("learner")
        self.wf_id = wf_id or (learner if isinstance(learner, str) else wf)

    @property
    def kind(self) -> str:
        return {"standardWF": STANDARD, "timeseriesWF": TIMESERIES}.get(self.wf, USER)

    @property
    def concurrency_safe(self) -> bool:
        entry = _WORKFLOWS.get(self.wf)
        return entry is None or entry[1]

    def run(self, formula, train: DataFrame, test: DataFrame, rng=None) -> WorkflowResult:
        if self.wf not in _WORKFLOWS:
            raise WorkflowError(f"unknown workflow function {self.wf!r}")
        fn = _WORKFLOWS[self.wf][0]
        if self.kind == USER:
            return run_user_workflow(fn, formula, train, test, self.params, rng=rng)
        return fn(formula, train, test, rng=rng, **self.params)

    def to_dict(self) -> dict:
        return {"wf": self.wf, "wfID": self.wf_id, "params": self.params}

    @classmethod
    def from_dict(cls, d: dict) -> "Workflow":
        return cls(d.get("wf"), d.get("wfID"), **d.get("params", {}))

    def __eq__(self, other):
        return isinstance(other, Workflow) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return f"Workflow({self.wf_id!r}, wf={self.wf!r}, params={self.params!r})"


# -- generic workflows ---------------------------------------------------------

def _call_predictor(predictor, model, test, pars):
    if predictor in (None, "predict"):
        return predict_model(model, test, pars)
    if callable(predictor):
        return as_predictions(predictor(model, test, **(pars or {})), getattr(model, "class_order", None))
    raise WorkflowError(f"unknown predictor {predictor!r}")


def _learn_and_predict(formula, train, test, rng, learner, learner_pars, predictor, predictor_pars,
                       pre, pre_pars, post, post_pars):
    """One pre -> fit -> predict -> post pass. ``test`` must have its target hidden.

    Returns predictions, the surviving test positions and (train, test) seconds.
    """
    target = formula.target
    test = select_rows(test, np.arange(test.n_rows))
    test.row_ids = np.arange(test.n_rows)
    t0 = time.perf_counter()
    tr, ts = apply_pre(pre, train, test, target, pre_pars, rng=rng)
    model = fit_learner(learner, formula, tr, learner_pars)
    t1 = time.perf_counter()
    preds = _call_predictor(predictor, model, ts, predictor_pars)
    preds = apply_post(post, preds, tr[target], post_pars, rng=rng)
    t2 = time.perf_counter()
    if len(preds) != ts.n_rows:
        raise WorkflowError(f"learner returned {len(preds)} predictions for {ts.n_rows} test cases")
    return preds, ts.row_ids, t1 - t0, t2 - t1


def standard_wf(formula, train: DataFrame, test: DataFrame, learner=None, learner_pars=None,
                predictor="predict", predictor_pars=None, pre=None, pre_pars=None,
                post=None, post_pars=None, rng=None) -> WorkflowResult:
    """Pre-process, fit ``learner`` on the training frame, predict the test
    frame and post-process.

    The learner-facing test frame has its target hidden; truths come from the
    original test frame (restricted to rows that survive pre-processing).
    """
    formula = as_formula(formula)
    if learner is None:
        raise WorkflowError("standardWF needs a learner")
    if train.n_rows == 0 or test.n_rows == 0:
        raise WorkflowError("standardWF needs non-empty train and test sets")
    trues_all = test[formula.target].values
    preds, kept, t_train, t_test = _learn_and_predict(
        formula, train, test.mask_column(formula.target), rng, learner, learner_pars,
        predictor, predictor_pars, pre, pre_pars, post, post_pars)
    return WorkflowResult(trues_all[kept], preds, {"train": t_train, "test": t_test})


def timeseries_wf(formula, train: DataFrame, test: DataFrame, type: str = "slide", relearn_step: int = 1,
                  learner=None, learner_pars=None, predictor="predict", predictor_pars=None,
                  pre=None, pre_pars=None, post=None, post_pars=None, rng=None) -> WorkflowResult:
    """Sliding- or growing-window forecasting over a time-ordered test period.

    A model is refitted at test offsets ``0, s, 2s, ...`` (``s`` =
    ``relearn_step``) and predicts the following ``s`` rows. Sliding windows
    train on the last ``len(train)`` observed rows, growing windows on every
    row from the start of ``train``. Test rows already passed count as observed,
    including their true target values.
    """
    formula = as_formula(formula)
    if type not in ("slide", "grow"):
        raise WorkflowError("timeseriesWF type must be 'slide' or 'grow'")
    if relearn_step < 1:
        raise WorkflowError("relearn_step must be >= 1")
    if learner is None:
        raise WorkflowError("timeseriesWF needs a learner")
    if train.n_rows == 0 or test.n_rows == 0:
        raise WorkflowError("timeseriesWF needs non-empty train and test sets")
    L, F = train.n_rows, test.n_rows
    history = concat_rows(train, test)
    masked = test.mask_column(formula.target)
    trues_all = test[formula.target].values
    blocks, trues, fits = [], [], []
    t_train = t_test = 0.0
    for start in range(0, F, int(relearn_step)):
        stop = min(start + int(relearn_step), F)
        first = start if type == "slide" else 0
        window = select_rows(history, np.arange(first, L + start))
        block = select_rows(masked, np.arange(start, stop))
        preds, kept, a, b = _learn_and_predict(
            formula, window, block, rng, learner, learner_pars, predictor, predictor_pars,
            pre, pre_pars, post, post_pars)
        blocks.append(preds)
        trues.append(trues_all[start + kept])
        fits.append({"offset": start, "trainRows": window.n_rows})
        t_train += a
        t_test += b
    return WorkflowResult(np.concatenate(trues), Predictions.concat(blocks),
                          {"train": t_train, "test": t_test}, {"fits": fits})


def run_user_workflow(fn: Callable, formula, train: DataFrame, test: DataFrame, params: dict | None = None,
                      rng=None) -> WorkflowResult:
    """Call a user workflow and check its result against the contract."""
    params = dict(params or {})
    if rng is not None and "rng" in inspect.signature(fn).parameters:
        params["rng"] = rng
    t0 = time.perf_counter()
    try:
        out = fn(as_formula(formula), train, test, **params)
    except ContractViolation:
        raise
    except Exception as exc:
        raise WorkflowError(f"{type(exc).__name__}: {exc}") from exc
    elapsed = time.perf_counter() - t0
    if isinstance(out, WorkflowResult):
        return out
    if not isinstance(out, dict) or "trues" not in out or "preds" not in out:
        raise ContractViolation("user workflow must return a mapping with 'trues' and 'preds'")
    target = train[as_formula(formula).target]
    trues = out["trues"]
    trues = np.asarray(trues.values if hasattr(trues, "values") else trues,
                       dtype=float if target.is_numeric else object)
    try:
        preds = as_predictions(out["preds"], out.get("classOrder") or target.categories or None)
    except ValueError as exc:
        raise ContractViolation(f"invalid predictions: {exc}") from None
    times = out.get("times") or {"train": elapsed, "test": 0.0}
    extras = {k: v for k, v in out.items() if k not in ("trues", "preds", "times", "classOrder")}
    return WorkflowResult(trues, preds, dict(times), extras)


# -- registry ------------------------------------------------------------------

_WORKFLOWS: dict[str, tuple[Callable, bool]] = {
    "standardWF": (standard_wf, True),
    "timeseriesWF": (timeseries_wf, True),
}


def register_workflow(name: str, fn: Callable, concurrency_safe: bool = True) -> None:
    """Make ``fn`` available as a workflow named ``name``.

    Workflows flagged ``concurrency_safe=False`` always run serially.
    """
    if name in ("standardWF", "timeseriesWF"):
        raise ConfigError(f"{name!r} is reserved")
    _WORKFLOWS[name] = (fn, concurrency_safe)


def workflow_function(name: str) -> Callable:
    return _WORKFLOWS[name][0]


# -- variants ------------------------------------------------------------------

def _is_candidates(v) -> bool:
    return isinstance(v, (list, tuple, np.ndarray))


def workflow_variants(wf: str | None = None, as_is=(), var_prefix: str | None = None,
                      **params) -> list[Workflow]:
    """All combinations of list-valued parameters, as :class:`Workflow` objects.

    Lists inside ``*_pars`` maps expand too. The last declared parameter
    varies fastest. Parameters named in ``as_is`` (and the step lists ``pre``
    and ``post``) are passed whole. IDs are ``<learner or wf>.v1``, ``.v2``...
    numbered per prefix.
    """
    params = _normalise_params(params)
    as_is = {a.replace(".", "_") for a in ([as_is] if isinstance(as_is, str) else as_is)}
    paths: list[tuple] = []
    options: list[list] = []
    for key, value in params.items():
        if isinstance(value, dict) and key.endswith("_pars"):
            for sub, subval in value.items():
                if _is_candidates(subval) and sub not in as_is and sub.replace(".", "_") not in as_is:
                    paths.append((key, sub))
                    options.append(list(subval))
        elif _is_candidates(value) and key not in as_is and key not in LIST_VALUED:
            paths.append((key,))
            options.append(list(value))
    for path, opts in zip(paths, options):
        if not opts:
            raise ConfigError(f"parameter {'.'.join(path)!r} has no candidate values")
    counters: dict[str, int] = {}
    out = []
    for combo in itertools.product(*options):
        p = {k: (dict(v) if isinstance(v, dict) else v) for k, v in params.items()}
        for path, value in zip(paths, combo):
            if len(path) == 1:
                p[path[0]] = value
            else:
                p[path[0]][path[1]] = value
        base = wf or ("timeseriesWF" if "type" in p else "standardWF")
        prefix = var_prefix or (p["learner"] if isinstance(p.get("learner"), str) else base)
        counters[prefix] = counters.get(prefix, 0) + 1
        out.append(Workflow(wf, f"{prefix}.v{counters[prefix]}", **p))
    return out
