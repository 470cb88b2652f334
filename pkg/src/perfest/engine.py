"""Experiment orchestration: tasks x workflows x resampling iterations.

For every task one split plan is generated and shared by all workflows, so
iteration ``i`` of every workflow sees the same train/test rows. Randomness
inside an iteration (undersampling, SMOTE) comes from a stream keyed by
``(seed, task index, iteration)``, never by workflow or worker, so results
do not depend on scheduling.
"""

from __future__ import annotations

import inspect
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Sequence

import numpy as np

from ._version import __version__
from .exceptions import ConfigError, IncompatibleResultsError, ResultsParseError
from .frame import CLASSIFICATION, PredTask, select_rows
from .metrics import (CLASSIFICATION_METRICS, NEEDS_TRAIN_TARGET, POS_CLASS_METRICS, REGRESSION_METRICS,
                      TIME_METRICS, classification_metrics, evaluator_metrics, regression_metrics,
                      run_evaluator, time_metrics)
from .prepost import CostBenefitMatrix, _normalise_key
from .resampling import CV, Bootstrap, Split, SplitPlan, method_from_dict, stream
from .workflow import Workflow, WorkflowResult

RESULTS_FORMAT = "perfest-results"
RESULTS_VERSION = 1

_BUILTIN_PARS = ("pos_class", "beta", "cb_matrix")
# stream key reserved for the .632 resubstitution fit
_RESUB_KEY = 2 ** 32


@dataclass
class EstimationTask:
    """What to estimate (``metrics``) and how (``method``)."""

    metrics: list[str] | None = None
    method: object = field(default_factory=CV)
    evaluator: str | None = None
    evaluator_pars: dict = field(default_factory=dict)
    train_req: bool = False

    def __post_init__(self):
        if isinstance(self.metrics, str):
            self.metrics = [self.metrics]
        if self.metrics is None and self.evaluator is not None:
            self.metrics = list(evaluator_metrics(self.evaluator))
        self.evaluator_pars = {_normalise_key(k): v for k, v in (self.evaluator_pars or {}).items()}
        if isinstance(self.method, dict):
            self.method = method_from_dict(self.method)

    def metric_names(self, task_type: str | None = None) -> list[str]:
        if self.metrics:
            return list(self.metrics)
        return ["err"] if task_type == CLASSIFICATION else ["mse"]

    def to_dict(self) -> dict:
        return {"metrics": self.metrics, "method": self.method.to_dict(), "evaluator": self.evaluator,
                "evaluatorPars": self.evaluator_pars, "trainReq": self.train_req}

    @classmethod
    def from_dict(cls, d: dict) -> "EstimationTask":
        return cls(metrics=d.get("metrics"), method=method_from_dict(d.get("method", {"name": "CV"})),
                   evaluator=d.get("evaluator"), evaluator_pars=d.get("evaluatorPars") or d.get("evaluator.pars") or {},
                   train_req=bool(d.get("trainReq", False)))

    def describe(self, task_type: str | None = None) -> str:
        return (f"Task for estimating  {','.join(self.metric_names(task_type))}  using\n"
                f" {self.method.describe()}\n\t Run with seed =  {self.method.seed}")


@dataclass
class IterationRecord:
    scores: dict | None
    times: dict
    invalid: bool = False
    error: str | None = None
    split_index: int = 0

    def to_dict(self) -> dict:
        scores = None if self.scores is None else {k: _json_num(v) for k, v in self.scores.items()}
        return {"scores": scores, "times": self.times, "invalid": self.invalid, "error": self.error,
                "split": self.split_index}

    @classmethod
    def from_dict(cls, d: dict) -> "IterationRecord":
        scores = d.get("scores")
        if scores is not None:
            scores = {k: (math.nan if v is None else float(v)) for k, v in scores.items()}
        return cls(scores, dict(d.get("times", {})), bool(d.get("invalid", False)), d.get("error"),
                   int(d.get("split", 0)))


def _json_num(v):
    return None if v is None or (isinstance(v, float) and math.isnan(v)) else v


class ComparisonResults:
    """Scores of every workflow on every task, iteration by iteration."""

    def __init__(self, estimation_task: EstimationTask, tasks: list[dict], workflows: list[Workflow],
                 records: dict, plans: dict | None = None, provenance: dict | None = None):
        self.estimation_task = estimation_task
        self.tasks = tasks
        self.workflows = workflows
        self.records = records
        self.plans = plans or {}
        self.provenance = provenance or {}

    @property
    def task_ids(self) -> list[str]:
        return [t["id"] for t in self.tasks]

    @property
    def workflow_ids(self) -> list[str]:
        return [w.wf_id for w in self.workflows]

    @property
    def metrics(self) -> list[str]:
        if self.estimation_task.metrics:
            return list(self.estimation_task.metrics)
        for recs in self.records.values():
            for r in recs:
                if r.scores:
                    return list(r.scores)
        return self.estimation_task.metric_names(self.tasks[0]["taskType"] if self.tasks else None)

    def task(self, task_id: str) -> dict:
        for t in self.tasks:
            if t["id"] == task_id:
                return t
        raise KeyError(f"unknown task {task_id!r}")

    def workflow(self, wf_id: str) -> Workflow:
        for w in self.workflows:
            if w.wf_id == wf_id:
                return w
        raise KeyError(f"unknown workflow {wf_id!r}")

    def cell(self, task_id: str, wf_id: str) -> list[IterationRecord]:
        if task_id not in self.task_ids:
            raise KeyError(f"unknown task {task_id!r}")
        if wf_id not in self.workflow_ids:
            raise KeyError(f"unknown workflow {wf_id!r}")
        return self.records[(task_id, wf_id)]

    def to_dict(self) -> dict:
        return {
            "format": RESULTS_FORMAT,
            "version": RESULTS_VERSION,
            "provenance": self.provenance,
            "estimationTask": self.estimation_task.to_dict(),
            "tasks": self.tasks,
            "workflows": [w.to_dict() for w in self.workflows],
            "plans": {tid: p.to_dict() for tid, p in self.plans.items()},
            "records": [{"task": t, "workflow": w, "iterations": [r.to_dict() for r in recs]}
                        for (t, w), recs in self.records.items()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ComparisonResults":
        if d.get("format") != RESULTS_FORMAT:
            raise IncompatibleResultsError("not a perfest results file")
        if d.get("version") != RESULTS_VERSION:
            raise IncompatibleResultsError(
                f"results file version {d.get('version')!r} is not supported (expected {RESULTS_VERSION})")
        records = {(c["task"], c["workflow"]): [IterationRecord.from_dict(r) for r in c["iterations"]]
                   for c in d["records"]}
        return cls(EstimationTask.from_dict(d["estimationTask"]), list(d["tasks"]),
                   [Workflow.from_dict(w) for w in d["workflows"]], records,
                   {tid: SplitPlan.from_dict(p) for tid, p in d.get("plans", {}).items()},
                   dict(d.get("provenance", {})))

    def __eq__(self, other):
        return isinstance(other, ComparisonResults) and _canonical(self.to_dict()) == _canonical(other.to_dict())

    def __repr__(self):
        est = self.estimation_task
        return (f"\n== {est.method.title.title()} Performance Estimation Experiment ==\n\n"
                f"{est.describe(self.tasks[0]['taskType'] if self.tasks else None)}\n\n"
                f" {len(self.workflows)}  workflows applied to  {len(self.tasks)}  predictive tasks")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, CostBenefitMatrix):
        return {"classOrder": list(o.class_order), "entries": o.entries.tolist()}
    if callable(o):
        return f"<callable {getattr(o, '__name__', repr(o))}>"
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _canonical(d: dict) -> str:
    return json.dumps(d, default=_json_default, sort_keys=True)


def save_results(results: ComparisonResults, path) -> None:
    """Write ``results`` as versioned JSON (missing scores become ``null``)."""
    text = json.dumps(results.to_dict(), default=_json_default, indent=1, allow_nan=False)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def load_results(path) -> ComparisonResults:
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ResultsParseError(f"cannot parse results file {path}: {exc}") from None
    try:
        return ComparisonResults.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, IncompatibleResultsError):
            raise
        raise ResultsParseError(f"malformed results file {path}: {exc}") from None


# -- scoring -------------------------------------------------------------------

def _task_kind(task_type: str) -> str:
    return "classification" if task_type == CLASSIFICATION else "regression"


def validate_estimation(tasks: Sequence, est: EstimationTask) -> None:
    """Reject unknown or task-incompatible metrics before anything runs."""
    problems = []
    declared = set(evaluator_metrics(est.evaluator)) if est.evaluator else set()
    for t in tasks:
        ttype = t.task_type if isinstance(t, PredTask) else t["taskType"]
        tid = t.id if isinstance(t, PredTask) else t["id"]
        for m in est.metric_names(ttype):
            if m in declared or m in TIME_METRICS:
                continue
            if m.startswith("plugin:"):
                try:
                    if m[7:] not in evaluator_metrics(m[7:]):
                        problems.append(f"evaluator {m[7:]!r} does not declare metric {m[7:]!r}")
                except ConfigError as exc:
                    problems.append(str(exc))
            elif m in CLASSIFICATION_METRICS:
                if ttype != CLASSIFICATION:
                    problems.append(f"metric {m!r} needs a classification task; {tid!r} is {ttype}")
                elif m in POS_CLASS_METRICS and est.evaluator_pars.get("pos_class") is None:
                    problems.append(f"metric {m!r} needs posClass in evaluator pars")
                elif m == "totU" and est.evaluator_pars.get("cb_matrix") is None:
                    problems.append("metric 'totU' needs cb.matrix in evaluator pars")
            elif m in REGRESSION_METRICS:
                if ttype == CLASSIFICATION:
                    problems.append(f"metric {m!r} needs a regression task; {tid!r} is {ttype}")
            else:
                problems.append(f"unknown metric {m!r}")
    if problems:
        raise ConfigError("; ".join(dict.fromkeys(problems)))


def _filtered_kwargs(fn, pars: dict) -> dict:
    params = inspect.signature(fn).parameters
    if any(p.kind is inspect.Parameter.VAR_KEYWORD for p in params.values()):
        return dict(pars)
    return {k: v for k, v in pars.items() if k in params}


def score_result(result: WorkflowResult, est: EstimationTask, task_type: str, train_target,
                 class_order=None) -> dict[str, float]:
    """Compute every requested metric for one workflow outcome."""
    names = est.metric_names(task_type)
    declared = set(evaluator_metrics(est.evaluator)) if est.evaluator else set()
    pars = est.evaluator_pars
    scores: dict[str, float] = {}
    from_evaluator = [m for m in names if m in declared]
    if from_evaluator:
        from .metrics import _EVALUATORS
        fn = _EVALUATORS[est.evaluator][0]
        extra = _filtered_kwargs(fn, {k: v for k, v in pars.items()})
        scores.update(run_evaluator(est.evaluator, result.trues, result.preds, from_evaluator,
                                    train_target if est.train_req else None, extra))
    builtin_cls = [m for m in names if m in CLASSIFICATION_METRICS and m not in declared]
    if builtin_cls:
        scores.update(classification_metrics(result.trues, result.preds, builtin_cls,
                                             pos_class=pars.get("pos_class"), beta=pars.get("beta", 1.0),
                                             cb_matrix=pars.get("cb_matrix"), class_order=class_order))
    builtin_reg = [m for m in names if m in REGRESSION_METRICS and m not in declared]
    if builtin_reg:
        needs_train = est.train_req or any(m in NEEDS_TRAIN_TARGET for m in builtin_reg)
        scores.update(regression_metrics(result.trues, result.preds, builtin_reg,
                                         train_y=train_target if needs_train else None))
    timing = [m for m in names if m in TIME_METRICS and m not in declared]
    if timing:
        scores.update(time_metrics(result.times, timing))
    for m in names:
        if m.startswith("plugin:") and m not in scores:
            plugin = m[7:]
            scores[m] = run_evaluator(plugin, result.trues, result.preds, [plugin],
                                      train_target if est.train_req else None)[plugin]
    return {m: float(scores[m]) for m in names}


def _combine_632(e0: dict, resub: dict) -> dict:
    out = {}
    for m, v in e0.items():
        out[m] = v if m in TIME_METRICS else 0.368 * resub[m] + 0.632 * v
    return out


def run_iteration(task: PredTask, workflow: Workflow, split: Split, est: EstimationTask,
                  split_index: int = 0, rng=None, resub: dict | None = None) -> IterationRecord:
    """Run one train+test cycle; every failure is captured in the record."""
    data = task.data
    try:
        train = select_rows(data, split.train)
        test = select_rows(data, split.test)
        result = workflow.run(task.formula, train, test, rng=rng)
        target = train[task.target]
        scores = score_result(result, est, task.task_type, target.values, target.categories or None)
        if resub is not None:
            scores = _combine_632(scores, resub)
        return IterationRecord(scores, dict(result.times), False, None, split_index)
    except Exception as exc:
        return IterationRecord(None, {"train": 0.0, "test": 0.0}, True, f"{type(exc).__name__}: {exc}",
                               split_index)


def resubstitution_scores(task: PredTask, workflow: Workflow, est: EstimationTask, rng=None) -> dict:
    """Scores of a workflow trained and tested on the full data set."""
    everything = np.arange(task.n_rows)
    rec = run_iteration(task, workflow, Split(everything, everything), est, rng=rng)
    if rec.invalid:
        raise RuntimeError(f"resubstitution fit failed: {rec.error}")
    return rec.scores


# -- main entry point ----------------------------------------------------------

def resolve_workers(cluster) -> int:
    """``None``/``"off"``/``False`` -> 1, ``"auto"``/``True`` -> half the cores, int -> itself."""
    if cluster in (None, False, "off", 0, 1, "1"):
        return 1
    if cluster in (True, "auto"):
        return max(1, (os.cpu_count() or 2) // 2)
    try:
        n = int(cluster)
    except (TypeError, ValueError):
        raise ConfigError(f"cluster must be 'off', 'auto' or a worker count, not {cluster!r}") from None
    if n < 1:
        raise ConfigError("worker count must be >= 1")
    return n


class _Trace:
    """Paper-style progress trace on a text stream."""

    def __init__(self, out):
        self.out = out

    def experiment(self, est: EstimationTask):
        self.out.write(f"\n\n##### PERFORMANCE ESTIMATION USING  {est.method.title}  #####\n")

    def task(self, task_id):
        self.out.write(f"\n** PREDICTIVE TASK :: {task_id}\n")

    def cell(self, wf_id, est, task_type, workers):
        self.out.write(f"\n++ MODEL/WORKFLOW :: {wf_id} \n")
        if workers > 1:
            self.out.write(f"Running in parallel with {workers} worker(s)\n")
        self.out.write(est.describe(task_type) + " \n")
        self.out.write("Iteration :")
        self.out.flush()

    def iteration(self, i):
        self.out.write(f"  {i}")
        self.out.flush()

    def done(self):
        self.out.write("\n")
        self.out.flush()


def performance_estimation(tasks, workflows, est: EstimationTask | None = None, cluster=None,
                           verbose: bool = True, out=None,
                           progress: Callable[[str, str, int], None] | None = None) -> ComparisonResults:
    """Estimate every workflow on every task.

    Parameters
    ----------
    tasks : PredTask or list of PredTask
    workflows : Workflow or list of Workflow
    est : EstimationTask, default ``EstimationTask()`` (10-fold CV)
    cluster : None, "off", "auto" or int
        Worker threads used for the iterations of each task/workflow cell.
    verbose : bool
        Print the iteration trace to ``out`` (default stdout).
    progress : callable, optional
        Called as ``progress(task_id, wf_id, iteration)`` after each iteration.

    Returns
    -------
    ComparisonResults
        Failed iterations are recorded as invalid; they never abort the run.
    """
    tasks = [tasks] if isinstance(tasks, PredTask) else list(tasks)
    workflows = [workflows] if isinstance(workflows, Workflow) else list(workflows)
    est = est or EstimationTask()
    if not tasks or not workflows:
        raise ConfigError("need at least one task and one workflow")
    for label, ids in (("task", [t.id for t in tasks]), ("workflow", [w.wf_id for w in workflows])):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        if dup:
            raise ConfigError(f"duplicate {label} ids: {dup}")
    validate_estimation(tasks, est)
    workers = resolve_workers(cluster)
    trace = _Trace(out or sys.stdout) if verbose else None
    method = est.method
    seed = method.seed
    is_632 = isinstance(method, Bootstrap) and method.type == ".632"

    plans = {}
    for task in tasks:
        labels = task.data[task.target] if getattr(method, "strat", False) else None
        plans[task.id] = method.splits(task.n_rows, labels)

    if trace:
        trace.experiment(est)
    records = {}
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for ti, task in enumerate(tasks):
            plan = plans[task.id]
            if trace:
                trace.task(task.id)
            for wf in workflows:
                if trace:
                    trace.cell(wf.wf_id, est, task.task_type, workers if wf.concurrency_safe else 1)
                resub = None
                resub_error = None
                if is_632:
                    try:
                        resub = resubstitution_scores(task, wf, est, rng=stream(seed, ti, _RESUB_KEY))
                    except RuntimeError as exc:
                        resub_error = str(exc)

                def job(i, task=task, wf=wf, ti=ti, plan=plan, resub=resub, resub_error=resub_error):
                    if resub_error is not None:
                        return IterationRecord(None, {"train": 0.0, "test": 0.0}, True, resub_error, i)
                    return run_iteration(task, wf, plan[i], est, i, rng=stream(seed, ti, i), resub=resub)

                indices = range(len(plan))
                if pool is not None and wf.concurrency_safe:
                    results_iter = pool.map(job, indices)
                else:
                    results_iter = map(job, indices)
                cell = []
                for i, rec in enumerate(results_iter):
                    cell.append(rec)
                    if trace:
                        trace.iteration(i + 1)
                    if progress:
                        progress(task.id, wf.wf_id, i + 1)
                if trace:
                    trace.done()
                records[(task.id, wf.wf_id)] = cell
    finally:
        if pool is not None:
            pool.shutdown()

    provenance = {"seed": seed, "method": method.describe(), "toolVersion": __version__,
                  "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds")}
    return ComparisonResults(est, [t.describe() for t in tasks], list(workflows), records, plans, provenance)
