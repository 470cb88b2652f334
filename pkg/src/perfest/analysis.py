"""Exploring finished experiments: summaries, rankings, subsets and merges.

All statistics use valid iterations only. Invalid iterations are counted
and reported in the ``invalid`` row. Quantiles (median, IQR) use linear
interpolation between order statistics (numpy's default ``"linear"``
method, R's type 7).
"""

from __future__ import annotations

import copy
import csv
import fnmatch
import io
import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .engine import ComparisonResults, IterationRecord
from .exceptions import ConfigError, IncompatibleResultsError

STATS = ("avg", "std", "med", "iqr", "min", "max", "invalid")
REDUCERS = {"mean": np.mean, "median": np.median, "min": np.min, "max": np.max}


def _cell_scores(records: Sequence[IterationRecord], metric: str) -> np.ndarray:
    vals = [r.scores.get(metric, math.nan) for r in records if not r.invalid and r.scores]
    arr = np.asarray(vals, dtype=float)
    return arr[~np.isnan(arr)]


def describe_scores(scores, invalid: int = 0) -> dict[str, float]:
    """The seven summary statistics for one vector of valid scores."""
    x = np.asarray(scores, dtype=float)
    if x.size == 0:
        out = {s: math.nan for s in STATS}
    else:
        q1, med, q3 = np.quantile(x, [0.25, 0.5, 0.75])
        out = {"avg": float(x.mean()), "std": float(x.std(ddof=1)) if x.size > 1 else math.nan,
               "med": float(med), "iqr": float(q3 - q1), "min": float(x.min()), "max": float(x.max())}
    out["invalid"] = float(invalid)
    return out


@dataclass
class SummaryTable:
    """``stats[(task, workflow)][metric][statistic]``."""

    tasks: list[str]
    workflows: list[str]
    metrics: list[str]
    stats: dict

    def get(self, task: str, workflow: str, metric: str, stat: str = "avg") -> float:
        return self.stats[(task, workflow)][metric][stat]

    def rows(self) -> list[dict]:
        out = []
        for t in self.tasks:
            for w in self.workflows:
                for m in self.metrics:
                    row = {"task": t, "workflow": w, "metric": m}
                    row.update(self.stats[(t, w)][m])
                    out.append(row)
        return out

    def to_csv(self, path=None) -> str:
        return _write_csv(["task", "workflow", "metric", *STATS], self.rows(), path)

    def format(self, header: str = "") -> str:
        lines = [header] if header else []
        lines.append(f"* Predictive Tasks ::  {', '.join(self.tasks)}")
        lines.append(f"* Workflows  ::  {', '.join(self.workflows)} ")
        for t in self.tasks:
            lines.append(f"\n-> Task:  {t}")
            for w in self.workflows:
                lines.append(f"  *Workflow: {w} ")
                lines.append(_stat_block(self.stats[(t, w)], self.metrics))
        return "\n".join(lines)


def _fmt(v: float) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "NA"
    return f"{v:.6g}"


def _stat_block(cell: dict, metrics: list[str]) -> str:
    width = max(12, *(len(m) + 2 for m in metrics))
    lines = [" " * 8 + "".join(m.rjust(width) for m in metrics)]
    for s in STATS:
        lines.append(s.ljust(8) + "".join(_fmt(cell[m][s]).rjust(width) for m in metrics))
    return "\n".join(lines)


def _write_csv(header: list[str], rows: list[dict], path=None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({k: ("NA" if isinstance(v, float) and math.isnan(v) else v) for k, v in row.items()})
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def summarize(results: ComparisonResults) -> SummaryTable:
    """Summary statistics of every task/workflow/metric cell."""
    if not results.records:
        raise ConfigError("results object is empty")
    metrics = results.metrics
    stats = {}
    for t in results.task_ids:
        for w in results.workflow_ids:
            recs = results.cell(t, w)
            invalid = sum(r.invalid for r in recs)
            stats[(t, w)] = {m: describe_scores(_cell_scores(recs, m), invalid) for m in metrics}
    return SummaryTable(results.task_ids, results.workflow_ids, metrics, stats)


def format_summary(results: ComparisonResults) -> str:
    """Text summary laid out like the reference package's ``summary()``."""
    est = results.estimation_task
    head = (f"\n== Summary of a  {est.method.title.title()} Performance Estimation Experiment ==\n\n"
            f"{est.describe(results.tasks[0]['taskType'] if results.tasks else None)} \n")
    return summarize(results).format(head)


def estimation_summary(results: ComparisonResults, workflow: str, task: str) -> dict[str, dict[str, float]]:
    """Per-metric statistics of a single cell."""
    recs = results.cell(task, workflow)
    invalid = sum(r.invalid for r in recs)
    return {m: describe_scores(_cell_scores(recs, m), invalid) for m in results.metrics}


@dataclass
class ScoreMatrix:
    """Iterations x metrics scores of one cell (``nan`` for invalid rows)."""

    metrics: list[str]
    values: np.ndarray

    def to_csv(self, path=None) -> str:
        rows = [{"iteration": i + 1, **dict(zip(self.metrics, map(float, row)))}
                for i, row in enumerate(self.values)]
        return _write_csv(["iteration", *self.metrics], rows, path)


def get_scores(results: ComparisonResults, workflow: str, task: str) -> ScoreMatrix:
    metrics = results.metrics
    recs = results.cell(task, workflow)
    vals = np.full((len(recs), len(metrics)), math.nan)
    for i, r in enumerate(recs):
        if not r.invalid and r.scores:
            vals[i] = [r.scores.get(m, math.nan) for m in metrics]
    return ScoreMatrix(metrics, vals)


def metrics_summary(results: ComparisonResults, summary: str = "mean") -> dict:
    """``out[task][workflow][metric]`` = ``summary`` over the valid scores."""
    if summary not in REDUCERS:
        raise ConfigError(f"unknown summary function {summary!r}; use one of {sorted(REDUCERS)}")
    fn = REDUCERS[summary]
    out = {}
    for t in results.task_ids:
        out[t] = {}
        for w in results.workflow_ids:
            recs = results.cell(t, w)
            out[t][w] = {}
            for m in results.metrics:
                x = _cell_scores(recs, m)
                out[t][w][m] = float(fn(x)) if x.size else math.nan
    return out


def _maxs_for(metrics: list[str], maxs) -> dict[str, bool]:
    """Accept a bool list aligned with ``metrics``, a set of metric names or a mapping."""
    if maxs is None:
        return {m: False for m in metrics}
    if isinstance(maxs, bool):
        return {m: maxs for m in metrics}
    if isinstance(maxs, dict):
        return {m: bool(maxs.get(m, False)) for m in metrics}
    maxs = list(maxs)
    if all(isinstance(v, (bool, np.bool_)) for v in maxs):
        if len(maxs) != len(metrics):
            raise ConfigError(f"maxs has {len(maxs)} flags for {len(metrics)} metrics")
        return dict(zip(metrics, map(bool, maxs)))
    unknown = [m for m in maxs if m not in metrics]
    if unknown:
        raise ConfigError(f"maxs names unknown metric(s): {unknown}")
    return {m: m in maxs for m in metrics}


def rank_workflows(results: ComparisonResults, top: int | None = 5, maxs=None) -> dict:
    """``out[task][metric]`` = best ``top`` ``(workflow, avg)`` pairs.

    Lower averages rank first unless the metric is flagged in ``maxs``.
    Ties keep the declaration order; cells without valid scores are left out.
    """
    avgs = metrics_summary(results, "mean")
    flags = _maxs_for(results.metrics, maxs)
    out = {}
    for t in results.task_ids:
        out[t] = {}
        for m in results.metrics:
            pairs = [(w, avgs[t][w][m]) for w in results.workflow_ids if not math.isnan(avgs[t][w][m])]
            pairs.sort(key=lambda p: -p[1] if flags[m] else p[1])
            out[t][m] = pairs if top is None else pairs[:top]
    return out


def top_performers(results: ComparisonResults, maxs=None) -> dict:
    """``out[task][metric]`` = ``(workflow, avg)`` of the best workflow (or ``None``)."""
    ranks = rank_workflows(results, top=1, maxs=maxs)
    return {t: {m: (v[0] if v else None) for m, v in per.items()} for t, per in ranks.items()}


def ranking_rows(ranking: dict) -> list[dict]:
    return [{"task": t, "metric": m, "rank": i + 1, "workflow": w, "estimate": e}
            for t, per in ranking.items() for m, pairs in per.items() for i, (w, e) in enumerate(pairs)]


def ranking_to_csv(ranking: dict, path=None) -> str:
    return _write_csv(["task", "metric", "rank", "workflow", "estimate"], ranking_rows(ranking), path)


# -- subsetting ----------------------------------------------------------------

def glob_to_regex(pattern: str) -> str:
    """Shell-style wildcard pattern as an anchored regular expression."""
    return fnmatch.translate(pattern)


def _compile(pattern: str, dimension: str):
    try:
        return re.compile(pattern)
    except re.error as exc:
        raise ConfigError(f"invalid {dimension} pattern {pattern!r}: {exc}") from None


def _pick(names: list[str], pattern, dimension: str) -> list[str]:
    if pattern is None:
        return list(names)
    if isinstance(pattern, (list, tuple, set)):
        keep = [n for n in names if n in pattern]
    else:
        rx = _compile(pattern, dimension)
        # unanchored search: "a1" also matches "a10"
        keep = [n for n in names if rx.search(n)]
    if not keep:
        raise ConfigError(f"no {dimension} match {pattern!r}")
    return keep


def subset_results(results: ComparisonResults, tasks=None, workflows=None, metrics=None) -> ComparisonResults:
    """Keep the tasks, workflows and metrics matching the given patterns.

    Patterns are regular expressions matched anywhere in the name; anchor
    them (``"^a1$"``) for exact matches, or pass a list of exact names.
    """
    keep_t = _pick(results.task_ids, tasks, "tasks")
    keep_w = _pick(results.workflow_ids, workflows, "workflows")
    keep_m = _pick(results.metrics, metrics, "metrics")
    est = copy.deepcopy(results.estimation_task)
    est.metrics = keep_m
    records = {}
    for t in keep_t:
        for w in keep_w:
            records[(t, w)] = [_restrict(r, keep_m) for r in results.cell(t, w)]
    return ComparisonResults(est, [results.task(t) for t in keep_t], [results.workflow(w) for w in keep_w],
                             records, {t: results.plans[t] for t in keep_t if t in results.plans},
                             dict(results.provenance))


def _restrict(rec: IterationRecord, metrics: list[str]) -> IterationRecord:
    scores = None if rec.scores is None else {m: rec.scores[m] for m in metrics}
    return IterationRecord(scores, dict(rec.times), rec.invalid, rec.error, rec.split_index)


# -- merging -------------------------------------------------------------------

def _plan_descriptor(results: ComparisonResults, task: str):
    plan = results.plans.get(task)
    n = results.task(task).get("nRows")
    return None if plan is None else (plan.seed, plan.method, len(plan), n)


def _check_compatible(parts: list[ComparisonResults], same_tasks: bool, strict: bool) -> None:
    first = parts[0]
    seed = first.estimation_task.method.seed
    method = first.estimation_task.method.to_dict()
    for p in parts[1:]:
        if p.estimation_task.method.seed != seed:
            raise IncompatibleResultsError(
                f"cannot merge results with different seeds ({seed} vs {p.estimation_task.method.seed})")
        if p.estimation_task.method.to_dict() != method:
            raise IncompatibleResultsError(
                f"cannot merge results of different estimation methods "
                f"({first.estimation_task.method.describe()} vs {p.estimation_task.method.describe()})")
        if same_tasks:
            if p.task_ids != first.task_ids:
                raise IncompatibleResultsError(f"task sets differ: {first.task_ids} vs {p.task_ids}")
            for t in first.task_ids:
                if _plan_descriptor(p, t) != _plan_descriptor(first, t):
                    raise IncompatibleResultsError(f"split plans for task {t!r} differ")
                if strict and p.plans.get(t) != first.plans.get(t):
                    raise IncompatibleResultsError(f"split plan indices for task {t!r} differ")


def _disjoint(groups: Iterable[list[str]], dimension: str) -> list[str]:
    seen: list[str] = []
    for g in groups:
        clash = [x for x in g if x in seen]
        if clash:
            raise IncompatibleResultsError(f"{dimension} present in more than one object: {clash}")
        seen.extend(g)
    return seen


def merge_results(parts: Sequence[ComparisonResults], by: str = "workflows", strict: bool = False) -> ComparisonResults:
    """Union of several results objects along ``by`` (workflows, tasks or metrics).

    Every part must share the estimation method and seed. Merging by
    workflows or metrics also requires the same tasks with matching split
    plans; ``strict=True`` compares the plans index by index.
    """
    parts = list(parts)
    if not parts:
        raise ConfigError("nothing to merge")
    if by not in ("workflows", "tasks", "metrics"):
        raise ConfigError(f"by must be 'workflows', 'tasks' or 'metrics', not {by!r}")
    if len(parts) == 1:
        return parts[0]
    first = parts[0]
    _check_compatible(parts, same_tasks=by != "tasks", strict=strict)
    est = copy.deepcopy(first.estimation_task)
    provenance = dict(first.provenance)
    provenance["mergedFrom"] = len(parts)
    records: dict = {}
    if by == "workflows":
        _disjoint((p.workflow_ids for p in parts), "workflows")
        _same([p.metrics for p in parts], "metrics")
        workflows = [w for p in parts for w in p.workflows]
        for p in parts:
            records.update(p.records)
        records = {(t, w.wf_id): records[(t, w.wf_id)] for t in first.task_ids for w in workflows}
        return ComparisonResults(est, list(first.tasks), workflows, records, dict(first.plans), provenance)
    if by == "tasks":
        _disjoint((p.task_ids for p in parts), "tasks")
        _same([p.workflow_ids for p in parts], "workflows")
        _same([p.metrics for p in parts], "metrics")
        tasks, plans = [], {}
        for p in parts:
            tasks.extend(p.tasks)
            plans.update(p.plans)
            records.update(p.records)
        return ComparisonResults(est, tasks, list(first.workflows), records, plans, provenance)
    _same([p.workflow_ids for p in parts], "workflows")
    metrics = _disjoint((p.metrics for p in parts), "metrics")
    est.metrics = metrics
    for key in first.records:
        cells = [p.records[key] for p in parts]
        if len({len(c) for c in cells}) != 1:
            raise IncompatibleResultsError(f"iteration counts differ for cell {key}")
        merged = []
        for recs in zip(*cells):
            invalid = any(r.invalid for r in recs)
            scores = None if invalid else {m: v for r in recs for m, v in r.scores.items()}
            error = "; ".join(r.error for r in recs if r.error) or None
            merged.append(IterationRecord(scores, dict(recs[0].times), invalid, error, recs[0].split_index))
        records[key] = merged
    return ComparisonResults(est, list(first.tasks), list(first.workflows), records, dict(first.plans), provenance)


def _same(groups: list[list[str]], dimension: str) -> None:
    if any(g != groups[0] for g in groups[1:]):
        raise IncompatibleResultsError(f"{dimension} differ between the objects being merged")
