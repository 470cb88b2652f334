"""Paired statistical comparison of workflows.

Multiple-task comparisons rank the workflows on every task (rank 1 = best,
ties get mean ranks), test the average ranks with the Friedman statistic in
its Iman-Davenport F form, and follow up with the Nemenyi (all pairs) or
Bonferroni-Dunn (against a baseline) critical difference. Per-task
comparisons against a baseline use the paired t test and the Wilcoxon
signed-rank test over iterations that share a split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from ._qtable import Q_TABLE
from .analysis import _maxs_for, metrics_summary
from .engine import ComparisonResults
from .exceptions import ConfigError

DEFAULT_ALPHA = 0.05
WILCOXON_EXACT_MAX = 25


@dataclass
class RankSummary:
    """Workflow x task score and rank matrices."""

    workflows: list[str]
    tasks: list[str]
    avg_scores: np.ndarray
    med_scores: np.ndarray
    rks: np.ndarray

    @property
    def avg_rks(self) -> np.ndarray:
        return self.rks.mean(axis=1)

    @property
    def k(self) -> int:
        return len(self.workflows)

    @property
    def n(self) -> int:
        return len(self.tasks)


def compute_ranks(avg_scores, maxs: bool = False, workflows=None, tasks=None, med_scores=None) -> RankSummary:
    """Rank workflows (rows) within each task (column).

    Rank 1 goes to the lowest score, or the highest when ``maxs`` is true.
    """
    a = np.asarray(avg_scores, dtype=float)
    if a.ndim != 2:
        raise ValueError("avg_scores must be a workflow x task matrix")
    k, n = a.shape
    if k < 2:
        raise ConfigError("ranking needs at least 2 workflows")
    if np.isnan(a).any():
        raise ConfigError("ranking needs a complete score matrix (no missing averages)")
    rks = np.column_stack([sps.rankdata(-a[:, j] if maxs else a[:, j]) for j in range(n)]) if n else np.empty((k, 0))
    workflows = list(workflows) if workflows is not None else [f"w{i + 1}" for i in range(k)]
    tasks = list(tasks) if tasks is not None else [f"t{j + 1}" for j in range(n)]
    med = np.asarray(med_scores, dtype=float) if med_scores is not None else a.copy()
    return RankSummary(workflows, tasks, a, med, rks)


# -- Friedman ------------------------------------------------------------------

@dataclass
class FriedmanResult:
    chi: float
    FF: float
    crit_val: float
    rej_null: bool
    alpha: float = DEFAULT_ALPHA

    def to_dict(self) -> dict:
        return {"chi": self.chi, "FF": self.FF, "critVal": self.crit_val, "rejNull": self.rej_null,
                "alpha": self.alpha}


def friedman_chi(avg_rks, n: int) -> float:
    r = np.asarray(avg_rks, dtype=float)
    k = r.size
    return float(12.0 * n / (k * (k + 1)) * (np.sum(r ** 2) - k * (k + 1) ** 2 / 4.0))


def iman_davenport(chi: float, n: int, k: int) -> float:
    """F form of the Friedman statistic; ``inf`` when ``chi >= n (k - 1)``."""
    denom = n * (k - 1) - chi
    if denom <= 0:
        return math.inf
    return (n - 1) * chi / denom


def f_critical(alpha: float, k: int, n: int) -> float:
    return float(sps.f.ppf(1 - alpha, k - 1, (k - 1) * (n - 1)))


def friedman_from_chi(chi: float, n: int, k: int, alpha: float = DEFAULT_ALPHA) -> FriedmanResult:
    if n < 2 or k < 2:
        raise ConfigError("the Friedman test needs at least 2 tasks and 2 workflows")
    ff = iman_davenport(chi, n, k)
    crit = f_critical(alpha, k, n)
    return FriedmanResult(float(chi), float(ff), crit, bool(ff > crit), alpha)


def friedman_test(ranks: RankSummary, alpha: float = DEFAULT_ALPHA) -> FriedmanResult:
    return friedman_from_chi(friedman_chi(ranks.avg_rks, ranks.n), ranks.n, ranks.k, alpha)


# -- post-hoc tests ------------------------------------------------------------

def nemenyi_q(k: int, alpha: float = DEFAULT_ALPHA) -> float:
    """Studentized range quantile (infinite df) over sqrt(2)."""
    if k < 2:
        raise ConfigError("need at least 2 workflows")
    table = Q_TABLE.get(alpha)
    if table is not None and k in table:
        return table[k]
    return float(sps.studentized_range.ppf(1 - alpha, k, np.inf) / math.sqrt(2))


def bonferroni_dunn_q(k: int, alpha: float = DEFAULT_ALPHA) -> float:
    """Two-sided normal quantile corrected for ``k - 1`` comparisons."""
    if k < 2:
        raise ConfigError("need at least 2 workflows")
    return float(sps.norm.ppf(1 - alpha / (2 * (k - 1))))


def critical_difference(q: float, k: int, n: int) -> float:
    return q * math.sqrt(k * (k + 1) / (6.0 * n))


@dataclass
class NemenyiResult:
    workflows: list[str]
    avg_rks: np.ndarray
    crit_dif: float
    rk_difs: np.ndarray
    signif_difs: np.ndarray
    alpha: float = DEFAULT_ALPHA

    def to_dict(self) -> dict:
        return {"critDif": self.crit_dif, "rkDifs": _labelled(self.workflows, self.rk_difs),
                "signifDifs": _labelled(self.workflows, self.signif_difs)}


@dataclass
class BonferroniDunnResult:
    workflows: list[str]
    avg_rks: np.ndarray
    baseline: str
    crit_dif: float
    diffs: np.ndarray
    signif_difs: np.ndarray
    alpha: float = DEFAULT_ALPHA

    def to_dict(self) -> dict:
        return {"baseline": self.baseline, "critDif": self.crit_dif,
                "diffMeanRankBaseline": dict(zip(self.workflows, self.diffs.tolist())),
                "signifDifs": dict(zip(self.workflows, self.signif_difs.tolist()))}


def _labelled(names, matrix) -> dict:
    return {a: {b: matrix[i, j].item() for j, b in enumerate(names)} for i, a in enumerate(names)}


def nemenyi_test_from_ranks(avg_rks, n: int, alpha: float = DEFAULT_ALPHA, workflows=None) -> NemenyiResult:
    r = np.asarray(avg_rks, dtype=float)
    k = r.size
    cd = critical_difference(nemenyi_q(k, alpha), k, n)
    difs = np.abs(r[:, None] - r[None, :])
    workflows = list(workflows) if workflows is not None else [f"w{i + 1}" for i in range(k)]
    return NemenyiResult(workflows, r, cd, difs, difs > cd, alpha)


def nemenyi_test(ranks: RankSummary, alpha: float = DEFAULT_ALPHA) -> NemenyiResult:
    if ranks.n < 2:
        raise ConfigError("the Nemenyi test needs at least 2 tasks")
    return nemenyi_test_from_ranks(ranks.avg_rks, ranks.n, alpha, ranks.workflows)


def bonferroni_dunn_test(ranks: RankSummary, baseline: str, alpha: float = DEFAULT_ALPHA) -> BonferroniDunnResult:
    if ranks.n < 2:
        raise ConfigError("the Bonferroni-Dunn test needs at least 2 tasks")
    if baseline not in ranks.workflows:
        raise ConfigError(f"unknown baseline workflow {baseline!r}")
    r = ranks.avg_rks
    cd = critical_difference(bonferroni_dunn_q(ranks.k, alpha), ranks.k, ranks.n)
    diffs = np.abs(r - r[ranks.workflows.index(baseline)])
    return BonferroniDunnResult(list(ranks.workflows), r, baseline, cd, diffs, diffs > cd, alpha)


# -- paired tests on iterations ------------------------------------------------

def paired_t(x, y) -> tuple[float, float, str | None]:
    """Mean difference ``x - y``, two-sided p value and an optional note."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    n = d.size
    if n < 2:
        return (float(d.mean()) if n else math.nan), math.nan, "too few paired iterations"
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0:
        if mean == 0:
            return 0.0, 1.0, None
        return mean, math.nan, "degenerate: constant non-zero differences"
    t = mean / (sd / math.sqrt(n))
    return mean, float(2 * sps.t.sf(abs(t), n - 1)), None


def _signed_rank_null(doubled: np.ndarray) -> np.ndarray:
    """Counts of sign assignments for every value of the doubled positive-rank sum."""
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=float)
    counts[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[int(r):] = counts[:counts.size - int(r)]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(x, y=None, exact_max: int = WILCOXON_EXACT_MAX) -> tuple[float, float, str | None]:
    """Signed-rank statistic ``W+`` and its two-sided p value.

    Zero differences are dropped and tied magnitudes get mean ranks. The
    exact null distribution is used up to ``exact_max`` non-zero
    differences, then a normal approximation with tie and continuity
    corrections.
    """
    d = np.asarray(x, dtype=float)
    if y is not None:
        d = d - np.asarray(y, dtype=float)
    d = d[d != 0]
    n = d.size
    if n == 0:
        return 0.0, math.nan, "no non-zero differences"
    ranks = sps.rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    if n <= exact_max:
        doubled = np.rint(2 * ranks).astype(int)
        counts = _signed_rank_null(doubled)
        t = int(round(2 * w_plus))
        total = counts.sum()
        lower = counts[: t + 1].sum() / total
        upper = counts[t:].sum() / total
        return w_plus, float(min(1.0, 2 * min(lower, upper))), None
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts ** 3 - tie_counts) / 48.0
    if var <= 0:
        return w_plus, math.nan, "degenerate: zero variance"
    z = max(abs(w_plus - mean) - 0.5, 0.0) / math.sqrt(var)
    return w_plus, float(min(1.0, 2 * sps.norm.sf(z))), None


@dataclass
class PairwiseTestResult:
    """Per task and workflow: score, difference to the baseline and p value."""

    test: str
    baseline: str
    workflows: list[str]
    tasks: list[str]
    score: np.ndarray
    diff: np.ndarray
    p_value: np.ndarray
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        label = "MedScore" if self.test == "wilcoxon" else "AvgScore"
        out = {"baseline": self.baseline, "tasks": {}}
        for j, t in enumerate(self.tasks):
            out["tasks"][t] = {w: {label: _num(self.score[i, j]), "DiffScores": _num(self.diff[i, j]),
                                   "p.value": _num(self.p_value[i, j])}
                               for i, w in enumerate(self.workflows)}
        if self.notes:
            out["notes"] = {f"{t}/{w}": msg for (t, w), msg in self.notes.items()}
        return out


def _num(v):
    v = float(v)
    return None if math.isnan(v) else v


def _paired_scores(results: ComparisonResults, task: str, wf: str, baseline: str, metric: str):
    def valid(recs):
        return {r.split_index: r.scores[metric] for r in recs
                if not r.invalid and r.scores and not math.isnan(r.scores.get(metric, math.nan))}
    a = valid(results.cell(task, wf))
    b = valid(results.cell(task, baseline))
    common = sorted(set(a) & set(b))
    return np.array([a[i] for i in common]), np.array([b[i] for i in common])


def pairwise_tests(results: ComparisonResults, metric: str, baseline: str, test: str = "t") -> PairwiseTestResult:
    """Compare every workflow with ``baseline`` task by task over shared splits."""
    if test not in ("t", "wilcoxon"):
        raise ConfigError("test must be 't' or 'wilcoxon'")
    if baseline not in results.workflow_ids:
        raise ConfigError(f"unknown baseline workflow {baseline!r}")
    wfs, tasks = results.workflow_ids, results.task_ids
    shape = (len(wfs), len(tasks))
    score, diff, pval = np.full(shape, math.nan), np.full(shape, math.nan), np.full(shape, math.nan)
    notes = {}
    centre = np.median if test == "wilcoxon" else np.mean
    for j, t in enumerate(tasks):
        for i, w in enumerate(wfs):
            x, y = _paired_scores(results, t, w, baseline, metric)
            if x.size:
                score[i, j] = centre(x)
                diff[i, j] = centre(x) - centre(y)
            if w == baseline:
                diff[i, j] = 0.0
                continue
            if test == "t":
                _, p, note = paired_t(x, y)
            else:
                _, p, note = wilcoxon_signed_rank(x, y)
            pval[i, j] = p
            if note:
                notes[(t, w)] = note
    return PairwiseTestResult(test, baseline, list(wfs), list(tasks), score, diff, pval, notes)


def paired_t_test(results: ComparisonResults, metric: str, baseline: str) -> PairwiseTestResult:
    return pairwise_tests(results, metric, baseline, "t")


def wilcoxon_test(results: ComparisonResults, metric: str, baseline: str) -> PairwiseTestResult:
    return pairwise_tests(results, metric, baseline, "wilcoxon")


# -- everything at once --------------------------------------------------------

@dataclass
class PairedComparison:
    """All comparisons of one metric."""

    metric: str
    setup: dict
    ranks: RankSummary | None
    t_test: PairwiseTestResult
    wilcoxon: PairwiseTestResult
    friedman: FriedmanResult | None = None
    nemenyi: NemenyiResult | None = None
    bonferroni_dunn: BonferroniDunnResult | None = None
    notices: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {"setup": self.setup}
        if self.ranks is not None:
            r = self.ranks
            out["avgScores"] = {w: dict(zip(r.tasks, r.avg_scores[i].tolist())) for i, w in enumerate(r.workflows)}
            out["medScores"] = {w: dict(zip(r.tasks, r.med_scores[i].tolist())) for i, w in enumerate(r.workflows)}
            out["rks"] = {w: dict(zip(r.tasks, r.rks[i].tolist())) for i, w in enumerate(r.workflows)}
            out["avgRksWfs"] = dict(zip(r.workflows, r.avg_rks.tolist()))
        out["t.test"] = self.t_test.to_dict()
        out["WilcoxonSignedRank.test"] = self.wilcoxon.to_dict()
        out["F.test"] = self.friedman.to_dict() if self.friedman else None
        out["Nemenyi.test"] = self.nemenyi.to_dict() if self.nemenyi else None
        out["BonferroniDunn.test"] = self.bonferroni_dunn.to_dict() if self.bonferroni_dunn else None
        out["notices"] = list(self.notices)
        return out


def paired_comparisons(results: ComparisonResults, baseline: str | None = None, maxs=None,
                       alpha: float = DEFAULT_ALPHA, metrics=None) -> dict[str, PairedComparison]:
    """Rank tests and per-task paired tests for every metric.

    The default baseline is the workflow with the best average rank.
    Workflows lacking a valid average on some task are left out of the rank
    tests (a notice says so); the rank tests need at least 2 tasks.
    """
    wfs, tasks = results.workflow_ids, results.task_ids
    if len(wfs) < 2:
        raise ConfigError("comparisons need at least 2 workflows")
    if baseline is not None and baseline not in wfs:
        raise ConfigError(f"unknown baseline workflow {baseline!r}")
    metrics = list(metrics) if metrics else results.metrics
    flags = _maxs_for(results.metrics, maxs)
    avgs = metrics_summary(results, "mean")
    meds = metrics_summary(results, "median")
    out = {}
    for m in metrics:
        notices = []
        a = np.array([[avgs[t][w][m] for t in tasks] for w in wfs])
        md = np.array([[meds[t][w][m] for t in tasks] for w in wfs])
        complete = ~np.isnan(a).any(axis=1)
        if not complete.all():
            dropped = [w for w, ok in zip(wfs, complete) if not ok]
            notices.append(f"left out of rank tests (missing average scores): {', '.join(dropped)}")
        ranked = [w for w, ok in zip(wfs, complete) if ok]
        ranks = None
        if len(ranked) >= 2:
            ranks = compute_ranks(a[complete], flags[m], ranked, tasks, md[complete])
        else:
            notices.append("rank tests skipped: fewer than 2 workflows with complete scores")
        base = baseline
        if base is None:
            base = ranks.workflows[int(np.argmin(ranks.avg_rks))] if ranks is not None else wfs[0]
        pc = PairedComparison(m, {"metric": m, "baseline": base, "alpha": alpha, "maxs": flags[m],
                                  "nTasks": len(tasks), "nWorkflows": len(wfs)},
                              ranks, pairwise_tests(results, m, base, "t"),
                              pairwise_tests(results, m, base, "wilcoxon"), notices=notices)
        if ranks is not None and ranks.n < 2:
            notices.append("Friedman and post-hoc tests skipped: they need N >= 2 tasks")
        elif ranks is not None:
            pc.friedman = friedman_test(ranks, alpha)
            pc.nemenyi = nemenyi_test(ranks, alpha)
            if base in ranks.workflows:
                pc.bonferroni_dunn = bonferroni_dunn_test(ranks, base, alpha)
            else:
                notices.append(f"Bonferroni-Dunn skipped: baseline {base!r} has no complete scores")
        out[m] = pc
    return out
