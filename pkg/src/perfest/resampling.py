"""Seeded train/test split plans for the five estimation methodologies.

Every generator draws from a PCG64 stream keyed by ``(seed, repetition)``,
so plans are identical across platforms and repetitions are independent.
Indices are 0-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError
from .frame import CATEGORICAL, Column

BOOTSTRAP_MAX_REDRAWS = 100


def stream(*key: int) -> np.random.Generator:
    """Independent generator for an integer key (e.g. seed, repetition)."""
    words = [int(k) % (1 << 64) for k in key]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    test: np.ndarray

    def __eq__(self, other):
        return (isinstance(other, Split) and np.array_equal(self.train, other.train)
                and np.array_equal(self.test, other.test))


@dataclass
class SplitPlan:
    """Ordered list of (train, test) index pairs plus provenance."""

    iterations: list[Split]
    seed: int
    method: str

    def __len__(self):
        return len(self.iterations)

    def __iter__(self):
        return iter(self.iterations)

    def __getitem__(self, i) -> Split:
        return self.iterations[i]

    def __eq__(self, other):
        return (isinstance(other, SplitPlan) and self.seed == other.seed and self.method == other.method
                and len(self) == len(other) and all(a == b for a, b in zip(self, other)))

    def to_dict(self) -> dict:
        return {"seed": self.seed, "method": self.method,
                "iterations": [[s.train.tolist(), s.test.tolist()] for s in self.iterations]}

    @classmethod
    def from_dict(cls, d: dict) -> "SplitPlan":
        its = [Split(np.asarray(tr, dtype=int), np.asarray(ts, dtype=int)) for tr, ts in d["iterations"]]
        return cls(its, int(d.get("seed", 0)), str(d.get("method", "user-supplied")))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SplitPlan":
        return cls.from_dict(json.loads(text))

    def validate(self, n: int, kind: str = "generic") -> None:
        """Check the plan against the invariants of methodology ``kind``.

        ``kind`` is one of ``cv``, ``loocv``, ``holdout``, ``bootstrap``,
        ``montecarlo`` or ``generic`` (range checks only).
        """
        if not self.iterations:
            raise ConfigError("split plan has no iterations")
        for i, s in enumerate(self.iterations, start=1):
            for part, idx in (("train", s.train), ("test", s.test)):
                if idx.size == 0:
                    raise ConfigError(f"iteration {i}: empty {part} set")
                if idx.min() < 0 or idx.max() >= n:
                    raise ConfigError(f"iteration {i}: {part} index out of range [0, {n})")
            if kind in ("cv", "loocv", "holdout"):
                if len(np.unique(s.train)) != len(s.train):
                    raise ConfigError(f"iteration {i}: duplicate train indices")
                if np.intersect1d(s.train, s.test).size:
                    raise ConfigError(f"iteration {i}: train and test overlap")
            elif kind == "bootstrap":
                oob = np.setdiff1d(np.arange(n), s.train)
                if not np.array_equal(np.sort(s.test), oob):
                    raise ConfigError(f"iteration {i}: test set is not the out-of-bag set")
            elif kind == "montecarlo":
                if s.train.max() >= s.test.min():
                    raise ConfigError(f"iteration {i}: train window does not precede test window")
                for part, idx in (("train", s.train), ("test", s.test)):
                    if not np.array_equal(idx, np.arange(idx[0], idx[0] + len(idx))):
                        raise ConfigError(f"iteration {i}: {part} window not contiguous")


def _labels_array(labels, n: int, n_bins: int) -> np.ndarray | None:
    """Integer strata per row; numeric labels are binned by equal frequency."""
    if labels is None:
        return None
    if isinstance(labels, Column):
        if labels.kind == CATEGORICAL:
            codes = labels.codes()
        else:
            codes = _equal_frequency_bins(labels.values, n_bins)
    else:
        arr = np.asarray(labels)
        if arr.dtype.kind in "fiu":
            codes = _equal_frequency_bins(arr.astype(float), n_bins)
        else:
            _, codes = np.unique(arr.astype(str), return_inverse=True)
    if len(codes) != n:
        raise ConfigError(f"labels have {len(codes)} entries, expected {n}")
    return np.asarray(codes, dtype=int)


def _equal_frequency_bins(values: np.ndarray, n_bins: int) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    bins = np.empty(len(values), dtype=int)
    bins[order] = (np.arange(len(values)) * n_bins) // max(len(values), 1)
    return bins


def _complement(n: int, test: np.ndarray) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    mask[test] = False
    return np.flatnonzero(mask)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


# -- method settings -----------------------------------------------------------

@dataclass
class CV:
    """k-fold cross validation, optionally repeated and stratified."""

    n_reps: int = 1
    n_folds: int = 10
    seed: int = 1234
    strat: bool = False
    data_splits: SplitPlan | None = None

    name = "CV"
    kind = "cv"
    title = "CROSS VALIDATION"

    def __post_init__(self):
        if self.n_folds < 2:
            raise ConfigError("nFolds must be >= 2")
        if self.n_reps < 1:
            raise ConfigError("nReps must be >= 1")

    def describe(self) -> str:
        s = f"{self.n_reps} x {self.n_folds} - Fold Cross Validation"
        return s + " (stratified)" if self.strat else s

    def iteration_count(self, n: int) -> int:
        return len(self.data_splits) if self.data_splits else self.n_reps * self.n_folds

    def splits(self, n: int, labels=None) -> SplitPlan:
        if self.data_splits is not None:
            return _user_plan(self.data_splits, n, self)
        return cv_splits(n, labels, self)

    def to_dict(self) -> dict:
        return {"name": self.name, "nReps": self.n_reps, "nFolds": self.n_folds,
                "seed": self.seed, "strat": self.strat}


@dataclass
class Holdout:
    """Holdout; ``n_reps > 1`` gives random sub-sampling."""

    n_reps: int = 1
    hld_sz: float = 0.3
    seed: int = 1234
    strat: bool = False
    data_splits: SplitPlan | None = None

    name = "Holdout"
    kind = "holdout"
    title = "HOLD OUT"

    def __post_init__(self):
        if not 0 < self.hld_sz < 1:
            raise ConfigError("hldSz must lie in (0, 1)")
        if self.n_reps < 1:
            raise ConfigError("nReps must be >= 1")

    def describe(self) -> str:
        s = f"{self.n_reps} x {round(self.hld_sz * 100)} % Holdout"
        return s + " (stratified)" if self.strat else s

    def iteration_count(self, n: int) -> int:
        return len(self.data_splits) if self.data_splits else self.n_reps

    def splits(self, n: int, labels=None) -> SplitPlan:
        if self.data_splits is not None:
            return _user_plan(self.data_splits, n, self)
        return holdout_splits(n, labels, self)

    def to_dict(self) -> dict:
        return {"name": self.name, "nReps": self.n_reps, "hldSz": self.hld_sz,
                "seed": self.seed, "strat": self.strat}


@dataclass
class Bootstrap:
    """Bootstrap resampling; ``type`` is ``"e0"`` or ``".632"``."""

    type: str = "e0"
    n_reps: int = 200
    seed: int = 1234
    data_splits: SplitPlan | None = None

    name = "Bootstrap"
    kind = "bootstrap"
    title = "BOOTSTRAP"

    def __post_init__(self):
        if self.type in ("dot632", "632"):
            self.type = ".632"
        if self.type not in ("e0", ".632"):
            raise ConfigError("bootstrap type must be 'e0' or '.632'")
        if self.n_reps < 1:
            raise ConfigError("nReps must be >= 1")

    def describe(self) -> str:
        return f"{self.n_reps} repetitions of {self.type} Bootstrap experiment"

    def iteration_count(self, n: int) -> int:
        return len(self.data_splits) if self.data_splits else self.n_reps

    def splits(self, n: int, labels=None) -> SplitPlan:
        if self.data_splits is not None:
            return _user_plan(self.data_splits, n, self)
        return bootstrap_splits(n, self)

    def to_dict(self) -> dict:
        return {"name": self.name, "type": self.type, "nReps": self.n_reps, "seed": self.seed}


@dataclass
class LOOCV:
    """Leave-one-out cross validation."""

    seed: int = 1234
    data_splits: SplitPlan | None = None

    name = "LOOCV"
    kind = "loocv"
    title = "LOOCV"

    def describe(self) -> str:
        return "Leave One Out Cross Validation"

    def iteration_count(self, n: int) -> int:
        return len(self.data_splits) if self.data_splits else n

    def splits(self, n: int, labels=None) -> SplitPlan:
        if self.data_splits is not None:
            return _user_plan(self.data_splits, n, self)
        return loocv_splits(n, self)

    def to_dict(self) -> dict:
        return {"name": self.name, "seed": self.seed}


@dataclass
class MonteCarlo:
    """Time-ordered Monte Carlo train/test windows.

    ``sz_train``/``sz_test`` below 1 are fractions of the data size (floored),
    otherwise absolute row counts.
    """

    n_reps: int = 10
    sz_train: float = 0.25
    sz_test: float = 0.25
    seed: int = 1234
    data_splits: SplitPlan | None = None

    name = "MonteCarlo"
    kind = "montecarlo"
    title = "MONTE CARLO"

    def __post_init__(self):
        if self.n_reps < 1:
            raise ConfigError("nReps must be >= 1")
        for label, v in (("szTrain", self.sz_train), ("szTest", self.sz_test)):
            if v <= 0 or (v >= 1 and v != int(v)):
                raise ConfigError(f"{label} must be a fraction in (0,1) or a positive integer count")

    def window_sizes(self, n: int) -> tuple[int, int]:
        return _resolve_size(self.sz_train, n), _resolve_size(self.sz_test, n)

    def describe(self) -> str:
        return (f"{self.n_reps} repetitions Monte Carlo Simulation using:\n"
                f"\t seed = {self.seed}\n\t train size = {_fmt_size(self.sz_train)}\n"
                f"\t test size = {_fmt_size(self.sz_test)}")

    def iteration_count(self, n: int) -> int:
        return len(self.data_splits) if self.data_splits else self.n_reps

    def splits(self, n: int, labels=None) -> SplitPlan:
        if self.data_splits is not None:
            return _user_plan(self.data_splits, n, self)
        return monte_carlo_splits(n, self)

    def to_dict(self) -> dict:
        return {"name": self.name, "nReps": self.n_reps, "szTrain": self.sz_train,
                "szTest": self.sz_test, "seed": self.seed}


def _fmt_size(v: float) -> str:
    return f"{v * 100:g} % of the data" if v < 1 else f"{int(v)} cases"


def _resolve_size(v: float, n: int) -> int:
    return int(math.floor(v * n)) if v < 1 else int(v)


METHODS = {"CV": CV, "Holdout": Holdout, "Bootstrap": Bootstrap, "LOOCV": LOOCV, "MonteCarlo": MonteCarlo}

_PARAM_NAMES = {"nReps": "n_reps", "nFolds": "n_folds", "hldSz": "hld_sz", "szTrain": "sz_train",
                "szTest": "sz_test", "dataSplits": "data_splits"}


def method_from_dict(d: dict):
    """Build a method settings object from its config mapping."""
    d = dict(d)
    name = d.pop("name", None)
    if name not in METHODS:
        raise ConfigError(f"unknown estimation method {name!r}; choose from {sorted(METHODS)}")
    kwargs = {}
    for k, v in d.items():
        key = _PARAM_NAMES.get(k, k)
        if key == "data_splits" and v is not None and not isinstance(v, SplitPlan):
            v = SplitPlan.from_dict(v)
        kwargs[key] = v
    try:
        return METHODS[name](**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name}: {exc}") from None


def _user_plan(plan: SplitPlan, n: int, method) -> SplitPlan:
    plan.validate(n, method.kind)
    return SplitPlan(list(plan.iterations), method.seed, plan.method or method.describe())


# -- generators ----------------------------------------------------------------

def cv_splits(n: int, labels=None, cfg: CV | None = None) -> SplitPlan:
    """k-fold CV plan: ``n_reps * n_folds`` iterations, fold sizes within 1.

    With ``strat``, rows are shuffled and each class's members are dealt
    round-robin across folds (the deal continues from class to class).
    """
    cfg = cfg or CV()
    k = cfg.n_folds
    if n < k:
        raise ConfigError(f"cannot build {k} folds from {n} rows")
    strata = None
    if cfg.strat:
        if labels is None:
            raise ConfigError("stratified CV requires target labels")
        strata = _labels_array(labels, n, min(k, 10))
    iterations = []
    for rep in range(cfg.n_reps):
        rng = stream(cfg.seed, rep)
        perm = rng.permutation(n)
        fold_of = np.empty(n, dtype=int)
        if strata is None:
            for f, members in enumerate(np.array_split(perm, k)):
                fold_of[members] = f
        else:
            counter = 0
            for c in np.unique(strata):
                members = perm[strata[perm] == c]
                fold_of[members] = (counter + np.arange(len(members))) % k
                counter += len(members)
        for f in range(k):
            test = np.flatnonzero(fold_of == f)
            iterations.append(Split(np.flatnonzero(fold_of != f), test))
    return SplitPlan(iterations, cfg.seed, cfg.describe())


def holdout_splits(n: int, labels=None, cfg: Holdout | None = None) -> SplitPlan:
    """Holdout plan; test size is ``round(n * hld_sz)`` (half rounds up)."""
    cfg = cfg or Holdout()
    if n < 2 or math.floor(n * cfg.hld_sz) < 1:
        raise ConfigError(f"holdout of {cfg.hld_sz} leaves no test rows out of {n}")
    m = _round_half_up(n * cfg.hld_sz)
    if m >= n:
        raise ConfigError(f"holdout of {cfg.hld_sz} leaves no training rows out of {n}")
    strata = None
    if cfg.strat:
        if labels is None:
            raise ConfigError("stratified holdout requires target labels")
        strata = _labels_array(labels, n, 10)
    iterations = []
    for rep in range(cfg.n_reps):
        rng = stream(cfg.seed, rep)
        if strata is None:
            test = np.sort(rng.permutation(n)[:m])
        else:
            classes, counts = np.unique(strata, return_counts=True)
            alloc = _largest_remainder(counts * m / n, m)
            parts = []
            for c, a in zip(classes, alloc):
                members = np.flatnonzero(strata == c)
                parts.append(members[rng.permutation(len(members))[:a]])
            test = np.sort(np.concatenate(parts))
        iterations.append(Split(_complement(n, test), test))
    return SplitPlan(iterations, cfg.seed, cfg.describe())


def _largest_remainder(quotas: np.ndarray, total: int) -> np.ndarray:
    base = np.floor(quotas).astype(int)
    short = total - base.sum()
    order = np.argsort(-(quotas - base), kind="stable")
    base[order[:short]] += 1
    return base


def bootstrap_splits(n: int, cfg: Bootstrap | None = None) -> SplitPlan:
    """Bootstrap plan: ``n`` draws with replacement, out-of-bag rows as test."""
    cfg = cfg or Bootstrap()
    if n < 2:
        raise ConfigError("bootstrap needs at least 2 rows")
    iterations = []
    for rep in range(cfg.n_reps):
        rng = stream(cfg.seed, rep)
        for _ in range(BOOTSTRAP_MAX_REDRAWS):
            train = rng.integers(0, n, size=n)
            test = _complement(n, train)
            if test.size:
                break
        else:
            raise ConfigError(f"no out-of-bag rows after {BOOTSTRAP_MAX_REDRAWS} draws")
        iterations.append(Split(train, test))
    return SplitPlan(iterations, cfg.seed, cfg.describe())


def loocv_splits(n: int, cfg: LOOCV | None = None) -> SplitPlan:
    cfg = cfg or LOOCV()
    if n < 2:
        raise ConfigError("LOOCV needs at least 2 rows")
    everything = np.arange(n)
    iterations = [Split(np.delete(everything, i), np.array([i])) for i in range(n)]
    return SplitPlan(iterations, cfg.seed, cfg.describe())


def monte_carlo_splits(n: int, cfg: MonteCarlo | None = None) -> SplitPlan:
    """Monte Carlo plan of contiguous, time-ordered windows.

    Anchors ``r`` are drawn without replacement from ``w_train..n - w_test``
    (inclusive); iteration trains on ``[r - w_train, r)`` and tests on
    ``[r, r + w_test)``. Iterations are sorted by anchor.
    """
    cfg = cfg or MonteCarlo()
    w_train, w_test = cfg.window_sizes(n)
    if w_train < 1 or w_test < 1:
        raise ConfigError(f"window sizes must be positive (train={w_train}, test={w_test})")
    if w_train + w_test >= n:
        raise ConfigError(f"train window {w_train} + test window {w_test} must be < {n} rows")
    admissible = n - w_test - w_train + 1
    if admissible < cfg.n_reps:
        raise ConfigError(f"only {admissible} admissible anchor points for {cfg.n_reps} repetitions")
    rng = stream(cfg.seed, 0)
    anchors = np.sort(rng.choice(admissible, size=cfg.n_reps, replace=False)) + w_train
    iterations = [Split(np.arange(r - w_train, r), np.arange(r, r + w_test)) for r in anchors]
    return SplitPlan(iterations, cfg.seed, cfg.describe())

