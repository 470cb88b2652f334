import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perfest import CV, LOOCV, Bootstrap, ConfigError, Holdout, MonteCarlo, SplitPlan
from perfest.resampling import method_from_dict, stream

from conftest import two_class_frame


def test_cv_partitions_every_row_once_per_rep():
    plan = CV(n_reps=3, n_folds=10, seed=7).splits(95)
    assert len(plan) == 30
    for rep in range(3):
        tests = np.concatenate([plan[rep * 10 + f].test for f in range(10)])
        assert sorted(tests.tolist()) == list(range(95))
        sizes = [len(plan[rep * 10 + f].test) for f in range(10)]
        assert max(sizes) - min(sizes) <= 1
    for s in plan:
        assert np.intersect1d(s.train, s.test).size == 0
        assert len(s.train) + len(s.test) == 95


def test_cv_same_seed_same_plan_and_different_seed_differs():
    assert CV(seed=1).splits(50) == CV(seed=1).splits(50)
    assert CV(seed=1).splits(50) != CV(seed=2).splits(50)


def test_stratified_cv_one_minority_per_fold():
    df = two_class_frame(100, 10)
    plan = CV(n_folds=10, strat=True, seed=3).splits(100, df["cls"])
    rare = set(np.flatnonzero(df["cls"].values == "rare"))
    assert [len(rare.intersection(s.test.tolist())) for s in plan] == [1] * 10


def test_cv_needs_two_folds():
    with pytest.raises(ConfigError):
        CV(n_folds=1)


def test_holdout_sizes_and_stratification():
    plan = Holdout(n_reps=4, hld_sz=0.3, seed=1).splits(101)
    assert len(plan) == 4
    assert all(len(s.test) == 30 for s in plan)
    df = two_class_frame(100, 20)
    splan = Holdout(hld_sz=0.25, strat=True).splits(100, df["cls"])
    rare = np.flatnonzero(df["cls"].values == "rare")
    assert np.isin(splan[0].test, rare).sum() == 5


def test_bootstrap_test_is_out_of_bag():
    plan = Bootstrap(n_reps=20, seed=5).splits(40)
    for s in plan:
        assert len(s.train) == 40
        assert s.test.tolist() == sorted(set(range(40)) - set(s.train.tolist()))


def test_bootstrap_type_normalisation():
    assert Bootstrap(type="dot632").type == ".632"
    with pytest.raises(ConfigError):
        Bootstrap(type="e1")


def test_loocv():
    plan = LOOCV().splits(12)
    assert len(plan) == 12
    assert [s.test.tolist() for s in plan] == [[i] for i in range(12)]


def test_monte_carlo_small_example():
    # n=4, one train row, one test row: anchors 1..3 are admissible
    seen = set()
    for seed in range(40):
        plan = MonteCarlo(n_reps=2, sz_train=1, sz_test=1, seed=seed).splits(4)
        for s in plan:
            assert len(s.train) == 1 and len(s.test) == 1
            assert s.train[0] + 1 == s.test[0]
            seen.add(int(s.test[0]))
    assert seen == {1, 2, 3}


def test_monte_carlo_too_many_reps():
    with pytest.raises(ConfigError):
        MonteCarlo(n_reps=10, sz_train=2, sz_test=2).splits(5)


def test_user_supplied_plan_is_validated():
    good = SplitPlan([CV(n_folds=2).splits(4)[0]], 0, "user")
    assert len(CV(data_splits=good).splits(4)) == 1
    from perfest.resampling import Split
    bad = SplitPlan([Split(np.array([0, 1]), np.array([1, 2]))], 0, "user")
    with pytest.raises(ConfigError):
        CV(data_splits=bad).splits(4)


def test_plan_json_round_trip():
    plan = CV(n_reps=2, n_folds=3, seed=9).splits(10)
    assert SplitPlan.from_json(plan.to_json()) == plan


def test_method_from_dict_uses_paper_names():
    m = method_from_dict({"name": "MonteCarlo", "nReps": 3, "szTrain": 0.5, "szTest": 0.2, "seed": 4})
    assert (m.n_reps, m.sz_train, m.sz_test, m.seed) == (3, 0.5, 0.2, 4)
    with pytest.raises(ConfigError):
        method_from_dict({"name": "Jackknife"})


def test_describe_strings():
    assert CV(n_reps=3, n_folds=10).describe() == "3 x 10 - Fold Cross Validation"
    assert CV().describe() == "1 x 10 - Fold Cross Validation"


def test_streams_are_independent_of_call_order():
    a = stream(1, 0, 5).random(3)
    stream(1, 0, 4).random(10)
    assert np.array_equal(a, stream(1, 0, 5).random(3))
    assert not np.array_equal(a, stream(1, 1, 5).random(3))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(10, 300), folds=st.integers(2, 10), seed=st.integers(0, 10_000))
def test_cv_partition_property(n, folds, seed):
    plan = CV(n_folds=folds, seed=seed).splits(n)
    tests = np.sort(np.concatenate([s.test for s in plan]))
    assert np.array_equal(tests, np.arange(n))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(20, 500), tr=st.floats(0.05, 0.6), ts=st.floats(0.05, 0.35), seed=st.integers(0, 1000))
def test_monte_carlo_ordering_property(n, tr, ts, seed):
    m = MonteCarlo(n_reps=3, sz_train=tr, sz_test=ts, seed=seed)
    w_tr, w_ts = m.window_sizes(n)
    if w_tr < 1 or w_ts < 1 or n - w_tr - w_ts + 1 < 3:
        return
    for s in m.splits(n):
        assert s.train.max() < s.test.min()
        assert s.test.min() == s.train.max() + 1
        assert len(s.train) == w_tr and len(s.test) == w_ts
