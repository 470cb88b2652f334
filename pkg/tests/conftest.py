import numpy as np
import pytest

from perfest import DataFrame, PredTask, load_iris


def regression_frame(n=60, seed=0, name="synth"):
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n)
    x2 = rng.normal(size=n)
    y = 3.0 + 2.0 * x1 - x2 + rng.normal(scale=0.3, size=n)
    return DataFrame.from_dict({"x1": x1, "x2": x2, "y": y}, name=name)


def two_class_frame(n=100, minority=10, seed=0):
    rng = np.random.default_rng(seed)
    labels = ["rare"] * minority + ["common"] * (n - minority)
    x = rng.normal(size=n) + np.array([2.0 if c == "rare" else 0.0 for c in labels])
    return DataFrame.from_dict({"x": x, "z": rng.normal(size=n), "cls": labels}, name="imb")


@pytest.fixture
def iris():
    return load_iris()


@pytest.fixture
def iris_task(iris):
    return PredTask("Species ~ .", iris)


@pytest.fixture
def reg_task():
    return PredTask("y ~ .", regression_frame())


def make_results(cells, metrics=("err",), seed=1234, n_rows=100):
    """ComparisonResults from ``{(task, wf): [score-or-None, ...]}``; a list
    entry may also be a dict of per-metric scores."""
    from perfest import CV, ComparisonResults, EstimationTask, Workflow
    from perfest.engine import IterationRecord

    tasks, wfs = [], []
    for t, w in cells:
        if t not in tasks:
            tasks.append(t)
        if w not in wfs:
            wfs.append(w)
    records = {}
    for (t, w), scores in cells.items():
        recs = []
        for i, s in enumerate(scores):
            if s is None:
                recs.append(IterationRecord(None, {"train": 0.0, "test": 0.0}, True, "failed", i))
            else:
                sc = dict(s) if isinstance(s, dict) else {metrics[0]: float(s)}
                recs.append(IterationRecord(sc, {"train": 0.0, "test": 0.0}, False, None, i))
        records[(t, w)] = recs
    est = EstimationTask(list(metrics), CV(seed=seed))
    descr = [{"id": t, "formula": "y ~ .", "target": "y", "taskType": "regression", "dataName": t,
              "nRows": n_rows} for t in tasks]
    return ComparisonResults(est, descr, [Workflow(learner=w, wf_id=w) for w in wfs], records, {},
                             {"seed": seed, "method": est.method.describe()})


_criteria: dict[int, list[str]] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.split("::")[-1]
    if "test_acceptance" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.outcome != "passed":
        num = int(name.split("_")[2])
        _criteria.setdefault(num, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        status = "PASS" if all(o == "passed" for o in _criteria[num]) else "FAIL"
        terminalreporter.write_line(f"{status} criterion {num}")
