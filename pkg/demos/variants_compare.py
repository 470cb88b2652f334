"""Grid of knn variants on several synthetic tasks, then a paired comparison
with a critical-difference diagram.

Run with ``python3 demos/variants_compare.py [out.svg]``.
"""

import sys

import numpy as np

from perfest import (CV, DataFrame, EstimationTask, PredTask, Workflow, paired_comparisons,
                     performance_estimation, rank_workflows, workflow_variants)
from perfest.plots import cd_diagram


def make_task(seed: int) -> PredTask:
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(150, 3))
    y = x @ rng.normal(size=3) + np.sin(2 * x[:, 0]) + rng.normal(scale=0.3, size=150)
    cols = {f"x{i}": x[:, i] for i in range(3)}
    cols["y"] = y
    return PredTask("y ~ .", DataFrame.from_dict(cols, name=f"syn{seed}"))


def main(svg_path="cd.svg"):
    tasks = [make_task(s) for s in range(5)]
    wfs = workflow_variants(learner="knn", learner_pars={"k": [1, 3, 7, 15]}, pre=["scale"])
    wfs += [Workflow(learner="linreg"), Workflow(learner="meanBaseline")]
    res = performance_estimation(tasks, wfs, EstimationTask(["mse", "mae"], CV(n_folds=5, seed=1)),
                                 verbose=False)
    print(res)
    for task, per_metric in rank_workflows(res, top=3).items():
        print(task, {m: [w for w, _ in rows] for m, rows in per_metric.items()})
    pres = paired_comparisons(res, metrics=["mse"])["mse"]
    print("Friedman:", pres.friedman)
    print("Nemenyi CD:", round(pres.nemenyi.crit_dif, 4))
    cd_diagram(pres.nemenyi, svg_path)
    print("wrote", svg_path)


if __name__ == "__main__":
    main(*sys.argv[1:])
