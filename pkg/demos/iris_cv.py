"""Ten-fold cross validation of a k-nearest-neighbour classifier on iris.

Run with ``python3 demos/iris_cv.py``.
"""

from perfest import CV, EstimationTask, PredTask, Workflow, load_iris, performance_estimation
from perfest.analysis import format_summary


def main():
    task = PredTask("Species ~ .", load_iris())
    res = performance_estimation(task, Workflow(learner="knn", learner_pars={"k": 3}),
                                 EstimationTask(["err", "acc"], CV(n_folds=10, seed=1234)))
    print(res)
    print(format_summary(res))


if __name__ == "__main__":
    main()
