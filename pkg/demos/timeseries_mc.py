"""Monte Carlo estimation on a time series with sliding and growing windows.

Run with ``python3 demos/timeseries_mc.py``.
"""

import numpy as np

from perfest import DataFrame, EstimationTask, MonteCarlo, PredTask, performance_estimation, workflow_variants
from perfest.analysis import format_summary


def main():
    rng = np.random.default_rng(0)
    n = 600
    level = np.cumsum(rng.normal(scale=0.5, size=n + 1)) + 10
    df = DataFrame.from_dict({"lag1": level[:-1], "y": level[1:]}, name="walk")
    task = PredTask("y ~ lag1", df)
    wfs = workflow_variants(wf="timeseriesWF", learner="linreg", type=["slide", "grow"],
                            relearn_step=[10, 50])
    est = EstimationTask(["mae", "theil"], MonteCarlo(n_reps=5, sz_train=0.4, sz_test=0.2, seed=3))
    res = performance_estimation(task, wfs, est)
    print(format_summary(res))


if __name__ == "__main__":
    main()
