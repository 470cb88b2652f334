"""Predictive performance estimation: resampling experiments over tasks and
workflows, summaries, and paired statistical comparison of the results."""

from ._version import __version__
from .analysis import (estimation_summary, get_scores, glob_to_regex, merge_results, metrics_summary,
                       rank_workflows, subset_results, summarize, top_performers)
from .datasets import load_iris
from .engine import (ComparisonResults, EstimationTask, IterationRecord, load_results, performance_estimation,
                     run_iteration, save_results)
from .exceptions import (ConfigError, ContractViolation, CSVParseError, FormulaSyntaxError,
                         IncompatibleResultsError, PerfestError, ResultsParseError, WorkflowError)
from .frame import DataFrame, Formula, PredTask, parse_formula, read_csv, write_csv
from .learners import Predictions, register_learner
from .metrics import classification_metrics, regression_metrics, register_evaluator
from .prepost import CostBenefitMatrix, register_post, register_pre
from .resampling import CV, LOOCV, Bootstrap, Holdout, MonteCarlo, SplitPlan
from .stats import (bonferroni_dunn_test, compute_ranks, friedman_test, nemenyi_test, paired_comparisons,
                    wilcoxon_signed_rank)
from .workflow import Workflow, WorkflowResult, register_workflow, workflow_variants

__all__ = [
    "__version__", "DataFrame", "Formula", "PredTask", "parse_formula", "read_csv", "write_csv", "load_iris",
    "CV", "Holdout", "Bootstrap", "LOOCV", "MonteCarlo", "SplitPlan",
    "Workflow", "WorkflowResult", "workflow_variants", "register_workflow", "register_learner", "Predictions",
    "register_pre", "register_post", "CostBenefitMatrix",
    "classification_metrics", "regression_metrics", "register_evaluator",
    "EstimationTask", "IterationRecord", "ComparisonResults", "performance_estimation", "run_iteration",
    "save_results", "load_results",
    "summarize", "estimation_summary", "get_scores", "metrics_summary", "rank_workflows", "top_performers",
    "subset_results", "merge_results", "glob_to_regex",
    "compute_ranks", "friedman_test", "nemenyi_test", "bonferroni_dunn_test", "wilcoxon_signed_rank",
    "paired_comparisons",
    "PerfestError", "CSVParseError", "FormulaSyntaxError", "WorkflowError", "ContractViolation", "ConfigError",
    "IncompatibleResultsError", "ResultsParseError",
]
