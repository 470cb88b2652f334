"""``perfest`` command line: run experiments from JSON configs and explore results.

Config schema (JSON)::

    {
      "tasks": [{"id": "iris", "csvPath": "iris.csv", "formula": "Species ~ .",
                 "copy": false, "taskType": "auto", "naTokens": ["NA", ""]}],
      "workflows": [
        {"wf": "standardWF", "wfID": "knn3", "learner": "knn", "learner.pars": {"k": 3}},
        {"variants": {"learner": "knn", "learner.pars": {"k": [1, 5, 7]}}}
      ],
      "estimation": {"metrics": ["err"], "method": {"name": "CV", "nFolds": 10, "seed": 1234},
                     "evaluator": null, "evaluatorPars": {}, "trainReq": false},
      "cluster": "off",
      "output": "results.json",
      "plugins": ["my_learners", "path/to/plugin.py"]
    }

Relative paths are resolved against the config file's directory. Exit
status is 0 on success (invalid iterations included), 1 for I/O errors and
2 for configuration errors. ``PERFEST_WORKERS`` overrides ``cluster``.
"""

from __future__ import annotations

import argparse
import importlib
import importlib.util
import json
import math
import os
import sys
from pathlib import Path

from . import analysis, plots, stats
from ._version import __version__
from .engine import EstimationTask, load_results, performance_estimation, resolve_workers, save_results, validate_estimation
from .exceptions import ConfigError, PerfestError
from .frame import PredTask, read_csv
from .learners import learner_names
from .metrics import CLASSIFICATION_METRICS, REGRESSION_METRICS, TIME_METRICS, _EVALUATORS
from .workflow import Workflow, workflow_variants

EXIT_OK, EXIT_IO, EXIT_CONFIG = 0, 1, 2


# -- config --------------------------------------------------------------------

def _load_plugin(spec: str, base: Path) -> None:
    path = Path(spec)
    if spec.endswith(".py"):
        path = path if path.is_absolute() else base / path
        mod_spec = importlib.util.spec_from_file_location(path.stem, path)
        if mod_spec is None or not path.exists():
            raise ConfigError(f"plugin file not found: {path}")
        module = importlib.util.module_from_spec(mod_spec)
        mod_spec.loader.exec_module(module)
    else:
        importlib.import_module(spec)


def _workflows_from_config(entries) -> list[Workflow]:
    out = []
    for entry in entries:
        entry = dict(entry)
        if "variants" in entry:
            v = dict(entry["variants"])
            out.extend(workflow_variants(v.pop("wf", None), as_is=v.pop("asIs", ()),
                                         var_prefix=v.pop("varsRootName", None), **v))
        else:
            out.append(Workflow(entry.pop("wf", None), entry.pop("wfID", None), **entry))
    return out


def load_config(path) -> dict:
    """Parse and validate an experiment config; every problem is reported at once.

    Returns a mapping with ``tasks`` (PredTask list), ``workflows``,
    ``estimation`` (EstimationTask), ``cluster`` and ``output``.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    base = path.parent
    errors: list[str] = []
    for key in ("tasks", "workflows", "estimation"):
        if key not in raw:
            errors.append(f"missing required key {key!r}")
    for plugin in raw.get("plugins", []):
        try:
            _load_plugin(plugin, base)
        except Exception as exc:
            errors.append(f"plugin {plugin!r}: {exc}")
    tasks = []
    for i, t in enumerate(raw.get("tasks", [])):
        label = t.get("id", f"#{i + 1}")
        try:
            csv_path = Path(t["csvPath"])
            csv_path = csv_path if csv_path.is_absolute() else base / csv_path
            data = read_csv(csv_path, na_tokens=t.get("naTokens", ("NA", "")))
            tasks.append(PredTask(t["formula"], data, t.get("id"), bool(t.get("copy", False)),
                                  t.get("taskType"), data_name=csv_path.stem))
        except KeyError as exc:
            errors.append(f"task {label}: missing or unknown {exc}")
        except (OSError, ValueError) as exc:
            errors.append(f"task {label}: {exc}")
    workflows = []
    try:
        workflows = _workflows_from_config(raw.get("workflows", []))
    except (PerfestError, TypeError, ValueError) as exc:
        errors.append(f"workflows: {exc}")
    for w in workflows:
        learner = w.params.get("learner")
        if isinstance(learner, str) and learner.removeprefix("plugin:") not in learner_names():
            errors.append(f"workflow {w.wf_id}: unknown learner {learner!r}")
    ids = [w.wf_id for w in workflows]
    dup = sorted({i for i in ids if ids.count(i) > 1})
    if dup:
        errors.append(f"duplicate workflow ids: {dup}")
    est = None
    try:
        e = dict(raw.get("estimation", {}))
        est = EstimationTask(metrics=e.get("metrics"), method=e.get("method", {"name": "CV"}),
                             evaluator=e.get("evaluator"), evaluator_pars=e.get("evaluatorPars", {}),
                             train_req=bool(e.get("trainReq", False)))
    except (PerfestError, TypeError, ValueError) as exc:
        errors.append(f"estimation: {exc}")
    if est is not None and tasks:
        try:
            validate_estimation(tasks, est)
        except ConfigError as exc:
            errors.append(f"estimation: {exc}")
    cluster = os.environ.get("PERFEST_WORKERS") or raw.get("cluster", "off")
    try:
        resolve_workers(cluster)
    except ConfigError as exc:
        errors.append(str(exc))
    if errors:
        raise ConfigError("invalid config:\n  - " + "\n  - ".join(errors))
    output = raw.get("output")
    if output is not None and not Path(output).is_absolute():
        output = str(base / output)
    return {"tasks": tasks, "workflows": workflows, "estimation": est, "cluster": cluster, "output": output}


# -- commands ------------------------------------------------------------------

def _maxs(arg: list[str] | None):
    return None if not arg else [m for item in arg for m in item.split(",") if m]


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = args.output or cfg["output"]
    if not out:
        raise ConfigError("no output path: set 'output' in the config or pass --output")
    cluster = os.environ.get("PERFEST_WORKERS") or (args.cluster if args.cluster is not None else cfg["cluster"])
    res = performance_estimation(cfg["tasks"], cfg["workflows"], cfg["estimation"], cluster=cluster,
                                 verbose=not args.quiet)
    save_results(res, out)
    print(f"\nresults written to {out}")
    return EXIT_OK


def _filtered(args):
    res = load_results(args.results)
    if getattr(args, "tasks", None) or getattr(args, "workflows", None) or getattr(args, "metrics", None):
        res = analysis.subset_results(res, args.tasks, args.workflows, args.metrics)
    return res


def cmd_summary(args) -> int:
    res = _filtered(args)
    print(analysis.format_summary(res))
    if args.csv:
        analysis.summarize(res).to_csv(args.csv)
    return EXIT_OK


def _print_ranking(ranking: dict) -> None:
    for t, per in ranking.items():
        print(f"\n$ {t}")
        for m, pairs in per.items():
            print(f"  $ {m}")
            width = max([8] + [len(w) for w, _ in pairs])
            print(f"    {'':>3} {'Workflow':>{width}} {'Estimate':>12}")
            for i, (w, e) in enumerate(pairs, 1):
                print(f"    {i:>3} {w:>{width}} {e:>12.6g}")


def cmd_rank(args) -> int:
    res = _filtered(args)
    ranking = analysis.rank_workflows(res, top=args.top, maxs=_maxs(args.maxs))
    _print_ranking(ranking)
    if args.csv:
        analysis.ranking_to_csv(ranking, args.csv)
    return EXIT_OK


def cmd_top(args) -> int:
    res = _filtered(args)
    best = analysis.top_performers(res, maxs=_maxs(args.maxs))
    ranking = {t: {m: [v] if v else [] for m, v in per.items()} for t, per in best.items()}
    _print_ranking(ranking)
    if args.csv:
        analysis.ranking_to_csv(ranking, args.csv)
    return EXIT_OK


def cmd_subset(args) -> int:
    res = analysis.subset_results(load_results(args.results), args.tasks, args.workflows, args.metrics)
    save_results(res, args.output)
    print(f"subset written to {args.output}: {len(res.workflows)} workflows, {len(res.tasks)} tasks")
    return EXIT_OK


def cmd_merge(args) -> int:
    res = analysis.merge_results([load_results(p) for p in args.results], by=args.by, strict=args.strict)
    save_results(res, args.output)
    print(f"merged into {args.output}: {len(res.workflows)}  workflows applied to  {len(res.tasks)}  predictive tasks")
    return EXIT_OK


def _json_safe(o):
    if isinstance(o, float) and (math.isnan(o) or math.isinf(o)):
        return None if math.isnan(o) else ("Inf" if o > 0 else "-Inf")
    if isinstance(o, dict):
        return {k: _json_safe(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_json_safe(v) for v in o]
    return o


def cmd_compare(args) -> int:
    res = load_results(args.results)
    metrics = [args.metric] if args.metric else None
    pcs = stats.paired_comparisons(res, baseline=args.baseline, maxs=_maxs(args.maxs), alpha=args.alpha,
                                   metrics=metrics)
    report = {m: pc.to_dict() for m, pc in pcs.items()}
    for m, pc in pcs.items():
        print(f"\n== {m} (baseline {pc.setup['baseline']}) ==")
        for note in pc.notices:
            print(f"note: {note}")
        if pc.friedman:
            f = pc.friedman
            print(f"F.test: chi={f.chi:.6g} FF={f.FF:.6g} critVal={f.crit_val:.6g} rejNull={f.rej_null}")
            print(f"Nemenyi critDif={pc.nemenyi.crit_dif:.6g}; "
                  f"significant pairs={int(pc.nemenyi.signif_difs.sum()) // 2}")
        for test in (pc.t_test, pc.wilcoxon):
            print(f"{'paired t' if test.test == 't' else 'Wilcoxon'} vs {test.baseline}:")
            for j, t in enumerate(test.tasks):
                for i, w in enumerate(test.workflows):
                    if w == test.baseline:
                        continue
                    print(f"  {t:>12} {w:>16} score={test.score[i, j]:.6g} diff={test.diff[i, j]:.6g} "
                          f"p={test.p_value[i, j]:.6g}")
    if args.output:
        Path(args.output).write_text(json.dumps(_json_safe(report), indent=1), encoding="utf-8")
    return EXIT_OK


def cmd_cd_diagram(args) -> int:
    res = load_results(args.results)
    pc = stats.paired_comparisons(res, baseline=args.baseline, maxs=_maxs(args.maxs), alpha=args.alpha,
                                  metrics=[args.metric])[args.metric]
    result = pc.nemenyi if args.kind == "nemenyi" else pc.bonferroni_dunn
    if result is None:
        raise ConfigError("post-hoc test unavailable: " + "; ".join(pc.notices))
    plots.cd_diagram(result, args.output)
    print(f"CD diagram written to {args.output}")
    return EXIT_OK


def cmd_boxplot(args) -> int:
    res = _filtered(args)
    plots.boxplot(res, args.output)
    print(f"box plot written to {args.output}")
    return EXIT_OK


def cmd_list_metrics(args) -> int:
    print("classification: " + " ".join(CLASSIFICATION_METRICS))
    print("regression:     " + " ".join(REGRESSION_METRICS))
    print("time:           " + " ".join(TIME_METRICS))
    for name, (_, declared) in sorted(_EVALUATORS.items()):
        print(f"evaluator {name}: " + " ".join(declared))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="perfest", description="Predictive performance estimation experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def filters(sp):
        sp.add_argument("--tasks", help="regex selecting task ids (unanchored search)")
        sp.add_argument("--workflows", help="regex selecting workflow ids")
        sp.add_argument("--metrics", help="regex selecting metrics")

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--output", help="results path (overrides the config)")
    r.add_argument("--cluster", help="off, auto or a worker count")
    r.add_argument("--quiet", action="store_true", help="no progress trace")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("summary", help="summary statistics")
    s.add_argument("results")
    filters(s)
    s.add_argument("--csv", help="also write the table as CSV")
    s.set_defaults(func=cmd_summary)

    for name, func, doc in (("rank", cmd_rank, "rank workflows per task and metric"),
                            ("top", cmd_top, "best workflow per task and metric")):
        sp = sub.add_parser(name, help=doc)
        sp.add_argument("results")
        filters(sp)
        if name == "rank":
            sp.add_argument("--top", type=int, default=5)
        sp.add_argument("--maxs", action="append", help="metric(s) where higher is better")
        sp.add_argument("--csv")
        sp.set_defaults(func=func)

    sb = sub.add_parser("subset", help="keep matching tasks/workflows/metrics")
    sb.add_argument("results")
    filters(sb)
    sb.add_argument("--output", required=True)
    sb.set_defaults(func=cmd_subset)

    mg = sub.add_parser("merge", help="merge results files")
    mg.add_argument("results", nargs="+")
    mg.add_argument("--by", choices=("workflows", "tasks", "metrics"), default="workflows")
    mg.add_argument("--strict", action="store_true", help="require index-identical split plans")
    mg.add_argument("--output", required=True)
    mg.set_defaults(func=cmd_merge)

    for name, func in (("compare", cmd_compare), ("cd-diagram", cmd_cd_diagram)):
        sp = sub.add_parser(name, help="paired comparisons" if name == "compare" else "critical-difference diagram")
        sp.add_argument("results")
        sp.add_argument("--metric", required=name == "cd-diagram")
        sp.add_argument("--baseline")
        sp.add_argument("--alpha", type=float, default=0.05)
        sp.add_argument("--maxs", action="append")
        if name == "cd-diagram":
            sp.add_argument("--kind", choices=("nemenyi", "bd"), default="nemenyi")
            sp.add_argument("--output", required=True)
        else:
            sp.add_argument("--output", help="write the report as JSON")
        sp.set_defaults(func=func)

    bx = sub.add_parser("boxplot", help="box plots of the iteration scores")
    bx.add_argument("results")
    filters(bx)
    bx.add_argument("--output", required=True)
    bx.set_defaults(func=cmd_boxplot)

    lm = sub.add_parser("list-metrics", help="list available metrics")
    lm.set_defaults(func=cmd_list_metrics)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PerfestError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"perfest: error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"perfest: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
