"""Command-line pipeline: generate, verify, export, simulate, analyze.

Exit codes: 0 success, 1 coverage incomplete, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

from .analysis import AnalysisError, best_configurations, group_experiments, main_effects
from .coverage import CoverageError, coverage_of
from .generator import ALGORITHMS, GenerationConfig, generate
from .model import ModelError, exhaustive_size, load_model, lower_bound
from .plan_io import (
    ELEVEN_HOURS,
    PlanError,
    export_plan,
    export_results,
    export_series,
    import_plan,
    import_results,
    label_plan,
    results_from_series,
)
from .sim import ProfileError, emit_series, load_profile, run_plan

log = logging.getLogger("cadplan")

EXIT_OK, EXIT_INCOMPLETE, EXIT_INPUT = 0, 1, 2
SEED_ENV = "CADPLAN_SEED"

# all domain errors subclass ValueError
_INPUT_ERRORS = (ModelError, PlanError, CoverageError, AnalysisError, ProfileError, ValueError, OSError, KeyError)


def _table(headers, rows) -> str:
    cells = [[str(h) for h in headers]] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _fmt(x) -> str:
    return "-" if x is None else f"{x:.4g}"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _load_plan(path, model_path):
    model = load_model(model_path) if model_path else None
    text = Path(path).read_text(encoding="utf-8")
    return import_plan(text, model)


def _resolve_seed(arg):
    if arg is not None:
        return arg
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise PlanError(f"{SEED_ENV}={env!r} is not an integer") from None


def cmd_generate(args) -> int:
    model = load_model(args.model)
    if args.strength is not None or args.multiplicity is not None:
        model = model.with_strength(
            args.strength if args.strength is not None else model.strength, args.multiplicity
        )
    config = GenerationConfig(
        algorithm=args.algorithm,
        seed=_resolve_seed(args.seed),
        candidate_pool=args.candidate_pool,
        max_iterations=args.max_iterations,
        time_budget=args.time_budget,
        target_size=args.target_size,
    )
    array = generate(model, config)
    plan = label_plan(array)
    out = Path(args.out_dir)
    _write(out / "plan.csv", export_plan(plan, "csv"))
    _write(out / "plan.json", export_plan(plan, "json"))
    total = exhaustive_size(model)
    pct = 100.0 * array.size / total
    summary = {
        "size": array.size,
        "lower_bound": lower_bound(model),
        "exhaustive_size": total,
        "reduction_pct": pct,
        "algorithm": config.algorithm,
        "seed": config.seed,
        "iterations": array.metadata.get("iterations"),
        "greedy_size": array.metadata.get("greedy_size"),
        "budget_exhausted": array.metadata.get("budget_exhausted", False),
        "wall_time": array.metadata.get("wall_time"),
        "verified": array.verified,
        "plan_files": [str(out / "plan.csv"), str(out / "plan.json")],
    }
    if args.format == "json":
        print(json.dumps(summary, indent=2))
    else:
        print(f"N={array.size} of {total} ({pct:.1f}%)")
        print(f"lower bound: {summary['lower_bound']}  exhaustive: {total}  reduction: {pct:.2f}%")
        print(
            f"algorithm: {config.algorithm}  seed: {config.seed}  greedy N: {summary['greedy_size']}"
            f"  iterations: {summary['iterations']}  time: {summary['wall_time']:.2f}s"
        )
        print(f"wrote {out / 'plan.csv'} and {out / 'plan.json'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    model = load_model(args.model)
    plan = import_plan(Path(args.plan).read_text(encoding="utf-8"), model)
    ledger = coverage_of(plan.rows(), model)
    missing = ledger.missing()
    if args.format == "json":
        doc = {
            "covered": ledger.covered,
            "total": ledger.total,
            "complete": ledger.complete,
            "missing": [t.labels(model) for t in missing],
        }
        print(json.dumps(doc, indent=2))
    else:
        print(f"coverage (t={model.strength}, lambda={model.multiplicity}): {ledger.covered}/{ledger.total}")
        for t in missing:
            print(f"  missing: ({t.describe(model)})")
    return EXIT_OK if ledger.complete else EXIT_INCOMPLETE


def cmd_export(args) -> int:
    plan = _load_plan(args.plan, args.model)
    text = export_plan(plan, args.to)
    if args.output:
        _write(Path(args.output), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    plan = _load_plan(args.plan, args.model)
    rm = load_profile(args.profile)
    results = run_plan(plan, rm, window=args.duration)
    _write(Path(args.output), export_results(results))
    if args.series_dir:
        for eid, series in emit_series(plan, rm, args.duration, args.step).items():
            _write(Path(args.series_dir) / f"series_{eid}.csv", export_series(series))
    print(f"simulated {len(results)} experiments -> {args.output}")
    return EXIT_OK


def _parse_thresholds(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise AnalysisError(f"bad threshold list {text!r}") from None


def _effects_csv(effects) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["factor", "level", "mean", "count"])
    for name, level, mean, count in effects.rows():
        writer.writerow([name, level, "" if mean is None else repr(mean), count])
    return buf.getvalue()


def _text_report(grouping, effects, best, warnings) -> str:
    lines = [f"Performance groups ({grouping.order}, method={grouping.method})", ""]
    rows = [
        (
            i,
            f"{_fmt(g.band[0])}..{_fmt(g.band[1])}",
            ", ".join(map(str, g.members)),
            ", ".join(f"{k}={v}" for k, v in g.common_levels.items()) or "-",
        )
        for i, g in enumerate(grouping.groups, start=1)
    ]
    lines.append(_table(["group", "band", "members", "common levels"], rows))
    shared = grouping.best.common_levels
    lines += [
        "",
        "best group: {" + ", ".join(map(str, grouping.best.members)) + "}",
        "common level: " + (", ".join(f"{k}={v}" for k, v in shared.items()) or "none"),
        "",
        "Main effects (ranked by effect range)",
        "",
    ]
    rank_rows = []
    for pos, name in enumerate(effects.ranking, start=1):
        fe = effects.factor(name)
        rank_rows.append((pos, name, _fmt(fe.effect_range), fe.best_level))
    lines.append(_table(["rank", "factor", "range", "best level"], rank_rows))
    lines += ["", "Level means", ""]
    lines.append(
        _table(["factor", "level", "mean", "count"], [(f, lv, _fmt(m), c) for f, lv, m, c in effects.rows()])
    )
    lines += ["", "Best configurations", ""]
    lines.append(
        _table(["experiment", "metric", "configuration"], [(b.experiment_id, _fmt(b.metric), b.render()) for b in best])
    )
    if warnings:
        lines += ["", "Warnings"] + [f"  {w}" for w in warnings]
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    plan = _load_plan(args.plan, args.model)
    results_path = Path(args.results)
    if results_path.is_dir():
        results = results_from_series(results_path, plan, window=args.window)
    else:
        results = import_results(results_path.read_text(encoding="utf-8"), plan, window=args.window)
    lower = args.direction == "lower"
    thresholds = _parse_thresholds(args.thresholds) if args.thresholds else None
    method = args.method or ("threshold" if thresholds else "gap")
    grouping = group_experiments(
        results, method, groups=args.groups, thresholds=thresholds, lower_is_better=lower, plan=plan
    )
    effects = main_effects(plan, results, lower)
    warnings = list(results.warnings) + list(effects.warnings)
    best = best_configurations(plan, results, args.best, lower, warnings)
    report = {
        "results": {"count": len(results), **results.metadata()},
        "grouping": grouping.to_dict(),
        "effects": effects.to_dict(),
        "best_configurations": [
            {"experiment_id": b.experiment_id, "metric": b.metric, "assignment": b.assignment} for b in best
        ],
        "warnings": warnings,
    }
    report_json = json.dumps(report, indent=2) + "\n"
    report_text = _text_report(grouping, effects, best, warnings)
    if args.out_dir:
        out = Path(args.out_dir)
        _write(out / "report.json", report_json)
        _write(out / "report.txt", report_text)
        _write(out / "effects.csv", _effects_csv(effects))
    sys.stdout.write(report_json if args.format == "json" else report_text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cadplan", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build a covering array and write plan files")
    p.add_argument("model")
    p.add_argument("--strength", type=int)
    p.add_argument("--multiplicity", type=int)
    p.add_argument("--algorithm", choices=ALGORITHMS, default="anneal")
    p.add_argument("--seed", type=int, help=f"defaults to ${SEED_ENV}, then 0")
    p.add_argument("--candidate-pool", type=int, default=50)
    p.add_argument("--max-iterations", type=int, default=100_000)
    p.add_argument("--time-budget", type=float, default=60.0, help="seconds")
    p.add_argument("--target-size", type=int)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("verify", help="check a plan's coverage against a model")
    p.add_argument("plan")
    p.add_argument("--model", required=True)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export", help="convert a plan between csv and json")
    p.add_argument("plan")
    p.add_argument("--model", help="required for CSV plans")
    p.add_argument("--to", choices=("csv", "json"), required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("simulate", help="run a plan against a synthetic response profile")
    p.add_argument("plan")
    p.add_argument("profile")
    p.add_argument("--model", help="required for CSV plans")
    p.add_argument("-o", "--output", default="results.csv")
    p.add_argument("--series-dir", help="also write series_<id>.csv files here")
    p.add_argument("--duration", type=float, default=ELEVEN_HOURS, help="seconds")
    p.add_argument("--step", type=float, default=60.0, help="seconds between series samples")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="group results and rank factor effects")
    p.add_argument("plan")
    p.add_argument("results", help="results CSV or a directory of series_<id>.csv files")
    p.add_argument("--model", help="required for CSV plans")
    p.add_argument("--method", choices=("gap", "threshold"))
    p.add_argument("--thresholds", help="comma-separated band edges, e.g. 0.15,0.3,0.5")
    p.add_argument("--groups", type=int, help="group count for the gap method")
    p.add_argument("--direction", choices=("lower", "higher"), default="lower",
                   help="which metric direction is better")
    p.add_argument("--best", type=int, default=3)
    p.add_argument("--window", type=float, default=ELEVEN_HOURS, help="aggregation window, seconds")
    p.add_argument("--out-dir")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
