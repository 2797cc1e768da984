"""Command-line front end chaining ingestion, segmentation, risk, and selection.

Subcommands: segment, risk, optimize, sweep, compare. Stages exchange flat
files so any step can be rerun or swapped out. Exit codes: 2 parse failure,
3 raster misalignment, 4 infeasible configuration, 5 segment universe
mismatch.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from fireline import __version__, pipeline
from fireline.errors import (
    CapacityOverflow,
    CellCountMismatch,
    DegenerateLine,
    FirelineError,
    GridMisalignment,
    MalformedDocument,
    MalformedHeader,
    NonIntegerValue,
    SegmentUniverseMismatch,
    UnsupportedGeometry,
    ValueOutOfDomain,
)
from fireline.optimize import (
    SOLVERS,
    ComparisonReport,
    CostModel,
    budget_sweep,
    compare_plans,
    segment_cost,
    solve,
    write_plan,
    write_sweep,
)
from fireline.rasters import load_scenario_set
from fireline.risk import read_risk_vector, write_risk_table, write_risk_vector

EXIT_PARSE = 2
EXIT_ALIGNMENT = 3
EXIT_INFEASIBLE = 4
EXIT_MISMATCH = 5

_PARSE_ERRORS = (
    MalformedHeader,
    CellCountMismatch,
    NonIntegerValue,
    ValueOutOfDomain,
    MalformedDocument,
    UnsupportedGeometry,
    DegenerateLine,
)


def _add_network_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--network", required=True, help="feature-collection file of power lines")
    p.add_argument(
        "--crs-mode",
        choices=("planar", "geographic"),
        default="planar",
        help="coordinate interpretation: planar km or geographic lon/lat degrees",
    )
    p.add_argument(
        "--voltage-key", default="kV", help="property key holding line voltage (default: kV)"
    )


def _add_metric_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--metric",
        choices=("maximum", "cumulative", "threshold"),
        default="cumulative",
        help="risk metric (default: cumulative)",
    )
    p.add_argument(
        "--threshold-base",
        choices=("maximum", "cumulative"),
        default="cumulative",
        help="base metric for the threshold metric (default: cumulative)",
    )
    p.add_argument(
        "--percentile", type=float, default=75.0,
        help="threshold percentile (default: 75)",
    )
    p.add_argument(
        "--population",
        choices=("global", "per-line"),
        default="global",
        help="threshold population: pooled over all values or per line (default: global)",
    )
    p.add_argument(
        "--strict", action="store_true",
        help="count only values strictly above the threshold",
    )
    p.add_argument(
        "--kv-weighting", action="store_true",
        help="scale risk of low-voltage segments by --kv-factor",
    )
    p.add_argument(
        "--kv-threshold", type=float, default=69.0,
        help="voltage cutoff in kV for weighting (default: 69)",
    )
    p.add_argument(
        "--kv-factor", type=float, default=3.0,
        help="risk multiplier below the voltage cutoff (default: 3)",
    )


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--cost-per-mile", type=float, default=2_000_000.0,
        help="undergrounding cost in USD per mile (default: 2000000)",
    )
    p.add_argument(
        "--solver", choices=SOLVERS, default="branch_and_bound",
        help="knapsack solver (default: branch_and_bound)",
    )
    p.add_argument(
        "--granularity", type=float, default=100_000.0,
        help="dp solver cost rounding in USD (default: 100000)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fireline",
        description="Wildfire risk assignment and undergrounding selection for power lines",
    )
    parser.add_argument("--version", action="version", version=f"fireline {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="split network lines into fixed-interval segments")
    _add_network_args(p)
    p.add_argument(
        "--interval-km", type=float, default=0.0,
        help="segment length in km; 0 keeps whole lines (default: 0)",
    )
    p.add_argument("--output", default="segments.csv", help="segments CSV path")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("risk", help="assign per-scenario risk and aggregate it")
    _add_network_args(p)
    p.add_argument(
        "--rasters", nargs="+", required=True,
        help="raster .asc files, or one directory of them",
    )
    p.add_argument("--interval-km", type=float, default=0.0)
    _add_metric_args(p)
    p.add_argument("--table-out", default="risk_table.csv", help="risk table CSV path")
    p.add_argument("--vector-out", default="risk_vector.csv", help="risk vector CSV path")
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("optimize", help="select segments to underground within a budget")
    p.add_argument("--segments", required=True, help="segments CSV from `fireline segment`")
    p.add_argument("--risk-vector", required=True, help="risk vector CSV from `fireline risk`")
    p.add_argument("--budget", type=float, required=True, help="budget in USD")
    _add_solver_args(p)
    p.add_argument("--plan-out", default="plan.csv", help="plan CSV path")
    p.add_argument("--geojson-out", default="plan.geojson", help="plan feature-collection path")
    p.add_argument(
        "--include-unselected", action="store_true",
        help="also write unselected segments (selected=false) to the feature collection",
    )
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="solve across a schedule of budgets")
    _add_network_args(p)
    p.add_argument("--rasters", nargs="+", required=True)
    p.add_argument(
        "--intervals", default="0",
        help="comma-separated segmentation intervals in km; 0 = whole lines (default: 0)",
    )
    p.add_argument(
        "--budgets", required=True,
        help="comma-separated nondecreasing budgets in USD",
    )
    _add_metric_args(p)
    _add_solver_args(p)
    p.add_argument("--output", default="sweep.csv", help="sweep CSV path")
    p.add_argument(
        "--no-figure", action="store_true",
        help="skip the residual-risk-vs-budget figure",
    )
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="compare plans optimized under different metrics")
    p.add_argument("--segments", required=True, help="segments CSV from `fireline segment`")
    p.add_argument(
        "--vector", action="append", required=True, metavar="METRIC=PATH",
        help="risk vector per metric, e.g. cumulative=vec.csv (repeat, >= 2)",
    )
    p.add_argument("--budget", type=float, required=True, help="budget in USD")
    _add_solver_args(p)
    p.add_argument("--output", required=True, help="comparison table path")
    p.add_argument("--no-figure", action="store_true", help="skip the bar-chart figure")
    p.set_defaults(func=cmd_compare)
    return parser


def _config_echo(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "command")}


def cmd_segment(args) -> int:
    lines = pipeline.load_network_file(args.network, args.voltage_key, args.crs_mode)
    segments = pipeline.segmentize(lines, args.interval_km)
    pipeline.write_segments_csv(segments, args.output)
    pipeline.write_manifest(
        f"{args.output}.manifest.json", "segment", _config_echo(args),
        inputs=[args.network], outputs=[args.output],
    )
    print(f"wrote {len(segments)} segments from {len(lines)} lines to {args.output}")
    return 0


def cmd_risk(args) -> int:
    lines = pipeline.load_network_file(args.network, args.voltage_key, args.crs_mode)
    segments = pipeline.segmentize(lines, args.interval_km)
    paths, labels = pipeline.resolve_raster_paths(args.rasters)
    scenario_set = load_scenario_set(paths, labels)
    table, vector = pipeline.compute_risk_vector(
        segments,
        scenario_set,
        args.metric,
        threshold_base=args.threshold_base,
        percentile=args.percentile,
        population="per_line" if args.population == "per-line" else "global_pooled",
        strict=args.strict,
        kv_weighting=args.kv_weighting,
        kv_threshold=args.kv_threshold,
        kv_factor=args.kv_factor,
    )
    write_risk_table(table, args.table_out)
    write_risk_vector(vector, args.vector_out)
    pipeline.write_manifest(
        f"{args.vector_out}.manifest.json", "risk", _config_echo(args),
        inputs=[args.network, *paths], outputs=[args.table_out, args.vector_out],
    )
    print(
        f"wrote {len(segments)} x {len(scenario_set)} risk table to {args.table_out}; "
        f"vector ({vector.provenance}) to {args.vector_out}"
    )
    return 0


def _solver_kwargs(args) -> dict:
    return {"granularity_usd": args.granularity} if args.solver == "dp" else {}


def cmd_optimize(args) -> int:
    if args.budget < 0:
        print("fireline: budget must be >= 0", file=sys.stderr)
        return EXIT_INFEASIBLE
    segments = pipeline.read_segments_csv(args.segments)
    vector = pipeline.vector_in_segment_order(read_risk_vector(args.risk_vector), segments)
    model = CostModel(usd_per_mile=args.cost_per_mile)
    costs = np.array([segment_cost(seg, model) for seg in segments])
    plan = solve(
        vector.R, costs, args.budget, args.solver,
        segment_ids=vector.segment_ids, **_solver_kwargs(args),
    )
    write_plan(plan, vector, costs, args.plan_out)
    collection = pipeline.plan_feature_collection(
        plan, segments, vector, costs, include_unselected=args.include_unselected
    )
    with open(args.geojson_out, "w") as fh:
        json.dump(collection, fh, indent=2, sort_keys=True)
        fh.write("\n")
    pipeline.write_manifest(
        f"{args.plan_out}.manifest.json", "optimize", _config_echo(args),
        inputs=[args.segments, args.risk_vector],
        outputs=[args.plan_out, args.geojson_out],
    )
    print(
        f"selected {len(plan.selected)} of {len(segments)} segments "
        f"(cost {plan.total_cost_usd:.0f} of {plan.budget_usd:.0f} USD, "
        f"removed risk {plan.removed_risk:g})"
    )
    return 0


def _parse_float_list(raw: str, name: str) -> list[float]:
    try:
        return [float(tok) for tok in raw.split(",") if tok.strip() != ""]
    except ValueError:
        raise ValueError(f"{name} must be a comma-separated list of numbers") from None


def cmd_sweep(args) -> int:
    budgets = _parse_float_list(args.budgets, "--budgets")
    intervals = _parse_float_list(args.intervals, "--intervals")
    if not budgets or any(b < 0 for b in budgets):
        print("fireline: budgets must be >= 0", file=sys.stderr)
        return EXIT_INFEASIBLE
    if any(b < a for a, b in zip(budgets, budgets[1:])):
        print("fireline: budgets must be nondecreasing", file=sys.stderr)
        return EXIT_INFEASIBLE

    lines = pipeline.load_network_file(args.network, args.voltage_key, args.crs_mode)
    paths, labels = pipeline.resolve_raster_paths(args.rasters)
    scenario_set = load_scenario_set(paths, labels)
    model = CostModel(usd_per_mile=args.cost_per_mile)

    stem, ext = os.path.splitext(args.output)
    series = {}
    outputs = []
    for interval in intervals:
        segments = pipeline.segmentize(lines, interval)
        _, vector = pipeline.compute_risk_vector(
            segments,
            scenario_set,
            args.metric,
            threshold_base=args.threshold_base,
            percentile=args.percentile,
            population="per_line" if args.population == "per-line" else "global_pooled",
            strict=args.strict,
            kv_weighting=args.kv_weighting,
            kv_threshold=args.kv_threshold,
            kv_factor=args.kv_factor,
        )
        costs = np.array([segment_cost(seg, model) for seg in segments])
        points = budget_sweep(
            vector.R, costs, budgets, args.solver,
            segment_ids=vector.segment_ids, **_solver_kwargs(args),
        )
        label = "full lines" if interval == 0 else f"{interval:g} km"
        series[label] = points
        out = args.output if len(intervals) == 1 else (
            f"{stem}_{'full' if interval == 0 else f'{interval:g}km'}{ext}"
        )
        write_sweep(points, out)
        outputs.append(out)

    if not args.no_figure:
        from fireline.plots import plot_sweep

        figure_path = stem + ".png"
        plot_sweep(series, figure_path)
        outputs.append(figure_path)
    pipeline.write_manifest(
        f"{args.output}.manifest.json", "sweep", _config_echo(args),
        inputs=[args.network, *paths], outputs=outputs,
    )
    print(f"swept {len(budgets)} budgets x {len(intervals)} intervals -> {', '.join(outputs)}")
    return 0


def format_comparison(report: ComparisonReport) -> str:
    """Render a comparison report as a fixed-width text table."""
    metrics = report.metrics
    headers = [m.capitalize() for m in metrics]
    rows: list[tuple[str, list[str]]] = [
        ("Segments Upgraded", [str(report.n_selected[m]) for m in metrics])
    ]
    for eval_metric in metrics:
        rows.append(
            (
                f"{eval_metric.capitalize()} Risk [% reduction]",
                [f"{report.reduction_pct[(m, eval_metric)]:.1f}" for m in metrics],
            )
        )
    label_width = max(len(label) for label, _ in rows)
    col_widths = [
        max(len(headers[j]), max(len(row[1][j]) for row in rows)) + 2
        for j in range(len(metrics))
    ]
    lines = [
        " " * label_width + "".join(h.rjust(w) for h, w in zip(headers, col_widths))
    ]
    for label, cells in rows:
        lines.append(
            label.ljust(label_width)
            + "".join(c.rjust(w) for c, w in zip(cells, col_widths))
        )
    lines.append("")
    shares = ", ".join(
        f"{report.allway_pct[m]:.1f}% of {m}" for m in metrics
    )
    lines.append(
        f"Exact matches, all plans: {report.allway_matches} segments ({shares})"
    )
    pairs = ", ".join(
        f"{a}&{b}={n}" for (a, b), n in report.pairwise_matches.items()
    )
    lines.append(f"Exact matches, pairwise: {pairs}")
    return "\n".join(lines) + "\n"


def cmd_compare(args) -> int:
    if args.budget < 0:
        print("fireline: budget must be >= 0", file=sys.stderr)
        return EXIT_INFEASIBLE
    specs = []
    for raw in args.vector:
        metric, sep, path = raw.partition("=")
        if not sep or not metric or not path:
            print(f"fireline: bad --vector {raw!r}, expected METRIC=PATH", file=sys.stderr)
            return EXIT_PARSE
        specs.append((metric, path))
    if len(specs) < 2:
        print("fireline: compare needs at least 2 --vector entries", file=sys.stderr)
        return EXIT_PARSE

    segments = pipeline.read_segments_csv(args.segments)
    model = CostModel(usd_per_mile=args.cost_per_mile)
    costs = np.array([segment_cost(seg, model) for seg in segments])
    plans = {}
    vectors = {}
    for metric, path in specs:
        vector = pipeline.vector_in_segment_order(read_risk_vector(path), segments)
        vectors[metric] = vector
        plans[metric] = solve(
            vector.R, costs, args.budget, args.solver,
            segment_ids=vector.segment_ids, **_solver_kwargs(args),
        )
    report = compare_plans(plans, vectors)
    text = format_comparison(report)
    sys.stdout.write(text)
    with open(args.output, "w") as fh:
        fh.write(text)
    outputs = [args.output]
    if not args.no_figure:
        from fireline.plots import plot_comparison

        figure_path = os.path.splitext(args.output)[0] + ".png"
        plot_comparison(report, figure_path)
        outputs.append(figure_path)
    pipeline.write_manifest(
        f"{args.output}.manifest.json", "compare", _config_echo(args),
        inputs=[args.segments, *(path for _, path in specs)], outputs=outputs,
    )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _PARSE_ERRORS as exc:
        print(f"fireline: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except GridMisalignment as exc:
        print(f"fireline: {exc}", file=sys.stderr)
        return EXIT_ALIGNMENT
    except CapacityOverflow as exc:
        print(f"fireline: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SegmentUniverseMismatch as exc:
        print(f"fireline: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except FileNotFoundError as exc:
        print(f"fireline: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (FirelineError, ValueError) as exc:
        print(f"fireline: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
