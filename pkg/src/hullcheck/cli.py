"""Command-line interface.

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__, bounds, confidence
from .geometry import oracle_feasibility
from .harness import (
    Scenario,
    ScenarioError,
    aggregate,
    builtin_scenarios,
    emit_aggregates,
    emit_trials,
    load_scenario,
    read_trials,
    run_manifest,
    run_trials,
    vary,
)
from .report import render_report


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hullcheck",
        description="Adaptive-sampling feasibility checks for target group proportions.",
    )
    parser.add_argument("--version", action="version", version=f"hullcheck {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario's Monte-Carlo trials")
    run.add_argument("scenario", help="built-in scenario name or scenario file path")
    run.add_argument("--trials", type=int, help="override trial count")
    run.add_argument("--seed", type=int, help="override master seed")
    run.add_argument("--max-steps", type=int, help="override per-run step budget")
    run.add_argument("--workers", type=int, default=1, help="parallel trial workers")
    run.add_argument("--out", help="write per-trial CSV here")
    run.add_argument("--manifest", help="write a JSON run manifest here")

    bnd = sub.add_parser("bounds", help="print gaps, thresholds, and sample-size bounds (d=2)")
    bnd.add_argument("scenario")

    orc = sub.add_parser("oracle", help="print the ground-truth feasibility certificate")
    orc.add_argument("scenario")

    val = sub.add_parser("validate-margin", help="report the margin's deviation-budget sum")
    val.add_argument("--horizon", type=int, default=100_000)
    val.add_argument("--delta", type=float, default=0.01)
    val.add_argument("--k", type=int, default=10)

    sub.add_parser("list-scenarios", help="list built-in scenario names")

    rep = sub.add_parser("report", help="render figures + aggregate CSV from per-trial CSVs")
    rep.add_argument("trials_csv", nargs="+", help="per-trial CSV file(s) from `run --out`")
    rep.add_argument("--out-dir", default="report", help="output directory (default: report)")
    rep.add_argument("--dpi", type=int, default=150)
    rep.add_argument("--image-format", default="png", choices=("png", "pdf", "svg"))
    return parser


def _load(name: str) -> Scenario:
    return load_scenario(name)


def _cmd_run(args) -> int:
    scenario = _load(args.scenario)
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.max_steps is not None:
        overrides["max_steps"] = args.max_steps
    if overrides:
        scenario = vary(scenario, **overrides)
    results = run_trials(scenario, workers=args.workers)
    if args.out:
        emit_trials(results, args.out)
    if args.manifest:
        manifest = run_manifest(scenario, __version__)
        try:
            with open(args.manifest, "w") as fh:
                json.dump(manifest, fh, indent=2, sort_keys=True)
                fh.write("\n")
        except OSError as exc:
            raise OSError(f"cannot write {args.manifest}: {exc}") from exc
    emit_aggregates(aggregate(results), sys.stdout)
    return 0


def _fmt(value) -> str:
    if value == float("inf"):
        return "inf"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _cmd_bounds(args) -> int:
    scenario = _load(args.scenario)
    rep = bounds.report(scenario.instance, scenario.spec)
    print(f"scenario: {scenario.name}")
    print(f"label: {scenario.instance.label}")
    if rep.subset is not None:
        print(f"optimal_subset: {rep.subset.kind} {list(rep.subset.indices)}")
    print("action  mean    gap_min   gap_max   s_min     s_max")
    for i, p in enumerate(scenario.instance.means):
        print(
            f"{i:<7d} {p:<7.4g} {_fmt(rep.gaps.gap_min[i]):<9} {_fmt(rep.gaps.gap_max[i]):<9} "
            f"{_fmt(rep.gaps.s_min[i]):<9} {_fmt(rep.gaps.s_max[i])}"
        )
    print(f"lower_bound: {_fmt(rep.lower_bound)}")
    print(f"upper_bound_uniform: {_fmt(rep.upper_uniform)}")
    print(f"upper_bound_lucb_mean: {_fmt(rep.upper_lucb_mean)}")
    return 0


def _cmd_oracle(args) -> int:
    scenario = _load(args.scenario)
    cert = oracle_feasibility(scenario.instance.means, scenario.spec)
    print(f"scenario: {scenario.name}")
    print(f"verdict: {cert.verdict}")
    if cert.weights is not None:
        print(f"weights: {[round(float(w), 6) for w in cert.weights]}")
    if cert.witness_point is not None:
        if scenario.spec.d == 2:
            print(f"witness_point: {_fmt(float(cert.witness_point))}")
        else:
            print(f"witness_point: {[round(float(v), 6) for v in cert.witness_point]}")
    if cert.separator is not None:
        if scenario.spec.d == 2:
            print(f"separator: {_fmt(float(cert.separator))}")
        else:
            print(f"separator: {[round(float(v), 6) for v in cert.separator]}")
    return 0


def _cmd_validate_margin(args) -> int:
    spec = confidence.MarginSpec(delta=args.delta, k=args.k)
    rep = confidence.validate_budget(spec, args.horizon)
    print(f"horizon: {args.horizon}")
    print(f"partial_sum: {rep.partial_sum!r}")
    print(f"budget (delta/k): {rep.budget!r}")
    print(f"ratio: {rep.partial_sum / rep.budget:.6f}")
    print(f"within_budget: {str(rep.within_budget).lower()}")
    return 0


def _cmd_list(args) -> int:
    for name in sorted(builtin_scenarios()):
        print(name)
    return 0


def _cmd_report(args) -> int:
    rows = []
    for path in args.trials_csv:
        rows.extend(read_trials(path))
    written = render_report(rows, args.out_dir, dpi=args.dpi, image_format=args.image_format)
    for path in written:
        print(path)
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "bounds": _cmd_bounds,
    "oracle": _cmd_oracle,
    "validate-margin": _cmd_validate_margin,
    "list-scenarios": _cmd_list,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
