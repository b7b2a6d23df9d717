"""Command-line entry point: ``mtcsim {run,compare,validate,oracle}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .baselines import CapacityError, brute_force_min_moves
from .engine import (ALLOCATORS, SimulationError, apply_events, compute_metrics, initial_environment,
                     metrics_text, run_simulation, scenario_events, series_csv, trace_csv)
from .model import AllocationState, ConfigError, FeasibilityMode, InputError, count_moves
from .scenario import parse_scenario, scenario_hash

log = logging.getLogger("mtcsim")

OUT_ENV = "MTCSIM_OUT"
# expected ordering of mean moves, most disruptive first
BASELINE_ORDER = ("random", "greedy", "mtc")


class UsageError(Exception):
    pass


def parse_seeds(text: str) -> list:
    """``"0:100"`` (half-open range) or ``"1,5,9"``."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop = (int(x) for x in text.split(":"))
            seeds = list(range(start, stop))
        else:
            seeds = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad seed list {text!r}; use START:STOP or a comma list") from None
    if not seeds:
        raise UsageError("seed list is empty")
    return seeds


def _load(args):
    sc = parse_scenario(args.scenario)
    changes = {}
    if args.horizon is not None:
        changes["horizon"] = args.horizon
    if args.feasibility is not None:
        changes["feasibility_mode"] = FeasibilityMode(args.feasibility)
    return sc.with_overrides(**changes) if changes else sc


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or "mtcsim-out")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise UsageError(f"output directory {out} is not writable")
    return out


def _check_allocator(name: str) -> str:
    if name not in ALLOCATORS:
        raise UsageError(f"unknown allocator {name!r}; choose from {', '.join(sorted(ALLOCATORS))}")
    return name


def manifest(sc, allocator: str, seed: int, strict: bool) -> dict:
    return {
        "allocator": allocator,
        "feasibility_mode": sc.feasibility_mode.value,
        "horizon": sc.horizon,
        "scenario": sc.name,
        "scenario_sha256": scenario_hash(sc),
        "seed": seed,
        "strict": strict,
        "version": __version__,
    }


def report_header(sc, allocator: str, seed: int) -> dict:
    return {
        "scenario": sc.name,
        "allocator": allocator,
        "seed": seed,
        "feasibility_mode": sc.feasibility_mode.value,
        "oracle_feasibility": "mutual",
    }


def cmd_run(args) -> int:
    allocator = _check_allocator(args.allocator)
    sc = _load(args)
    seed = sc.seed if args.seed is None else args.seed
    out = _out_dir(args)
    trace = run_simulation(sc, allocator, strict=args.strict, seed=seed)
    report = compute_metrics(trace)
    (out / "trace.csv").write_text(trace_csv(trace))
    (out / "metrics.txt").write_text(metrics_text(report, report_header(sc, allocator, seed)))
    (out / "series.csv").write_text(series_csv(report))
    (out / "manifest.json").write_text(json.dumps(manifest(sc, allocator, seed, args.strict), indent=2) + "\n")
    print(f"{sc.name}: {allocator} over {report.slots} slots, moves={report.moves} "
          f"satisfaction={report.satisfaction:.4f} jain={report.jain:.4f} -> {out}")
    return 0


COMPARE_COLUMNS = ["allocator", "seed", "moves", "pal_moves", "gaa_moves", "satisfaction",
                   "mean_interference", "max_interference", "jain", "blocked"]


def _compare_row(sc, allocator, seed, strict):
    report = compute_metrics(run_simulation(sc, allocator, strict=strict, seed=seed))
    return [allocator, seed, report.moves, report.pal_moves, report.gaa_moves,
            f"{report.satisfaction:.10g}", f"{report.mean_interference:.10g}",
            f"{report.max_interference:.10g}", f"{report.jain:.10g}", report.blocked]


def ordering_check(means: dict) -> str:
    present = [a for a in BASELINE_ORDER if a in means]
    if len(present) < 2:
        return "ordering: not applicable"
    label = " >= ".join(present)
    bad = [(a, b) for a, b in zip(present, present[1:]) if means[a] < means[b]]
    if not bad:
        return f"ordering {label}: OK"
    detail = "; ".join(f"{a} ({means[a]:.4g}) < {b} ({means[b]:.4g})" for a, b in bad)
    return f"ordering {label}: ANOMALY {detail}"


def compare(sc, allocators, seeds, strict=False, workers=None):
    """Run every (allocator, seed) pair; returns (rows, summary text)."""
    jobs = [(a, s) for a in allocators for s in seeds]
    with ThreadPoolExecutor(max_workers=workers or min(8, len(jobs))) as pool:
        rows = list(pool.map(lambda job: _compare_row(sc, job[0], job[1], strict), jobs))
    means = {}
    lines = [f"scenario = {sc.name}", f"seeds = {len(seeds)}", "oracle_feasibility = mutual"]
    for a in allocators:
        mine = [r for r in rows if r[0] == a]
        means[a] = statistics.fmean(r[2] for r in mine)
        lines.append(f"{a}.mean_moves = {means[a]:.10g}")
        lines.append(f"{a}.mean_satisfaction = {statistics.fmean(float(r[5]) for r in mine):.10g}")
        lines.append(f"{a}.mean_jain = {statistics.fmean(float(r[8]) for r in mine):.10g}")
    lines.append(ordering_check(means))
    return rows, "\n".join(lines) + "\n"


def cmd_compare(args) -> int:
    allocators = [_check_allocator(a.strip()) for a in args.allocators.split(",") if a.strip()]
    if not allocators:
        raise UsageError("no allocators given")
    seeds = parse_seeds(args.seeds)
    sc = _load(args)
    out = _out_dir(args)
    rows, summary = compare(sc, allocators, seeds, strict=args.strict)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COMPARE_COLUMNS)
    w.writerows(rows)
    (out / "compare.csv").write_text(buf.getvalue())
    (out / "compare_summary.txt").write_text(summary)
    sys.stdout.write(summary)
    return 0


def cmd_validate(args) -> int:
    sc = _load(args)
    r = sc.interference_matrix()
    print(f"{sc.name}: ok ({sc.pool.total} channels, {len(sc.cbsds)} CBSDs, {len(r.ids)} GAAs, "
          f"{len(sc.events)} events, horizon {sc.horizon}, sha256 {scenario_hash(sc)[:12]})")
    return 0


def cmd_oracle(args) -> int:
    """Per-slot MTC moves against the exhaustive minimum from the same prior."""
    sc = _load(args)
    if sc.churn is not None:
        raise UsageError("oracle comparison does not support churn scenarios")
    trace = run_simulation(sc, "mtc", strict=args.strict)
    env = initial_environment(sc.pool, trace.r, sc.initial_available, sc.feasibility_mode)
    events = scenario_events(sc, sc.horizon)
    prev = AllocationState.zero(-1, sc.pool.total)
    rows = []
    for rec in trace.records:
        env = apply_events(env, events.get(rec.slot, []))
        best, best_moves = brute_force_min_moves(env, prev)
        rows.append((rec.slot, len(count_moves(prev, rec.state, env.demands)), best_moves))
        prev = rec.state
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["slot", "mtc_moves", "oracle_moves"])
    w.writerows(rows)
    if args.out or os.environ.get(OUT_ENV):
        (_out_dir(args) / "oracle.csv").write_text(buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mtcsim", description="CBRS channel allocation simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", required=True, help="scenario file or bundled name (e.g. fig2)")
        p.add_argument("--horizon", type=int, help="override the scenario horizon")
        p.add_argument("--feasibility", choices=[m.value for m in FeasibilityMode],
                       help="override the scenario's GAA feasibility mode")

    p = sub.add_parser("run", help="simulate one allocator and write trace and metrics")
    common(p)
    p.add_argument("--allocator", default="mtc", help=f"one of {', '.join(sorted(ALLOCATORS))}")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--strict", action="store_true", help="abort on the first constraint violation")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./mtcsim-out)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="metrics table over allocators and seeds")
    common(p)
    p.add_argument("--allocators", default="mtc,greedy,random", help="comma-separated allocator names")
    p.add_argument("--seeds", default="0:10", help="START:STOP or comma list")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate", help="parse and validate a scenario")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("oracle", help="compare MTC moves with the exhaustive minimum per slot")
    common(p)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"mtcsim: error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, InputError, CapacityError, SimulationError) as exc:
        print(f"mtcsim: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
