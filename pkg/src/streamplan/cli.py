"""Command-line interface.

Subcommands:
  simulate      run the removal sweep, write result/plot CSVs and figures
  schedule      run one scheduler on a scenario CSV, print the schedule CSV
  rewrite       join variant playlists into the schedule-driven playlist
  oracle-check  verify the exact optimizer against brute-force enumeration

Exit codes: 0 success, 2 bad input or usage, 3 infeasible instance,
4 solver budget exceeded, 1 anything unexpected.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import DEFAULT_WEIGHTS, ObjectiveWeights, QualityLadder
from .experiment import (
    emit_plot_data,
    experiment_config_from_text,
    results_to_csv,
    run_experiment,
)
from .formats import (
    FormatError,
    scenario_from_csv,
    schedule_from_csv,
    schedule_to_csv,
)
from .hls import (
    PlaylistJoinError,
    PlaylistParseError,
    emit_media_playlist,
    join_playlists,
    parse_master_playlist,
    parse_media_playlist,
)
from .schedulers import (
    SCHEDULER_NAMES,
    GreedyConfig,
    ScheduleInfeasibleError,
    SolverBudget,
    SolverBudgetError,
    enumerate_optimal_objective,
    exact_optimize,
    random_instance,
    run_scheduler,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_BUDGET = 4


def _parse_weights(text: str) -> ObjectiveWeights:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise ValueError("weights must be three comma-separated numbers: lateness,quality,buffer")
    return ObjectiveWeights(*parts)


def _parse_ladder(text: str) -> QualityLadder:
    sizes = [float(x) for x in text.split(",")]
    return QualityLadder.from_sizes(sizes)


def _cmd_simulate(args: argparse.Namespace) -> int:
    text = Path(args.config).read_text() if args.config else ""
    config = experiment_config_from_text(text)
    rows = run_experiment(config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "results.csv").write_text(results_to_csv(rows))
    plot_data = emit_plot_data(rows, config.ladder)
    for metric, content in plot_data.items():
        (out_dir / f"{metric}.csv").write_text(content)
    if args.plots:
        from .plotting import render_all

        render_all(plot_data, out_dir)
    written = sorted(p.name for p in out_dir.iterdir())
    print(f"wrote {', '.join(written)} to {out_dir}", file=sys.stderr)
    return EXIT_OK


def _cmd_schedule(args: argparse.Namespace) -> int:
    scenario = scenario_from_csv(
        Path(args.scenario).read_text(),
        slot_seconds=args.slot_seconds,
        num_segments=args.segments,
    )
    ladder = _parse_ladder(args.ladder)
    weights = _parse_weights(args.weights)
    budget = SolverBudget(
        max_nodes=args.max_nodes, time_limit_seconds=args.time_limit
    )
    schedule = run_scheduler(
        args.scheduler, scenario, ladder, weights,
        GreedyConfig(args.max_buffer), budget,
    )
    sys.stdout.write(schedule_to_csv(schedule, ladder))
    return EXIT_OK


def _cmd_rewrite(args: argparse.Namespace) -> int:
    master = parse_master_playlist(Path(args.master).read_text())
    if len(args.variants) != len(master.variants):
        raise PlaylistJoinError(
            f"master lists {len(master.variants)} variants but "
            f"{len(args.variants)} playlist files were given"
        )
    variant_playlists = {
        uri: parse_media_playlist(Path(path).read_text())
        for (_, uri), path in zip(master.variants, args.variants)
    }
    schedule = schedule_from_csv(Path(args.schedule).read_text())
    joined = join_playlists(
        master, variant_playlists, schedule, args.user, args.slot, args.refresh
    )
    sys.stdout.write(emit_media_playlist(joined))
    return EXIT_OK


def _cmd_oracle_check(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    mismatches = 0
    for i in range(args.instances):
        scenario, ladder = random_instance(rng, max_slots=args.max_slots)
        reference = enumerate_optimal_objective(scenario, ladder, DEFAULT_WEIGHTS)
        result = exact_optimize(scenario, ladder, DEFAULT_WEIGHTS)
        if abs(reference - result.objective) > 1e-6:
            mismatches += 1
            print(
                f"MISMATCH instance {i}: enumerated {reference:.6f} "
                f"!= optimized {result.objective:.6f}",
                file=sys.stderr,
            )
    print(
        f"oracle-check: {args.instances} instances, {mismatches} mismatches "
        f"(max_slots={args.max_slots}, seed={args.seed})"
    )
    return EXIT_OK if mismatches == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamplan",
        description="Anticipatory segment-download scheduling toolkit",
        epilog="Exit codes: 0 ok, 2 bad input, 3 infeasible, 4 budget exceeded.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the removal sweep and write CSVs and figures")
    p.add_argument("--config", help="key=value experiment config file (defaults when omitted)")
    p.add_argument("--out-dir", required=True, help="directory for results and plots")
    p.add_argument(
        "--no-plots", dest="plots", action="store_false",
        help="skip PNG figure rendering",
    )
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("schedule", help="run one scheduler on a scenario CSV")
    p.add_argument("--scenario", required=True, help="scenario CSV (user,slot,capacity_mb)")
    p.add_argument(
        "--ladder", default="1.77,3.69,4.51",
        help="comma-separated segment sizes in MB, ascending",
    )
    p.add_argument("--scheduler", required=True, choices=SCHEDULER_NAMES)
    p.add_argument("--weights", default="440,10,1", help="lateness,quality,buffer weights")
    p.add_argument("--max-buffer", type=int, default=3, help="greedy buffer size in segments")
    p.add_argument("--slot-seconds", type=float, default=10.0)
    p.add_argument("--segments", type=int, default=None, help="segment count (default: one per slot)")
    p.add_argument("--max-nodes", type=int, default=None, help="exact solver node budget")
    p.add_argument("--time-limit", type=float, default=None, help="exact solver seconds budget")
    p.set_defaults(func=_cmd_schedule)

    p = sub.add_parser("rewrite", help="emit the joined single-variant playlist")
    p.add_argument("--master", required=True, help="master playlist file")
    p.add_argument(
        "--variants", required=True, nargs="+",
        help="variant media playlists, in master order",
    )
    p.add_argument("--schedule", required=True, help="schedule CSV file")
    p.add_argument("--user", type=int, default=0)
    p.add_argument("--slot", type=int, required=True, help="current slot (0-based)")
    p.add_argument("--refresh", type=int, required=True, help="refresh interval in seconds")
    p.set_defaults(func=_cmd_rewrite)

    p = sub.add_parser(
        "oracle-check",
        help="compare the exact optimizer against brute-force enumeration",
    )
    p.add_argument("--max-slots", type=int, default=5)
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_oracle_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScheduleInfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverBudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (FormatError, PlaylistParseError, PlaylistJoinError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
