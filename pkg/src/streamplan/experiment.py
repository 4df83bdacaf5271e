"""Experiment harness: sweeps station-removal counts over seeded runs, runs
each requested scheduler on the same generated scenarios, and aggregates the
three headline metrics with 95% confidence intervals into plot-ready CSV.

Everything is deterministic: per-cell seeds are derived from the base seed
with a SplitMix64-style mix of (removal count, run index), so adding removal
counts or runs never perturbs existing cells, and identical configs produce
identical output bytes.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import sys
from dataclasses import dataclass

from scipy import stats

from .channel import RadioParams, ScenarioConfig, build_scenario
from .core import (
    DEFAULT_LADDER,
    DEFAULT_WEIGHTS,
    MetricsReport,
    ObjectiveWeights,
    QualityLadder,
    compute_metrics,
    validate_schedule,
)
from .formats import (
    FormatError,
    config_keys_known,
    parse_kv_config,
    radio_params_from_config,
    scenario_config_from_config,
)
from .schedulers import (
    SCHEDULER_NAMES,
    GreedyConfig,
    ScheduleInfeasibleError,
    SolverBudget,
    run_scheduler,
)

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(x: int) -> int:
    # SplitMix64 finalizer; platform-independent 64-bit avalanche.
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def derive_seed(base_seed: int, removal_count: int, run: int) -> int:
    """Stable per-cell seed: base_seed XOR mix(removal_count, run)."""
    return (base_seed ^ _mix64(_mix64(removal_count + _GOLDEN) + run)) & _MASK64


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = ScenarioConfig()
    radio: RadioParams = RadioParams()
    removal_counts: tuple[int, ...] = tuple(range(0, 21, 2))
    runs_per_point: int = 30
    schedulers: tuple[str, ...] = SCHEDULER_NAMES
    weights: ObjectiveWeights = DEFAULT_WEIGHTS
    ladder: QualityLadder = DEFAULT_LADDER
    greedy: GreedyConfig = GreedyConfig()
    budget: SolverBudget = SolverBudget()
    base_seed: int = 0

    def __post_init__(self) -> None:
        if self.runs_per_point < 1:
            raise ValueError("runs_per_point must be >= 1")
        if not self.schedulers:
            raise ValueError("at least one scheduler is required")
        unknown = [s for s in self.schedulers if s not in SCHEDULER_NAMES]
        if unknown:
            raise ValueError(f"unknown schedulers: {unknown}")
        max_removable = (
            self.scenario.num_base_stations - 2 * self.scenario.protected_edge_count
        )
        for r in self.removal_counts:
            if not 0 <= r <= max_removable:
                raise ValueError(
                    f"removal count {r} outside [0, {max_removable}] for this scenario"
                )


_EXPERIMENT_KEYS = {
    "removalCounts",
    "runsPerPoint",
    "schedulers",
    "weights",
    "ladderSizesMb",
    "ladderBandwidthsBps",
    "ladderLabels",
    "maxBufferSegments",
    "baseSeed",
}


def experiment_config_from_text(text: str) -> ExperimentConfig:
    """Build an ExperimentConfig from flat key=value text; empty text = defaults."""
    kv = parse_kv_config(text)
    config_keys_known(kv, _EXPERIMENT_KEYS)
    fields: dict[str, object] = {
        "scenario": scenario_config_from_config(kv),
        "radio": radio_params_from_config(kv),
    }
    try:
        if "removalCounts" in kv:
            fields["removal_counts"] = tuple(
                int(x) for x in kv["removalCounts"].split(",") if x.strip()
            )
        if "runsPerPoint" in kv:
            fields["runs_per_point"] = int(kv["runsPerPoint"])
        if "schedulers" in kv:
            fields["schedulers"] = tuple(
                s.strip() for s in kv["schedulers"].split(",") if s.strip()
            )
        if "weights" in kv:
            wl, wq, wb = (float(x) for x in kv["weights"].split(","))
            fields["weights"] = ObjectiveWeights(wl, wq, wb)
        if "ladderSizesMb" in kv:
            sizes = [float(x) for x in kv["ladderSizesMb"].split(",")]
            bws = (
                [int(x) for x in kv["ladderBandwidthsBps"].split(",")]
                if "ladderBandwidthsBps" in kv
                else None
            )
            labels = (
                [x.strip() for x in kv["ladderLabels"].split(",")]
                if "ladderLabels" in kv
                else None
            )
            fields["ladder"] = QualityLadder.from_sizes(sizes, bws, labels)
        if "maxBufferSegments" in kv:
            fields["greedy"] = GreedyConfig(int(kv["maxBufferSegments"]))
        if "baseSeed" in kv:
            fields["base_seed"] = int(kv["baseSeed"])
    except ValueError as exc:
        raise FormatError(f"bad experiment config: {exc}") from None
    return ExperimentConfig(**fields)


@dataclass(frozen=True)
class ResultRow:
    """One (removal count, run, scheduler) cell of the sweep."""

    removed_bs: int
    run: int
    scheduler: str
    seed: int
    feasible: bool
    stalled: bool
    metrics: MetricsReport | None


RESULT_HEADER = [
    "removed_bs",
    "run",
    "scheduler",
    "seed",
    "feasible",
    "stalled",
    "avg_quality_mb",
    "avg_lateness_s",
    "avg_buffer_segments",
    "objective",
]


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Run every (removal count, run, scheduler) cell on shared scenarios.

    Schedulers in a cell see the same generated scenario. Exact-optimizer
    infeasibility becomes a row with feasible=False rather than an error.
    Every produced schedule must validate against its scenario unless the
    scheduler declared a stall, which is a bug guard, not a user error.
    """
    rows: list[ResultRow] = []
    ordered_schedulers = [s for s in SCHEDULER_NAMES if s in config.schedulers]
    for removed in config.removal_counts:
        for run in range(config.runs_per_point):
            seed = derive_seed(config.base_seed, removed, run)
            scenario_cfg = dataclasses.replace(
                config.scenario, num_removed=removed, rng_seed=seed
            )
            built = build_scenario(scenario_cfg, config.radio)
            for name in ordered_schedulers:
                try:
                    schedule = run_scheduler(
                        name,
                        built.scenario,
                        config.ladder,
                        config.weights,
                        config.greedy,
                        config.budget,
                    )
                except ScheduleInfeasibleError:
                    rows.append(ResultRow(removed, run, name, seed, False, False, None))
                    continue
                result = validate_schedule(schedule, built.scenario, config.ladder)
                if not result.ok and not schedule.any_stalled:
                    raise RuntimeError(
                        f"scheduler {name} produced an invalid schedule: "
                        f"{result.violations[0].detail}"
                    )
                metrics = compute_metrics(
                    schedule, built.scenario, config.ladder, config.weights
                )
                rows.append(
                    ResultRow(
                        removed, run, name, seed, True, schedule.any_stalled, metrics
                    )
                )
    return rows


def results_to_csv(rows: list[ResultRow]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(RESULT_HEADER)
    for r in rows:
        if r.metrics is None:
            w.writerow(
                [r.removed_bs, r.run, r.scheduler, r.seed, "false", "false", "", "", "", ""]
            )
        else:
            w.writerow(
                [
                    r.removed_bs,
                    r.run,
                    r.scheduler,
                    r.seed,
                    "true",
                    "true" if r.stalled else "false",
                    f"{r.metrics.avg_quality_mb:.6f}",
                    f"{r.metrics.avg_lateness_seconds:.6f}",
                    f"{r.metrics.avg_buffer_segments:.6f}",
                    f"{r.metrics.objective_value:.6f}",
                ]
            )
    return out.getvalue()


def confidence_interval(samples: list[float], level: float = 0.95) -> tuple[float, float]:
    """Mean and Student-t half-width of a sample; needs at least two values."""
    n = len(samples)
    if n < 2:
        raise ValueError("confidence interval needs at least 2 samples")
    if not 0 < level < 1:
        raise ValueError("confidence level must be in (0, 1)")
    mean = sum(samples) / n
    var = sum((x - mean) ** 2 for x in samples) / (n - 1)
    half = stats.t.ppf((1 + level) / 2, n - 1) * (var / n) ** 0.5
    return mean, float(half)


PLOT_METRICS = ("quality", "lateness", "buffer")
PLOT_HEADER = ["removed_bs", "scheduler", "mean", "ci_halfwidth"]


def _metric_of(row: ResultRow, metric: str) -> float:
    assert row.metrics is not None
    if metric == "quality":
        return row.metrics.avg_quality_mb
    if metric == "lateness":
        return row.metrics.avg_lateness_seconds
    return row.metrics.avg_buffer_segments


def emit_plot_data(rows: list[ResultRow], ladder: QualityLadder = DEFAULT_LADDER) -> dict[str, str]:
    """Aggregate rows into one CSV per metric: removed_bs,scheduler,mean,ci_halfwidth.

    Rows are sorted by (scheduler, removed_bs). Infeasible cells are dropped;
    a scheduler that never produced a feasible run is omitted with a note on
    stderr. The quality file carries dashed-line reference rows for the top
    two ladder sizes. Single-run points get a zero half-width.
    """
    feasible = [r for r in rows if r.metrics is not None]
    present = sorted({r.scheduler for r in rows})
    alive = sorted({r.scheduler for r in feasible})
    for name in present:
        if name not in alive:
            print(
                f"note: scheduler {name} had no feasible runs; omitted from plot data",
                file=sys.stderr,
            )

    removal_counts = sorted({r.removed_bs for r in feasible})
    out: dict[str, str] = {}
    for metric in PLOT_METRICS:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(PLOT_HEADER)
        lines: list[tuple[str, int, float, float]] = []
        for name in alive:
            for removed in removal_counts:
                samples = [
                    _metric_of(r, metric)
                    for r in feasible
                    if r.scheduler == name and r.removed_bs == removed
                ]
                if not samples:
                    continue
                if len(samples) == 1:
                    mean, half = samples[0], 0.0
                else:
                    mean, half = confidence_interval(samples)
                lines.append((name, removed, mean, half))
        if metric == "quality" and len(ladder) >= 1:
            refs = [("reference_high", ladder.sizes_mb[-1])]
            if len(ladder) >= 2:
                refs.append(("reference_medium", ladder.sizes_mb[-2]))
            for label, size in refs:
                for removed in removal_counts:
                    lines.append((label, removed, size, 0.0))
        for name, removed, mean, half in sorted(lines, key=lambda x: (x[0], x[1])):
            w.writerow([removed, name, f"{mean:.6f}", f"{half:.6f}"])
        out[metric] = buf.getvalue()
    return out
