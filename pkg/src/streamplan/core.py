"""Domain types shared by all modules, plus metric and validation primitives.

Units are fixed here once: segment sizes and per-slot capacities are megabytes
(1 MB = 8 megabits), slot lengths are seconds, advertised variant bandwidths
are bits per second. Slots and segments are 0-based throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Relative tolerance for capacity comparisons. Schedulers accumulate segment
# sizes in a different order than the validator sums them, so exact float
# equality at a capacity boundary is not reproducible without this slack.
CAPACITY_REL_EPS = 1e-9


def fits(total_mb: float, capacity_mb: float) -> bool:
    """Capacity test: at most `capacity_mb` may be downloaded in one slot."""
    return total_mb <= capacity_mb + CAPACITY_REL_EPS * max(1.0, abs(capacity_mb))


@dataclass(frozen=True)
class QualityLevel:
    """One encoding variant: per-segment file size plus advertised bandwidth."""

    size_mb: float
    advertised_bandwidth_bps: int
    label: str

    def __post_init__(self) -> None:
        if not (self.size_mb > 0 and math.isfinite(self.size_mb)):
            raise ValueError(f"quality size must be finite and > 0, got {self.size_mb}")
        if self.advertised_bandwidth_bps <= 0:
            raise ValueError("advertised bandwidth must be > 0")


@dataclass(frozen=True)
class QualityLadder:
    """Ordered set of quality levels, strictly increasing in size and bandwidth."""

    levels: tuple[QualityLevel, ...]

    def __post_init__(self) -> None:
        if not self.levels:
            raise ValueError("ladder needs at least one quality level")
        sizes = [lv.size_mb for lv in self.levels]
        bws = [lv.advertised_bandwidth_bps for lv in self.levels]
        if any(b >= a for a, b in zip(sizes[1:], sizes)):
            raise ValueError(f"quality sizes must be strictly increasing, got {sizes}")
        if any(b >= a for a, b in zip(bws[1:], bws)):
            raise ValueError(f"advertised bandwidths must be strictly increasing, got {bws}")

    @property
    def sizes_mb(self) -> tuple[float, ...]:
        return tuple(lv.size_mb for lv in self.levels)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lv.label for lv in self.levels)

    def __len__(self) -> int:
        return len(self.levels)

    @staticmethod
    def from_sizes(
        sizes_mb: list[float] | tuple[float, ...],
        bandwidths_bps: list[int] | tuple[int, ...] | None = None,
        labels: list[str] | tuple[str, ...] | None = None,
    ) -> "QualityLadder":
        """Build a ladder from sizes, deriving bandwidths/labels when omitted.

        Derived bandwidth assumes a 10 s segment: size_mb * 8e6 / 10 bit/s.
        """
        if bandwidths_bps is None:
            bandwidths_bps = [int(round(s * 8e5)) for s in sizes_mb]
        if labels is None:
            labels = [f"q{i}" for i in range(len(sizes_mb))]
        if not (len(sizes_mb) == len(bandwidths_bps) == len(labels)):
            raise ValueError("ladder sizes, bandwidths, and labels must have equal length")
        return QualityLadder(
            tuple(
                QualityLevel(float(s), int(b), str(l))
                for s, b, l in zip(sizes_mb, bandwidths_bps, labels)
            )
        )


DEFAULT_LADDER = QualityLadder(
    (
        QualityLevel(1.77, 1_000_000, "low"),
        QualityLevel(3.69, 1_500_000, "med"),
        QualityLevel(4.51, 3_000_000, "high"),
    )
)


@dataclass(frozen=True)
class Scenario:
    """Per-user, per-slot anticipated download capacity for one experiment run.

    `capacity_mb[u][t]` is how many megabytes user u can pull in slot t. One
    slot equals the playback duration of one segment, so a schedule is on time
    exactly when every segment's download slot is <= its index.
    """

    num_users: int
    num_slots: int
    num_segments: int
    slot_seconds: float
    capacity_mb: np.ndarray

    def __post_init__(self) -> None:
        if self.num_users < 1 or self.num_slots < 1 or self.num_segments < 1:
            raise ValueError("users, slots, and segments must all be >= 1")
        if self.num_segments > self.num_slots:
            raise ValueError(
                f"num_segments ({self.num_segments}) must be <= num_slots ({self.num_slots})"
            )
        if self.slot_seconds <= 0:
            raise ValueError("slot_seconds must be > 0")
        cap = np.asarray(self.capacity_mb, dtype=float)
        if cap.shape != (self.num_users, self.num_slots):
            raise ValueError(
                f"capacity shape {cap.shape} != ({self.num_users}, {self.num_slots})"
            )
        if not np.all(np.isfinite(cap)) or np.any(cap < 0):
            raise ValueError("capacities must be finite and >= 0")
        cap.setflags(write=False)
        object.__setattr__(self, "capacity_mb", cap)


@dataclass(frozen=True, eq=False)
class ObjectiveWeights:
    """Nonnegative weights for lateness, quality, and buffer terms."""

    lateness: float
    quality: float
    buffer: float

    def __post_init__(self) -> None:
        w = (self.lateness, self.quality, self.buffer)
        if any(x < 0 or not math.isfinite(x) for x in w):
            raise ValueError(f"weights must be finite and >= 0, got {w}")
        if all(x == 0 for x in w):
            raise ValueError("at least one weight must be nonzero")


DEFAULT_WEIGHTS = ObjectiveWeights(lateness=440.0, quality=10.0, buffer=1.0)


@dataclass(frozen=True, eq=False)
class Schedule:
    """Per user: download slot and quality index for every segment.

    `download_slot` and `quality` are (num_users, num_segments) integer
    arrays. `stalled` flags users for which some segment could not be placed
    anywhere within capacity; such schedules intentionally fail validation.
    """

    num_slots: int
    download_slot: np.ndarray
    quality: np.ndarray
    stalled: tuple[bool, ...] = ()

    def __post_init__(self) -> None:
        d = np.asarray(self.download_slot, dtype=int)
        q = np.asarray(self.quality, dtype=int)
        if d.ndim != 2 or d.shape != q.shape:
            raise ValueError("download_slot and quality must be 2-D arrays of equal shape")
        if self.num_slots < 1:
            raise ValueError("num_slots must be >= 1")
        d.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "download_slot", d)
        object.__setattr__(self, "quality", q)
        if not self.stalled:
            object.__setattr__(self, "stalled", tuple(False for _ in range(d.shape[0])))
        elif len(self.stalled) != d.shape[0]:
            raise ValueError("stalled must have one entry per user")

    @property
    def num_users(self) -> int:
        return int(self.download_slot.shape[0])

    @property
    def num_segments(self) -> int:
        return int(self.download_slot.shape[1])

    @property
    def any_stalled(self) -> bool:
        return any(self.stalled)


@dataclass(frozen=True)
class UserMetrics:
    avg_quality_mb: float
    lateness_seconds: float
    avg_buffer_segments: float


@dataclass(frozen=True)
class MetricsReport:
    """Run-level metrics: quality in MB/segment, lateness in seconds, buffer in segments."""

    avg_quality_mb: float
    avg_lateness_seconds: float
    avg_buffer_segments: float
    objective_value: float
    per_user: tuple[UserMetrics, ...] = field(default_factory=tuple)


def lateness(download_slot: int, segment_index: int) -> int:
    """Slots by which a download misses its playout slot; early downloads count 0."""
    if download_slot < 0 or segment_index < 0:
        raise ValueError("slot indices must be >= 0")
    return max(download_slot - segment_index, 0)


def buffer_timeline(schedule: Schedule, user: int) -> list[int]:
    """Downloaded-but-not-yet-played segment count at the end of each slot.

    Entry t is max(#downloads with slot <= t minus (t+1) played, 0). Playout
    is counted one segment per slot from slot 0; stall timing is captured by
    the lateness metric, not by this counter.
    """
    d = schedule.download_slot[user]
    if np.any(d < 0) or np.any(d >= schedule.num_slots):
        raise ValueError("schedule has out-of-range download slots")
    cum = np.cumsum(np.bincount(d, minlength=schedule.num_slots))
    played = np.arange(1, schedule.num_slots + 1)
    return [int(x) for x in np.maximum(cum - played, 0)]


def total_lateness_slots(schedule: Schedule, user: int) -> int:
    d = schedule.download_slot[user]
    return int(np.maximum(d - np.arange(d.shape[0]), 0).sum())


def objective_value(
    schedule: Schedule, ladder: QualityLadder, weights: ObjectiveWeights
) -> float:
    """Weighted lateness minus weighted quality plus weighted buffer, all users summed.

    Lower is better; the value can be negative because quality enters with a
    negative sign.
    """
    sizes = np.asarray(ladder.sizes_mb)
    total = 0.0
    for u in range(schedule.num_users):
        late = total_lateness_slots(schedule, u)
        quality = float(sizes[schedule.quality[u]].sum())
        buffered = sum(buffer_timeline(schedule, u))
        total += weights.lateness * late - weights.quality * quality + weights.buffer * buffered
    return total


@dataclass(frozen=True)
class Violation:
    """One broken schedule constraint, with enough context to locate it."""

    kind: str  # "capacity" | "slot_range" | "quality_range" | "shape"
    user: int
    index: int  # slot for capacity, segment for range violations
    magnitude: float
    detail: str


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_schedule(
    schedule: Schedule, scenario: Scenario, ladder: QualityLadder
) -> ValidationResult:
    """Check range and per-slot capacity constraints; violations are data, not errors."""
    out: list[Violation] = []
    if (
        schedule.num_users != scenario.num_users
        or schedule.num_segments != scenario.num_segments
        or schedule.num_slots != scenario.num_slots
    ):
        out.append(
            Violation(
                "shape",
                -1,
                -1,
                0.0,
                f"schedule is {schedule.num_users}x{schedule.num_segments} over "
                f"{schedule.num_slots} slots, scenario is "
                f"{scenario.num_users}x{scenario.num_segments} over {scenario.num_slots}",
            )
        )
        return ValidationResult(tuple(out))

    sizes = ladder.sizes_mb
    for u in range(schedule.num_users):
        d = schedule.download_slot[u]
        q = schedule.quality[u]
        for s in range(schedule.num_segments):
            if not 0 <= d[s] < scenario.num_slots:
                out.append(
                    Violation(
                        "slot_range", u, s, float(d[s]),
                        f"segment {s} of user {u} scheduled in slot {d[s]}",
                    )
                )
            if not 0 <= q[s] < len(ladder):
                out.append(
                    Violation(
                        "quality_range", u, s, float(q[s]),
                        f"segment {s} of user {u} uses quality index {q[s]}",
                    )
                )
        loads: dict[int, float] = {}
        for s in range(schedule.num_segments):
            t = int(d[s])
            if 0 <= t < scenario.num_slots and 0 <= q[s] < len(ladder):
                loads[t] = loads.get(t, 0.0) + sizes[q[s]]
        for t in sorted(loads):
            cap = float(scenario.capacity_mb[u][t])
            if not fits(loads[t], cap):
                out.append(
                    Violation(
                        "capacity", u, t, loads[t] - cap,
                        f"user {u} downloads {loads[t]:.6f} MB in slot {t} "
                        f"with capacity {cap:.6f} MB",
                    )
                )
    return ValidationResult(tuple(out))


def compute_metrics(
    schedule: Schedule,
    scenario: Scenario,
    ladder: QualityLadder,
    weights: ObjectiveWeights,
) -> MetricsReport:
    """Aggregate quality/lateness/buffer metrics for one schedule.

    Lateness is the per-user sum of late slots, averaged over users, scaled
    to seconds. Quality is the mean chosen segment size. Buffer is the mean
    end-of-slot fill over all users and slots.
    """
    sizes = np.asarray(ladder.sizes_mb)
    per_user = []
    for u in range(schedule.num_users):
        qual = float(sizes[schedule.quality[u]].mean())
        late_s = total_lateness_slots(schedule, u) * scenario.slot_seconds
        buf = float(np.mean(buffer_timeline(schedule, u)))
        per_user.append(UserMetrics(qual, late_s, buf))
    return MetricsReport(
        avg_quality_mb=float(np.mean([m.avg_quality_mb for m in per_user])),
        avg_lateness_seconds=float(np.mean([m.lateness_seconds for m in per_user])),
        avg_buffer_segments=float(np.mean([m.avg_buffer_segments for m in per_user])),
        objective_value=objective_value(schedule, ladder, weights),
        per_user=tuple(per_user),
    )
