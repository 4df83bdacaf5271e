"""Schedule generators: two greedy baselines, the backtracking fill
scheduler, an exact optimizer, and a reference enumerator used to verify it.

All schedulers are offline (every slot's capacity is known up front), operate
per user independently, and are deterministic. Segments are downloaded in
index order; a segment that cannot be placed anywhere within capacity is
parked in the final slot at the lowest quality and the user is flagged as
stalled, so schedules stay total and metrics stay well defined.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .core import (
    CAPACITY_REL_EPS,
    ObjectiveWeights,
    QualityLadder,
    Scenario,
    Schedule,
    fits,
    objective_value,
)


class ScheduleInfeasibleError(Exception):
    """No schedule satisfies the capacity constraints even at the lowest quality."""


class SolverBudgetError(Exception):
    """The search budget ran out before any usable schedule was produced."""


@dataclass(frozen=True)
class GreedyConfig:
    """Shared knob of the greedy baselines: the fixed player buffer size."""

    max_buffer_segments: int = 3

    def __post_init__(self) -> None:
        if self.max_buffer_segments < 1:
            raise ValueError("max_buffer_segments must be >= 1")


@dataclass(frozen=True)
class SolverBudget:
    """Optional limits for the exact optimizer."""

    max_nodes: int | None = None
    time_limit_seconds: float | None = None

    def __post_init__(self) -> None:
        if self.max_nodes is not None and self.max_nodes <= 0:
            raise ValueError("max_nodes must be positive when set")
        if self.time_limit_seconds is not None and self.time_limit_seconds <= 0:
            raise ValueError("time_limit_seconds must be positive when set")


@dataclass(frozen=True)
class ExactResult:
    """Outcome of the exact optimizer."""

    schedule: Schedule
    objective: float
    proven_optimal: bool


def segments_for_quality(quality_size_mb: float, capacity_mb: float) -> int:
    """How many whole segments of one size fit into a slot's capacity."""
    if quality_size_mb <= 0:
        raise ValueError("quality size must be > 0")
    if capacity_mb < 0:
        raise ValueError("capacity must be >= 0")
    return int(math.floor(capacity_mb / quality_size_mb + CAPACITY_REL_EPS))


def best_quality(ladder: QualityLadder, capacity_mb: float) -> int | None:
    """Largest quality index whose segment size fits the capacity, else None."""
    choice = None
    for i, size in enumerate(ladder.sizes_mb):
        if fits(size, capacity_mb):
            choice = i
    return choice


def best_quality_for_range(
    ladder: QualityLadder, n: int, capacities_mb: list[float] | np.ndarray
) -> int | None:
    """Largest uniform quality at which n segments pack into the given slots.

    Packing is earliest-slot-first with every segment wholly inside one slot,
    so the test is sum(floor(cap / size)) >= n. Returns None when even the
    lowest level fails.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(capacities_mb) == 0:
        raise ValueError("capacities must be nonempty")
    choice = None
    for i, size in enumerate(ladder.sizes_mb):
        if sum(segments_for_quality(size, float(c)) for c in capacities_mb) >= n:
            choice = i
    return choice


def _place_leftovers(
    d: list[int],
    q: list[int],
    start: int,
    caps: np.ndarray,
    used: list[float],
    min_size: float,
    num_slots: int,
) -> bool:
    """Park segments the main pass could not download.

    Each leftover goes to the first slot at or after its own index with room
    for the lowest quality; when no such slot exists it lands in the final
    slot regardless of capacity and the user counts as stalled.
    """
    stalled = False
    for s in range(start, len(d)):
        placed = False
        for t in range(s, num_slots):
            if fits(used[t] + min_size, float(caps[t])):
                d[s], q[s] = t, 0
                used[t] += min_size
                placed = True
                break
        if not placed:
            d[s], q[s] = num_slots - 1, 0
            used[num_slots - 1] += min_size
            stalled = True
    return stalled


def _greedy_allowance(t: int, downloaded: int, max_buffer: int) -> int:
    # End-of-slot buffer must stay <= max_buffer; t+1 segments have played out
    # by the end of slot t, so that many downloads never count against it.
    return max(max_buffer + (t + 1) - downloaded, 0)


def buffer_first(
    scenario: Scenario, ladder: QualityLadder, config: GreedyConfig = GreedyConfig()
) -> Schedule:
    """Greedy baseline that always refills the buffer before raising quality.

    Each slot downloads as many next-in-order segments as capacity and free
    buffer space allow at the lowest quality, then spends leftover capacity
    upgrading that slot's downloads, latest segment first. Segment count is
    never traded for quality.
    """
    sizes = ladder.sizes_mb
    min_size = sizes[0]
    all_d, all_q, stalled_users = [], [], []
    for u in range(scenario.num_users):
        caps = scenario.capacity_mb[u]
        d = [-1] * scenario.num_segments
        q = [-1] * scenario.num_segments
        used = [0.0] * scenario.num_slots
        next_seg = 0
        for t in range(scenario.num_slots):
            if next_seg >= scenario.num_segments:
                break
            allowance = _greedy_allowance(t, next_seg, config.max_buffer_segments)
            count = min(
                allowance,
                scenario.num_segments - next_seg,
                segments_for_quality(min_size, float(caps[t])),
            )
            if count <= 0:
                continue
            batch = list(range(next_seg, next_seg + count))
            for s in batch:
                d[s], q[s] = t, 0
            used[t] = count * min_size
            residual = float(caps[t]) - used[t]
            for s in reversed(batch):  # upgrade latest-scheduled first
                for level in range(len(sizes) - 1, q[s], -1):
                    step = sizes[level] - sizes[q[s]]
                    if fits(step, residual):
                        residual -= step
                        used[t] += step
                        q[s] = level
                        break
            next_seg += count
        stalled_users.append(
            _place_leftovers(d, q, next_seg, caps, used, min_size, scenario.num_slots)
        )
        all_d.append(d)
        all_q.append(q)
    return Schedule(
        num_slots=scenario.num_slots,
        download_slot=np.array(all_d),
        quality=np.array(all_q),
        stalled=tuple(stalled_users),
    )


def quality_first(
    scenario: Scenario, ladder: QualityLadder, config: GreedyConfig = GreedyConfig()
) -> Schedule:
    """Greedy baseline that maximizes each download's quality before count.

    Each slot repeatedly downloads the next segment at the best quality the
    remaining capacity supports, while buffer space and capacity remain.
    """
    sizes = ladder.sizes_mb
    all_d, all_q, stalled_users = [], [], []
    for u in range(scenario.num_users):
        caps = scenario.capacity_mb[u]
        d = [-1] * scenario.num_segments
        q = [-1] * scenario.num_segments
        used = [0.0] * scenario.num_slots
        next_seg = 0
        for t in range(scenario.num_slots):
            if next_seg >= scenario.num_segments:
                break
            allowance = _greedy_allowance(t, next_seg, config.max_buffer_segments)
            residual = float(caps[t])
            while allowance > 0 and next_seg < scenario.num_segments:
                level = best_quality(ladder, residual)
                if level is None:
                    break
                d[next_seg], q[next_seg] = t, level
                residual -= sizes[level]
                used[t] += sizes[level]
                next_seg += 1
                allowance -= 1
        stalled_users.append(
            _place_leftovers(d, q, next_seg, caps, used, sizes[0], scenario.num_slots)
        )
        all_d.append(d)
        all_q.append(q)
    return Schedule(
        num_slots=scenario.num_slots,
        download_slot=np.array(all_d),
        quality=np.array(all_q),
        stalled=tuple(stalled_users),
    )


def fill(scenario: Scenario, ladder: QualityLadder) -> Schedule:
    """Backtracking scheduler that buffers just enough to ride out outages.

    Walks the slots once, normally downloading one segment per slot at the
    best affordable quality. When a slot cannot host even the lowest quality,
    it backtracks to the nearest earlier slot range whose capacity can hold
    all segments currently scheduled there plus the new one at a single
    (reduced) uniform quality and repacks them earliest-slot-first. If no
    range suffices, the segment is deferred and picked up late.
    """
    sizes = ladder.sizes_mb
    all_d, all_q, stalled_users = [], [], []
    for u in range(scenario.num_users):
        caps = scenario.capacity_mb[u]
        d = [-1] * scenario.num_segments
        q = [-1] * scenario.num_segments
        scheduled = 0
        for t in range(scenario.num_slots):
            if scheduled >= scenario.num_segments:
                break
            scheduled += _schedule_one(d, q, scheduled, t, caps, ladder)
        used = [0.0] * scenario.num_slots
        for s in range(scheduled):
            used[d[s]] += sizes[q[s]]
        stalled_users.append(
            _place_leftovers(d, q, scheduled, caps, used, sizes[0], scenario.num_slots)
        )
        all_d.append(d)
        all_q.append(q)
    return Schedule(
        num_slots=scenario.num_slots,
        download_slot=np.array(all_d),
        quality=np.array(all_q),
        stalled=tuple(stalled_users),
    )


def _schedule_one(
    d: list[int], q: list[int], s: int, t: int, caps: np.ndarray, ladder: QualityLadder
) -> int:
    """Place segment s in slot t, backtracking if t cannot host it. Returns 0 or 1."""
    level = best_quality(ladder, float(caps[t]))
    if level is not None:
        d[s], q[s] = t, level
        return 1
    for g in range(t, -1, -1):
        # Segments already sitting in [g..t] form a contiguous index suffix
        # because download slots never decrease with segment index.
        first = s
        while first > 0 and d[first - 1] >= g:
            first -= 1
        count = (s - first) + 1
        window = [float(c) for c in caps[g : t + 1]]
        uniform = best_quality_for_range(ladder, count, window)
        if uniform is None:
            continue
        segment = first
        for r in range(g, t + 1):
            for _ in range(segments_for_quality(ladder.sizes_mb[uniform], window[r - g])):
                if segment > s:
                    break
                d[segment], q[segment] = r, uniform
                segment += 1
        return 1
    return 0  # nothing fits even from the start; the segment will be late


# ---------------------------------------------------------------------------
# Exact optimizer
#
# Segment sizes do not depend on the segment, so any two segments may swap
# their (slot, quality) pairs without changing feasibility, quality, or
# buffer; sorting the swap can only reduce lateness. The optimum is therefore
# determined by how many segments each slot downloads: given per-slot counts,
# segments are assigned in index order and each slot's qualities maximize the
# packed size independently. That reduces the search to a dynamic program
# over (slot, segments scheduled so far), which stays exact at any scale the
# per-segment search could handle and is fast enough for full-size scenarios.
# ---------------------------------------------------------------------------


def _best_packs(
    sizes: tuple[float, ...], capacity: float, max_n: int
) -> list[tuple[float, tuple[int, ...]]]:
    """For n = 0..max_n: (max total MB of n segments within capacity, level multiset).

    Unreachable counts get (-inf, ()). The multiset is a nondecreasing tuple
    of level indices; value ties resolve to the lexicographically smallest one.
    """
    best: list[tuple[float, tuple[int, ...]] | None] = [None] * (max_n + 1)

    def recurse(level: int, count: int, total: float, combo: tuple[int, ...]) -> None:
        if level == len(sizes):
            cur = best[count]
            if (
                cur is None
                or total > cur[0] + 1e-12
                or (abs(total - cur[0]) <= 1e-12 and combo < cur[1])
            ):
                best[count] = (total, combo)
            return
        limit = min(
            max_n - count,
            segments_for_quality(sizes[level], max(capacity - total, 0.0)),
        )
        for k in range(limit + 1):
            recurse(level + 1, count + k, total + k * sizes[level], combo + (level,) * k)

    recurse(0, 0, 0.0, ())
    return [b if b is not None else (-math.inf, ()) for b in best]


def _lateness_prefix(t: int, max_cum: int) -> np.ndarray:
    # f[c] = sum over segments 0..c-1 of their lateness if downloaded in slot
    # t; transitions charge f[c + n] - f[c] for the n segments taken at t.
    f = np.zeros(max_cum + 1)
    f[1:] = np.cumsum(np.maximum(t - np.arange(max_cum), 0))
    return f


def _exact_user(
    caps: np.ndarray,
    ladder: QualityLadder,
    weights: ObjectiveWeights,
    num_segments: int,
    deadline: float | None,
    nodes_left: list[int],
    user: int,
) -> tuple[np.ndarray, np.ndarray, float]:
    sizes = ladder.sizes_mb
    num_slots = len(caps)
    max_fit = [segments_for_quality(sizes[0], float(c)) for c in caps]
    if sum(max_fit) < num_segments:
        raise ScheduleInfeasibleError(
            f"user {user}: only {sum(max_fit)} segments fit at the lowest quality "
            f"across all slots, need {num_segments}"
        )

    packs = [
        _best_packs(sizes, float(caps[t]), min(max_fit[t], num_segments))
        for t in range(num_slots)
    ]

    inf = math.inf
    # value[c] = minimal remaining cost with c segments already scheduled,
    # evaluated backwards from the horizon; choice[t][c] = count taken at t.
    value = np.full(num_segments + 1, inf)
    value[num_segments] = 0.0
    choice = np.zeros((num_slots, num_segments + 1), dtype=int)
    for t in range(num_slots - 1, -1, -1):
        f = _lateness_prefix(t, num_segments)
        cum = np.arange(num_segments + 1)
        # cost of ending slot t at cumulative count c' (buffer term) plus the
        # lateness accumulated by the segments scheduled up to c', folded into
        # a single per-count curve so each n becomes one shifted array op.
        g = value + weights.lateness * f + weights.buffer * np.maximum(cum - (t + 1), 0)
        best_val = np.full(num_segments + 1, inf)
        best_n = np.zeros(num_segments + 1, dtype=int)
        for n in range(0, min(max_fit[t], num_segments) + 1):
            pack_value = packs[t][n][0]
            if pack_value == -math.inf:
                continue
            if deadline is not None and time.monotonic() > deadline:
                raise SolverBudgetError("time budget exhausted")
            nodes_left[0] -= 1
            if nodes_left[0] < 0:
                raise SolverBudgetError("node budget exhausted")
            cand = np.full(num_segments + 1, inf)
            upper = num_segments + 1 - n
            cand[:upper] = g[n:] - weights.quality * pack_value
            better = cand <= best_val  # ties resolve to the larger n
            best_val = np.where(better, cand, best_val)
            best_n = np.where(better, n, best_n)
        value = best_val - weights.lateness * f
        choice[t] = best_n

    if not math.isfinite(value[0]):
        raise ScheduleInfeasibleError(f"user {user}: no feasible schedule")

    d = np.zeros(num_segments, dtype=int)
    q = np.zeros(num_segments, dtype=int)
    cum = 0
    for t in range(num_slots):
        n = int(choice[t][cum])
        if n:
            combo = packs[t][n][1]
            for j, level in enumerate(combo):
                d[cum + j] = t
                q[cum + j] = level
            cum += n
        if cum == num_segments:
            break
    return d, q, float(value[0])


def exact_optimize(
    scenario: Scenario,
    ladder: QualityLadder,
    weights: ObjectiveWeights,
    budget: SolverBudget = SolverBudget(),
) -> ExactResult:
    """Minimize weighted lateness - quality + buffer exactly, per user.

    Deterministic: among optima it returns the schedule that downloads as
    early as possible (larger counts in earlier slots) and, within a slot,
    uses the smallest quality indices first in segment order. Raises
    ScheduleInfeasibleError when some segment fits nowhere at the lowest
    quality; on budget exhaustion it falls back to the fill schedule, flagged
    as not proven optimal.
    """
    deadline = (
        time.monotonic() + budget.time_limit_seconds
        if budget.time_limit_seconds is not None
        else None
    )
    nodes_left = [budget.max_nodes if budget.max_nodes is not None else 1 << 62]
    all_d, all_q = [], []
    try:
        for u in range(scenario.num_users):
            d, q, _ = _exact_user(
                scenario.capacity_mb[u],
                ladder,
                weights,
                scenario.num_segments,
                deadline,
                nodes_left,
                u,
            )
            all_d.append(d)
            all_q.append(q)
    except SolverBudgetError:
        incumbent = fill(scenario, ladder)
        if incumbent.any_stalled:
            raise
        return ExactResult(
            schedule=incumbent,
            objective=objective_value(incumbent, ladder, weights),
            proven_optimal=False,
        )
    schedule = Schedule(
        num_slots=scenario.num_slots,
        download_slot=np.array(all_d),
        quality=np.array(all_q),
    )
    return ExactResult(
        schedule=schedule,
        objective=objective_value(schedule, ladder, weights),
        proven_optimal=True,
    )


def enumerate_optimal_objective(
    scenario: Scenario, ladder: QualityLadder, weights: ObjectiveWeights
) -> float:
    """Reference optimum by exhaustive enumeration; verification use only.

    Walks every assignment of segments to slots and, per slot, every
    combination of quality levels. Exponential in the segment count, so keep
    instances at desk scale. Raises ScheduleInfeasibleError when nothing fits.
    """
    sizes = ladder.sizes_mb
    total = 0.0
    for u in range(scenario.num_users):
        caps = scenario.capacity_mb[u]
        best = math.inf
        pack_cache: dict[tuple[int, int], float] = {}

        def slot_value(t: int, count: int) -> float:
            key = (t, count)
            if key not in pack_cache:
                best_size = -math.inf
                for combo in itertools.product(range(len(sizes)), repeat=count):
                    s = sum(sizes[i] for i in combo)
                    if fits(s, float(caps[t])) and s > best_size:
                        best_size = s
                pack_cache[key] = best_size
            return pack_cache[key]

        for assignment in itertools.product(range(scenario.num_slots), repeat=scenario.num_segments):
            counts: dict[int, int] = {}
            for t in assignment:
                counts[t] = counts.get(t, 0) + 1
            quality = 0.0
            feasible = True
            for t, n in counts.items():
                v = slot_value(t, n)
                if v == -math.inf:
                    feasible = False
                    break
                quality += v
            if not feasible:
                continue
            late = sum(max(t - s, 0) for s, t in enumerate(assignment))
            cum = 0
            buffered = 0
            per_slot = [counts.get(t, 0) for t in range(scenario.num_slots)]
            for t in range(scenario.num_slots):
                cum += per_slot[t]
                buffered += max(cum - (t + 1), 0)
            cost = weights.lateness * late + weights.buffer * buffered - weights.quality * quality
            if cost < best:
                best = cost
        if not math.isfinite(best):
            raise ScheduleInfeasibleError(f"user {u}: no feasible schedule")
        total += best
    return total


def random_instance(
    rng: np.random.Generator,
    max_slots: int = 5,
    max_levels: int = 3,
    max_users: int = 2,
    ensure_feasible: bool = True,
    rich_tail: bool = False,
) -> tuple[Scenario, QualityLadder]:
    """Small random scheduling instance for verification sweeps.

    Sizes and capacities are integer-valued so capacity comparisons are exact
    and enumeration, optimizer, and heuristics agree bit-for-bit. When
    `ensure_feasible`, capacity is topped up until every user can place every
    segment at the lowest quality somewhere. `rich_tail` additionally gives
    the final slot room for every segment at the top quality, which keeps the
    quality-greedy baseline from stranding segments, so all schedulers emit
    validation-clean schedules.
    """
    num_slots = int(rng.integers(1, max_slots + 1))
    num_segments = int(rng.integers(1, num_slots + 1))
    num_levels = int(rng.integers(1, max_levels + 1))
    num_users = int(rng.integers(1, max_users + 1))
    sizes = sorted(rng.choice(np.arange(1, 10), size=num_levels, replace=False))
    ladder = QualityLadder.from_sizes([float(s) for s in sizes])
    capacity = np.where(
        rng.random((num_users, num_slots)) < 0.2,
        0.0,
        rng.integers(0, 3 * sizes[-1] + 1, size=(num_users, num_slots)).astype(float),
    )
    if rich_tail:
        capacity[:, -1] = np.maximum(capacity[:, -1], num_segments * float(sizes[-1]))
    if ensure_feasible:
        min_size = float(sizes[0])
        for u in range(num_users):
            while sum(int(c // min_size) for c in capacity[u]) < num_segments:
                capacity[u][rng.integers(0, num_slots)] += min_size
    scenario = Scenario(
        num_users=num_users,
        num_slots=num_slots,
        num_segments=num_segments,
        slot_seconds=10.0,
        capacity_mb=capacity,
    )
    return scenario, ladder


SCHEDULER_NAMES = ("bufferFirst", "qualityFirst", "fill", "exact")


def run_scheduler(
    name: str,
    scenario: Scenario,
    ladder: QualityLadder,
    weights: ObjectiveWeights,
    greedy_config: GreedyConfig = GreedyConfig(),
    budget: SolverBudget = SolverBudget(),
) -> Schedule:
    """Dispatch by external scheduler name; raises ValueError on unknown names."""
    if name == "bufferFirst":
        return buffer_first(scenario, ladder, greedy_config)
    if name == "qualityFirst":
        return quality_first(scenario, ladder, greedy_config)
    if name == "fill":
        return fill(scenario, ladder)
    if name == "exact":
        return exact_optimize(scenario, ladder, weights, budget).schedule
    raise ValueError(f"unknown scheduler {name!r}; expected one of {SCHEDULER_NAMES}")
