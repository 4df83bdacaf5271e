"""On-disk formats: scenario and schedule CSVs plus the flat key=value config.

Scenario CSV: header `user,slot,capacity_mb`, one row per (user, slot) pair,
capacities with 6 decimal places. Schedule CSV: header
`user,segment,slot,quality_index,quality_mb`, sorted by (user, segment).
Config files are `key=value` lines with `#` comments; list values are
comma-separated. All indices in files are 0-based.
"""

from __future__ import annotations

import csv
import io

import numpy as np

from .channel import RadioParams, ScenarioConfig
from .core import QualityLadder, Scenario, Schedule


class FormatError(ValueError):
    """Malformed input file."""


SCENARIO_HEADER = ["user", "slot", "capacity_mb"]
SCHEDULE_HEADER = ["user", "segment", "slot", "quality_index", "quality_mb"]


def scenario_to_csv(scenario: Scenario) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SCENARIO_HEADER)
    for u in range(scenario.num_users):
        for t in range(scenario.num_slots):
            w.writerow([u, t, f"{scenario.capacity_mb[u][t]:.6f}"])
    return out.getvalue()


def scenario_from_csv(
    text: str, slot_seconds: float = 10.0, num_segments: int | None = None
) -> Scenario:
    """Rebuild a Scenario from its CSV; the CSV carries capacities only.

    Slot length and segment count are not part of the file, so they are
    passed in; `num_segments=None` means one segment per slot.
    """
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r]
    if not rows or rows[0] != SCENARIO_HEADER:
        raise FormatError(f"scenario CSV must start with header {','.join(SCENARIO_HEADER)}")
    cells: dict[tuple[int, int], float] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            u, t, c = int(row[0]), int(row[1]), float(row[2])
        except (ValueError, IndexError):
            raise FormatError(f"scenario CSV line {lineno}: bad row {row!r}") from None
        if (u, t) in cells:
            raise FormatError(f"scenario CSV line {lineno}: duplicate cell ({u},{t})")
        cells[(u, t)] = c
    if not cells:
        raise FormatError("scenario CSV has no data rows")
    num_users = max(u for u, _ in cells) + 1
    num_slots = max(t for _, t in cells) + 1
    if len(cells) != num_users * num_slots:
        raise FormatError(
            f"scenario CSV is not a complete {num_users}x{num_slots} grid "
            f"({len(cells)} rows)"
        )
    capacity = np.zeros((num_users, num_slots))
    for (u, t), c in cells.items():
        capacity[u][t] = c
    return Scenario(
        num_users=num_users,
        num_slots=num_slots,
        num_segments=num_slots if num_segments is None else num_segments,
        slot_seconds=slot_seconds,
        capacity_mb=capacity,
    )


def schedule_to_csv(schedule: Schedule, ladder: QualityLadder) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SCHEDULE_HEADER)
    sizes = ladder.sizes_mb
    for u in range(schedule.num_users):
        for s in range(schedule.num_segments):
            q = int(schedule.quality[u][s])
            w.writerow([u, s, int(schedule.download_slot[u][s]), q, f"{sizes[q]:.6g}"])
    return out.getvalue()


def schedule_from_csv(text: str, num_slots: int | None = None) -> Schedule:
    """Rebuild a Schedule from its CSV (quality_mb is informational only)."""
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r]
    if not rows or rows[0] != SCHEDULE_HEADER:
        raise FormatError(f"schedule CSV must start with header {','.join(SCHEDULE_HEADER)}")
    cells: dict[tuple[int, int], tuple[int, int]] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            u, s, t, q = int(row[0]), int(row[1]), int(row[2]), int(row[3])
        except (ValueError, IndexError):
            raise FormatError(f"schedule CSV line {lineno}: bad row {row!r}") from None
        if (u, s) in cells:
            raise FormatError(f"schedule CSV line {lineno}: duplicate segment ({u},{s})")
        cells[(u, s)] = (t, q)
    if not cells:
        raise FormatError("schedule CSV has no data rows")
    num_users = max(u for u, _ in cells) + 1
    num_segments = max(s for _, s in cells) + 1
    if len(cells) != num_users * num_segments:
        raise FormatError("schedule CSV must cover every (user, segment) pair exactly once")
    d = np.zeros((num_users, num_segments), dtype=int)
    q = np.zeros((num_users, num_segments), dtype=int)
    for (u, s), (t, level) in cells.items():
        d[u][s] = t
        q[u][s] = level
    slots = int(max(num_segments, d.max() + 1)) if num_slots is None else num_slots
    return Schedule(num_slots=slots, download_slot=d, quality=q)


def parse_kv_config(text: str) -> dict[str, str]:
    """Parse flat `key=value` text with `#` comments and blank lines."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key:
            raise FormatError(f"config line {lineno}: empty key")
        if key in out:
            raise FormatError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


_RADIO_KEYS = {
    "bandwidthHz": ("bandwidth_hz", float),
    "txPowerDbm": ("tx_power_dbm", float),
    "antennaGainDb": ("antenna_gain_db", float),
    "noisePsdDbmHz": ("noise_psd_dbm_hz", float),
    "interferencePsdDbmHz": ("interference_psd_dbm_hz", float),
    "cellCapMbps": ("cell_cap_mbps", float),
}

_SCENARIO_KEYS = {
    "numBaseStations": ("num_base_stations", int),
    "interSiteDistanceM": ("inter_site_distance_m", float),
    "numUsers": ("num_users", int),
    "numRemoved": ("num_removed", int),
    "protectedEdgeCount": ("protected_edge_count", int),
    "shadowingSigmaDb": ("shadowing_sigma_db", float),
    "slotSeconds": ("slot_seconds", float),
    "segmentCount": ("segment_count", int),
    "rngSeed": ("rng_seed", int),
}


def _pick(kv: dict[str, str], table: dict[str, tuple[str, type]]) -> dict[str, object]:
    fields: dict[str, object] = {}
    for key, (attr, cast) in table.items():
        if key in kv:
            try:
                fields[attr] = cast(kv[key])
            except ValueError:
                raise FormatError(f"config key {key}: cannot parse {kv[key]!r}") from None
    return fields


def radio_params_from_config(kv: dict[str, str]) -> RadioParams:
    return RadioParams(**_pick(kv, _RADIO_KEYS))


def scenario_config_from_config(kv: dict[str, str]) -> ScenarioConfig:
    return ScenarioConfig(**_pick(kv, _SCENARIO_KEYS))


def config_keys_known(kv: dict[str, str], extra: set[str]) -> None:
    """Reject typo'd keys early: everything must be a known field name."""
    known = set(_RADIO_KEYS) | set(_SCENARIO_KEYS) | extra
    unknown = sorted(set(kv) - known)
    if unknown:
        raise FormatError(f"unknown config keys: {', '.join(unknown)}")
