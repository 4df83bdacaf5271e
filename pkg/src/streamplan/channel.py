"""Wireless capacity model: a line of base stations, log-distance path loss
with lognormal shadowing, Shannon rates under a per-cell cap, and
proportional-fair sharing among co-moving users.

The builder turns a station-removal pattern into the per-user, per-slot
capacity matrix consumed by the schedulers. All randomness flows through one
seeded generator, so a (config, seed) pair pins the scenario bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Scenario

# Users sit essentially at the serving mast when their slot position coincides
# with it; clamp the distance so the path-loss log stays defined. Any value
# below the cap-engagement distance (~100 m) yields the capped rate anyway.
MIN_DISTANCE_KM = 1e-3


@dataclass(frozen=True)
class RadioParams:
    """Link-budget parameters; defaults model a 10 MHz macro cell."""

    bandwidth_hz: float = 1.0e7
    tx_power_dbm: float = 46.0
    antenna_gain_db: float = 0.0
    noise_psd_dbm_hz: float = -174.0
    interference_psd_dbm_hz: float = -149.0
    cell_cap_mbps: float = 30.0

    def __post_init__(self) -> None:
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be > 0")
        if self.cell_cap_mbps <= 0:
            raise ValueError("cell_cap_mbps must be > 0")


@dataclass(frozen=True)
class ScenarioConfig:
    """Geometry and run parameters for one generated scenario.

    The user group advances one inter-site distance per slot, so the number
    of base stations doubles as the number of slots. `segment_count=None`
    means one segment per station.
    """

    num_base_stations: int = 44
    inter_site_distance_m: float = 1500.0
    num_users: int = 4
    num_removed: int = 0
    protected_edge_count: int = 2
    shadowing_sigma_db: float = 10.0
    slot_seconds: float = 10.0
    segment_count: int | None = None
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.num_base_stations < 1 or self.num_users < 1:
            raise ValueError("need at least one base station and one user")
        if self.inter_site_distance_m <= 0 or self.slot_seconds <= 0:
            raise ValueError("inter_site_distance_m and slot_seconds must be > 0")
        if self.protected_edge_count < 0 or self.shadowing_sigma_db < 0:
            raise ValueError("protected_edge_count and shadowing_sigma_db must be >= 0")
        removable = self.num_base_stations - 2 * self.protected_edge_count
        if not 0 <= self.num_removed <= max(removable, 0):
            raise ValueError(
                f"num_removed ({self.num_removed}) must be within [0, {max(removable, 0)}] "
                f"for {self.num_base_stations} stations with "
                f"{self.protected_edge_count} protected on each edge"
            )
        if self.segments > self.num_base_stations:
            raise ValueError("segment_count must be <= num_base_stations")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be an unsigned integer")

    @property
    def segments(self) -> int:
        return self.num_base_stations if self.segment_count is None else self.segment_count


@dataclass(frozen=True)
class BuiltScenario:
    """A generated scenario plus the removal/attachment record behind it."""

    scenario: Scenario
    removed_stations: tuple[int, ...]
    serving_station: tuple[int, ...]  # per slot, index of the attached station


def path_loss_db(distance_km: float, shadowing_db: float = 0.0) -> float:
    """Log-distance macro-cell path loss plus a shadowing term, in dB."""
    if distance_km <= 0:
        raise ValueError(f"distance must be > 0 km, got {distance_km}")
    return 128.1 + 37.6 * math.log10(distance_km) + shadowing_db


def shannon_rate_mbps(params: RadioParams, loss_db: float) -> float:
    """Achievable rate in Mbit/s for a given total path loss, capped per cell.

    Noise and interference power spectral densities are summed in the linear
    domain over the full bandwidth before forming the SINR.
    """
    rx_dbm = params.tx_power_dbm + params.antenna_gain_db - loss_db
    bw_db = 10.0 * math.log10(params.bandwidth_hz)
    noise_dbm = params.noise_psd_dbm_hz + bw_db
    interference_dbm = params.interference_psd_dbm_hz + bw_db
    ni_dbm = 10.0 * math.log10(10 ** (noise_dbm / 10.0) + 10 ** (interference_dbm / 10.0))
    sinr = 10 ** ((rx_dbm - ni_dbm) / 10.0)
    rate = params.bandwidth_hz * math.log2(1.0 + sinr) / 1e6
    return min(rate, params.cell_cap_mbps)


def allocate_proportional_fair(
    user_phy_rates_mbps: list[float] | tuple[float, ...], cell_cap_mbps: float
) -> list[float]:
    """Equal time share per user, scaled down when the cell cap binds.

    With every user seeing a statistically identical channel the classic
    proportional-fair schedule degenerates to round-robin, i.e. each user
    gets rate/n; the whole cell never exceeds `cell_cap_mbps`.
    """
    n = len(user_phy_rates_mbps)
    if n == 0:
        return []
    if any(r < 0 for r in user_phy_rates_mbps):
        raise ValueError("physical rates must be >= 0")
    shares = [r / n for r in user_phy_rates_mbps]
    total = sum(shares)
    if total > cell_cap_mbps and total > 0:
        scale = cell_cap_mbps / total
        shares = [s * scale for s in shares]
    return shares


def build_scenario(config: ScenarioConfig, params: RadioParams) -> BuiltScenario:
    """Generate the capacity matrix for a removal pattern drawn from `rng_seed`.

    Stations sit at i * inter-site-distance on a line; the user group starts
    at station 0 and advances one site per slot. Removed stations are drawn
    uniformly without replacement from the unprotected interior. Each slot,
    every user attaches to the nearest remaining station (pre-shadowing), and
    the slot capacity is the proportional-fair share of its Shannon rate.
    """
    rng = np.random.default_rng(config.rng_seed)
    n_bs = config.num_base_stations
    edge = config.protected_edge_count
    interior = np.arange(edge, n_bs - edge)
    removed = np.sort(rng.choice(interior, size=config.num_removed, replace=False))
    removed_set = frozenset(int(i) for i in removed)
    active = [i for i in range(n_bs) if i not in removed_set]
    if not active:
        raise ValueError("station removal left no active stations")

    num_slots = n_bs
    shadowing = rng.normal(0.0, config.shadowing_sigma_db, size=(config.num_users, num_slots))
    if config.shadowing_sigma_db == 0:
        shadowing = np.zeros_like(shadowing)  # identical regardless of draw

    isd_km = config.inter_site_distance_m / 1000.0
    serving = []
    capacity = np.zeros((config.num_users, num_slots))
    active_arr = np.asarray(active)
    for t in range(num_slots):
        nearest = int(active_arr[np.argmin(np.abs(active_arr - t))])
        serving.append(nearest)
        distance_km = max(abs(t - nearest) * isd_km, MIN_DISTANCE_KM)
        phy = [
            shannon_rate_mbps(params, path_loss_db(distance_km, shadowing[u][t]))
            for u in range(config.num_users)
        ]
        shares = allocate_proportional_fair(phy, params.cell_cap_mbps)
        for u in range(config.num_users):
            capacity[u][t] = shares[u] * config.slot_seconds / 8.0  # Mbit -> MB

    scenario = Scenario(
        num_users=config.num_users,
        num_slots=num_slots,
        num_segments=config.segments,
        slot_seconds=config.slot_seconds,
        capacity_mb=capacity,
    )
    return BuiltScenario(
        scenario=scenario,
        removed_stations=tuple(int(i) for i in removed),
        serving_station=tuple(serving),
    )
