"""Anticipatory segment-download scheduling for adaptive video streaming.

Given anticipated per-slot data rates, the schedulers decide when to download
each video segment and at which quality so that playback interruptions and
wasteful over-buffering are both kept small. The package also ships the
wireless scenario generator the schedulers are evaluated on, HLS playlist
tooling with buffer-control extension tags, and a reproducible experiment
harness.
"""

from .channel import (
    BuiltScenario,
    RadioParams,
    ScenarioConfig,
    allocate_proportional_fair,
    build_scenario,
    path_loss_db,
    shannon_rate_mbps,
)
from .core import (
    DEFAULT_LADDER,
    DEFAULT_WEIGHTS,
    MetricsReport,
    ObjectiveWeights,
    QualityLadder,
    QualityLevel,
    Scenario,
    Schedule,
    UserMetrics,
    ValidationResult,
    Violation,
    buffer_timeline,
    compute_metrics,
    lateness,
    objective_value,
    validate_schedule,
)
from .experiment import (
    ExperimentConfig,
    ResultRow,
    confidence_interval,
    derive_seed,
    emit_plot_data,
    run_experiment,
)
from .hls import (
    MasterPlaylist,
    MediaEntry,
    MediaPlaylist,
    PlaylistJoinError,
    PlaylistParseError,
    buffer_size_for_slot,
    emit_media_playlist,
    join_playlists,
    parse_master_playlist,
    parse_media_playlist,
)
from .schedulers import (
    ExactResult,
    GreedyConfig,
    ScheduleInfeasibleError,
    SolverBudget,
    SolverBudgetError,
    best_quality,
    best_quality_for_range,
    buffer_first,
    enumerate_optimal_objective,
    exact_optimize,
    fill,
    quality_first,
    random_instance,
    run_scheduler,
    segments_for_quality,
)

__version__ = "0.1.0"

__all__ = [
    "BuiltScenario",
    "DEFAULT_LADDER",
    "DEFAULT_WEIGHTS",
    "ExactResult",
    "ExperimentConfig",
    "GreedyConfig",
    "MasterPlaylist",
    "MediaEntry",
    "MediaPlaylist",
    "MetricsReport",
    "ObjectiveWeights",
    "PlaylistJoinError",
    "PlaylistParseError",
    "QualityLadder",
    "QualityLevel",
    "RadioParams",
    "ResultRow",
    "Scenario",
    "ScenarioConfig",
    "Schedule",
    "ScheduleInfeasibleError",
    "SolverBudget",
    "SolverBudgetError",
    "UserMetrics",
    "ValidationResult",
    "Violation",
    "allocate_proportional_fair",
    "best_quality",
    "best_quality_for_range",
    "buffer_first",
    "buffer_size_for_slot",
    "buffer_timeline",
    "build_scenario",
    "compute_metrics",
    "confidence_interval",
    "derive_seed",
    "emit_media_playlist",
    "emit_plot_data",
    "enumerate_optimal_objective",
    "exact_optimize",
    "fill",
    "join_playlists",
    "lateness",
    "objective_value",
    "parse_master_playlist",
    "parse_media_playlist",
    "path_loss_db",
    "quality_first",
    "random_instance",
    "run_scheduler",
    "segments_for_quality",
    "shannon_rate_mbps",
    "validate_schedule",
]
