"""Render the three sweep panels (quality, lateness, buffer vs removed
stations) from plot-data rows to PNG files, next to the CSV output.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_YLABEL = {
    "quality": "average quality (MB/segment)",
    "lateness": "average lateness (s)",
    "buffer": "average buffer fill (segments)",
}

_MARKERS = {
    "bufferFirst": "s",
    "qualityFirst": "D",
    "fill": "o",
    "exact": "^",
}


def _read_plot_rows(text: str) -> dict[str, list[tuple[int, float, float]]]:
    series: dict[str, list[tuple[int, float, float]]] = {}
    for row in list(csv.reader(io.StringIO(text)))[1:]:
        if not row:
            continue
        removed, scheduler, mean, half = int(row[0]), row[1], float(row[2]), float(row[3])
        series.setdefault(scheduler, []).append((removed, mean, half))
    return series


def render_metric_figure(metric: str, plot_csv: str, out_path: Path) -> None:
    """One panel: a CI-errorbar line per scheduler, dashed reference lines."""
    series = _read_plot_rows(plot_csv)
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for name in sorted(series):
        points = sorted(series[name])
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        halves = [p[2] for p in points]
        if name.startswith("reference_"):
            ax.axhline(ys[0], linestyle="--", linewidth=0.9, color="gray", alpha=0.8)
            ax.annotate(
                name.removeprefix("reference_"),
                (xs[-1], ys[0]),
                textcoords="offset points",
                xytext=(-2, 3),
                ha="right",
                fontsize=8,
                color="gray",
            )
        else:
            ax.errorbar(
                xs, ys, yerr=halves, marker=_MARKERS.get(name, "x"),
                markersize=4, capsize=2, linewidth=1.2, label=name,
            )
    ax.set_xlabel("removed base stations")
    ax.set_ylabel(_YLABEL.get(metric, metric))
    ax.grid(True, alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_all(plot_data: dict[str, str], out_dir: Path) -> list[Path]:
    paths = []
    for metric, text in plot_data.items():
        path = out_dir / f"{metric}.png"
        render_metric_figure(metric, text, path)
        paths.append(path)
    return paths
