"""Static SVG rendering of sweep results."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .rates import asymptotic_rate_fh, uses_asymptote  # noqa: E402
from .schemes import SweepResult, apply_override  # noqa: E402

# fixed salt and no timestamp keep the SVG byte-identical across runs
matplotlib.rcParams["svg.hashsalt"] = "qssrate"
matplotlib.rcParams["svg.fonttype"] = "none"


def _curve(result: SweepResult, name: str) -> tuple[np.ndarray, np.ndarray]:
    rows = result.series_rows(name)
    xs = np.array([r.axis_value for r in rows])
    if result.spec.quantity == "max_distance":
        ys = np.array([np.nan if r.max_distance_km is None else r.max_distance_km for r in rows], float)
    else:
        ys = np.array([np.nan if r.report is None else r.report.rate for r in rows], float)
    return xs, ys


def draw_panel(ax, result: SweepResult, panel) -> None:
    for series in result.spec.all_series():
        xs, ys = _curve(result, series.name)
        if panel.log_y:
            ys = np.where(ys > 0.0, ys, np.nan)
        ys = np.where(np.isfinite(ys), ys, np.nan)
        color, style = panel.styles.get(series.name, (None, "-"))
        marker = "o" if result.spec.quantity == "max_distance" else None
        line, = ax.plot(xs, ys, linestyle=style, color=color, marker=marker, markersize=3,
                        label=series.name, linewidth=1.2)
        if panel.asymptote:
            cfg = series.base or result.spec.base
            for path, value in series.overrides:
                cfg = apply_override(cfg, path, value)
            if uses_asymptote(cfg):
                r = asymptotic_rate_fh(cfg).rate
                if math.isfinite(r):
                    ax.axhline(r, color=line.get_color(), linestyle=":", linewidth=1.0)
    if result.spec.plob:
        rows = result.series_rows(result.spec.all_series()[0].name)
        xs = [r.axis_value for r in rows]
        ys = [np.nan if r.plob is None else r.plob for r in rows]
        ax.plot(xs, ys, color="0.6", linestyle="-.", label="PLOB")
    if panel.log_x:
        ax.set_xscale("log")
    if panel.log_y:
        ax.set_yscale("log")
    ax.set_xlabel(panel.xlabel)
    ax.set_ylabel(panel.ylabel)
    ax.grid(True, which="major", alpha=0.3)
    ax.legend(fontsize=6, frameon=False)


def render_figure(title: str, panels, results, path: str | Path) -> Path:
    """One SVG with a subplot per panel."""
    path = Path(path)
    fig, axes = plt.subplots(1, len(panels), figsize=(5.5 * len(panels), 4.2), squeeze=False)
    for ax, panel, result in zip(axes[0], panels, results):
        draw_panel(ax, result, panel)
        if len(panels) > 1:
            ax.set_title(f"({panel.name})", fontsize=9)
    fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
