"""SVG figures over the CSV tables emitted by the interval package.

The column layout is the whole contract with the core package: results
tables carry mode/n/eps/adversary rows from the simulation harness, geometry
tables carry eps_max/eps/angle/distance rows from the disk-geometry dump.
Nothing here imports the core package; the geometry closed form is re-derived
so the dashed overlay can cross-check the dumped curve.
"""

from __future__ import annotations

import math
from typing import Callable, Mapping, Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

__all__ = [
    "FIGURES",
    "REQUIRED_COLUMNS",
    "ReportsError",
    "apply_filters",
    "disk_profile",
    "load_results",
    "rate_fit",
    "render_figure",
]

# Hashed glyph/clip ids and savefig timestamps otherwise vary run to run;
# keeping text as text makes annotations greppable in the output.
plt.rcParams["svg.hashsalt"] = "efronci-reports"
plt.rcParams["svg.fonttype"] = "none"

REQUIRED_COLUMNS: Mapping[str, tuple[str, ...]] = {
    "rate_plot": ("mode", "n", "eps", "adversary", "median_length"),
    "coverage_plot": ("mode", "n", "eps", "adversary", "coverage", "mc_stderr"),
    "disk_geometry": ("eps_max", "eps", "angle", "distance"),
}

# Length-decay exponents the two interval modes are designed to achieve.
THEORY_SLOPES = {"known": -0.25, "unknown": -0.125}


class ReportsError(ValueError):
    """Bad figure request: unknown figure, missing column, empty selection."""


def load_results(path) -> pd.DataFrame:
    return pd.read_csv(path)


def apply_filters(
    frame: pd.DataFrame, filters: Optional[Mapping[str, str]]
) -> pd.DataFrame:
    """Row selection from KEY=VALUE strings; numeric columns compare as floats."""
    for key, raw in (filters or {}).items():
        if key not in frame.columns:
            raise ReportsError(f"unknown filter column {key!r}")
        column = frame[key]
        if pd.api.types.is_numeric_dtype(column):
            try:
                value = float(raw)
            except ValueError as exc:
                raise ReportsError(f"filter {key}={raw!r} is not numeric") from exc
            frame = frame[column == value]
        else:
            frame = frame[column.astype(str) == str(raw)]
    return frame


def _fit(frame: pd.DataFrame) -> tuple[float, float, float]:
    data = frame[["n", "median_length"]].dropna()
    x = np.log(data["n"].to_numpy(dtype=float))
    y = np.log(data["median_length"].to_numpy(dtype=float))
    if np.unique(x).size < 2:
        raise ReportsError("rate fit needs at least two distinct n values")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dof = x.size - 2
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(float(np.sum(resid * resid)) / dof / sxx) if dof > 0 else 0.0
    return float(slope), float(intercept), stderr


def rate_fit(frame: pd.DataFrame) -> tuple[float, float]:
    """OLS slope and its standard error on (log n, log median_length).

    Rows with NaN medians (cells where every trial failed) are dropped; at
    least two distinct n values must remain. The slope estimates the
    length-decay exponent of the interval procedure that produced the table.
    """
    slope, _, stderr = _fit(frame)
    return slope, stderr


def disk_profile(eps_max: float, eps: float, angles) -> np.ndarray:
    """Distance from the acceptance disk to the rotated residual disk.

    ( sqrt((eps_max - eps)^2 + 4 (1-eps_max)(1-eps) sin^2(angle/2))
      - (eps_max + eps) )_+ , vectorized over angles.
    """
    if not 0.0 <= eps <= eps_max < 1.0:
        raise ReportsError("need 0 <= eps <= eps_max < 1")
    a = np.asarray(angles, dtype=float)
    s = np.sin(0.5 * a)
    d = np.sqrt((eps_max - eps) ** 2 + 4.0 * (1.0 - eps_max) * (1.0 - eps) * s * s)
    return np.maximum(0.0, d - (eps_max + eps))


def _rate_plot(frame: pd.DataFrame, delta: float) -> plt.Figure:
    modes = sorted(set(frame["mode"].astype(str)))
    if len(modes) != 1:
        raise ReportsError("rate_plot needs a single mode; filter mode=... first")
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    notes = []
    for (eps, adversary), group in frame.groupby(["eps", "adversary"], sort=True):
        group = group.sort_values("n").dropna(subset=["median_length"])
        slope, intercept, stderr = _fit(group)
        x = group["n"].to_numpy(dtype=float)
        label = f"eps={eps} {adversary}"
        ax.plot(x, group["median_length"], "o", label=label)
        ax.plot(x, np.exp(intercept) * x**slope, "--", linewidth=1)
        notes.append(f"{label}: slope {slope:.4f} +/- {stderr:.4f}")
    theory = THEORY_SLOPES.get(modes[0])
    if theory is not None:
        notes.append(f"theory slope {theory:+.3f}")
    ax.text(
        0.02, 0.02, "\n".join(notes), transform=ax.transAxes, fontsize=8, va="bottom"
    )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("median CI length")
    ax.set_title(f"{modes[0]}-variance mode: length decay")
    ax.legend(fontsize=8, loc="upper right")
    fig.tight_layout()
    return fig


def _coverage_plot(frame: pd.DataFrame, delta: float) -> plt.Figure:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    sizes = sorted(frame["n"].unique())
    position = {n: i for i, n in enumerate(sizes)}
    groups = list(frame.groupby(["mode", "eps", "adversary"], sort=True))
    width = 0.8 / len(groups)
    for i, ((mode, eps, adversary), group) in enumerate(groups):
        offset = (i - 0.5 * (len(groups) - 1)) * width
        xs = [position[n] + offset for n in group["n"]]
        ax.bar(
            xs,
            group["coverage"],
            width=width,
            yerr=group["mc_stderr"],
            capsize=3,
            label=f"{mode} eps={eps} {adversary}",
        )
    target = 1.0 - delta
    ax.axhline(
        target, linestyle="--", color="grey", linewidth=1, label=f"target {target:g}"
    )
    ax.set_xticks(range(len(sizes)))
    ax.set_xticklabels(str(n) for n in sizes)
    ax.set_xlabel("n")
    ax.set_ylabel("coverage")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("empirical coverage")
    ax.legend(fontsize=8, loc="lower left")
    fig.tight_layout()
    return fig


def _disk_geometry(frame: pd.DataFrame, delta: float) -> plt.Figure:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for (eps_max, eps), group in frame.groupby(["eps_max", "eps"], sort=True):
        group = group.sort_values("angle")
        angles = group["angle"].to_numpy(dtype=float)
        ax.plot(
            angles,
            group["distance"],
            "o",
            markersize=3,
            label=f"eps_max={eps_max} eps={eps}",
        )
        ax.plot(angles, disk_profile(float(eps_max), float(eps), angles), "--", lw=1)
    ax.set_xlabel("rotation angle")
    ax.set_ylabel("disk separation")
    ax.set_title("candidate separation geometry (dashed: closed form)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


FIGURES: Mapping[str, Callable[[pd.DataFrame, float], plt.Figure]] = {
    "rate_plot": _rate_plot,
    "coverage_plot": _coverage_plot,
    "disk_geometry": _disk_geometry,
}


def render_figure(csv_path, figure: str, out_path, filters=None, delta=0.1) -> None:
    """Validate columns for the figure, filter rows, write the figure file.

    The output format follows the path suffix (.svg or .png); SVG output is
    byte-for-byte deterministic. delta positions the coverage target line at
    1 - delta and is ignored by the other figures.
    """
    if figure not in FIGURES:
        raise ReportsError(f"unknown figure {figure!r}; choose from {sorted(FIGURES)}")
    if not 0.0 < delta < 1.0:
        raise ReportsError("delta must lie in (0, 1)")
    frame = load_results(csv_path)
    missing = [c for c in REQUIRED_COLUMNS[figure] if c not in frame.columns]
    if missing:
        raise ReportsError(
            f"column {missing[0]!r} missing from {csv_path} (required by {figure})"
        )
    frame = apply_filters(frame, filters)
    if frame.empty:
        raise ReportsError("no rows left after filtering")
    fig = FIGURES[figure](frame, delta)
    try:
        if str(out_path).lower().endswith(".svg"):
            fig.savefig(out_path, format="svg", metadata={"Date": None})
        else:
            fig.savefig(out_path)
    finally:
        plt.close(fig)
