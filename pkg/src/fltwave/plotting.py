"""Figure helpers for the command-line reports.

Figures are built on bare :class:`matplotlib.figure.Figure` objects, so no
GUI backend or pyplot state is involved.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib import rcParams
from matplotlib.figure import Figure

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
WIDTH = 5.0
COLORS = ["#08589e", "#2b8cbe", "#4eb3d3", "#7bccc4", "#d95f0e", "#636363"]

STYLE = {
    "axes.labelsize": 10,
    "font.size": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def new_figure(scale: float = 1.0, ncols: int = 1, nrows: int = 1):
    rcParams.update(STYLE)
    w = WIDTH * scale * ncols
    fig = Figure(figsize=(w, WIDTH * scale * GOLDEN * nrows))
    axes = fig.subplots(nrows, ncols, squeeze=False)
    return fig, axes.ravel() if axes.size > 1 else axes[0, 0]


def save(fig: Figure, path: str | Path, dpi: int = 150) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    return path


def plot_bisection_audit(audit: list, sigma_ent: float, sigma_smooth: float, path) -> Path:
    fig, (ax1, ax2) = new_figure(0.8, ncols=2)
    sm = [a for a in audit if a["stage"] == "smooth"]
    for k, a in enumerate(sm):
        ax1.plot(k, a["sigma"], "o", ms=3, color=COLORS[0] if a["class"] == "II" else COLORS[4])
    ax1.axhline(sigma_smooth, color=COLORS[5], ls="--")
    ax1.set_xlabel("probe")
    ax1.set_ylabel("speed (blue: escapes, orange: reaches origin)")
    ent = sorted((a["sigma"], a["g"]) for a in audit if a["stage"] == "ent")
    if ent:
        s, g = np.array(ent).T
        ax2.plot(s, g, "o-", ms=3, color=COLORS[1])
    ax2.axhline(0.0, color=COLORS[5], lw=0.8)
    ax2.axvline(sigma_ent, color=COLORS[5], ls="--")
    ax2.set_xlabel("speed")
    ax2.set_ylabel("jump-to-zero residual")
    return save(fig, path)


def plot_profiles(waves: Sequence, path, title: str | None = None) -> Path:
    fig, ax = new_figure()
    for k, w in enumerate(waves):
        rows = w.rows()
        ax.plot(rows[:, 0], rows[:, 1], color=COLORS[k % len(COLORS)],
                label=f"{w.sigma:.4f} ({w.kind})")
    lo = max(min(w.xi_range[0] for w in waves), -15.0)
    hi = min(max(w.xi_range[1] for w in waves), 10.0)
    ax.set_xlim(lo, max(hi, 1.0))
    ax.set_xlabel("xi")
    ax.set_ylabel("u")
    ax.legend(title="speed")
    if title:
        ax.set_title(title)
    return save(fig, path)


def plot_distance_matrix(sigmas: Sequence[float], mat: np.ndarray, label: str, path) -> Path:
    fig, ax = new_figure(0.8)
    im = ax.imshow(mat, cmap="viridis", origin="lower")
    ticks = [f"{s:.3g}" for s in sigmas]
    ax.set_xticks(range(len(sigmas)), ticks, rotation=45)
    ax.set_yticks(range(len(sigmas)), ticks)
    ax.grid(False)
    fig.colorbar(im, ax=ax, label=label)
    return save(fig, path)


def plot_simulation(x: np.ndarray, snapshots: dict, trace, path, overlay=None) -> Path:
    """Snapshots on the left, front position on the right.

    ``overlay`` is an optional (x, u) pair drawn over the last snapshot.
    """
    fig, (ax1, ax2) = new_figure(0.8, ncols=2)
    times = sorted(snapshots)
    pick = times if len(times) <= 6 else [times[int(i)] for i in np.linspace(0, len(times) - 1, 6)]
    for k, t in enumerate(pick):
        ax1.plot(x, snapshots[t], color=COLORS[k % len(COLORS)], label=f"t={t:.3g}")
    if overlay is not None:
        ax1.plot(overlay[0], overlay[1], "k--", lw=0.9, label="traveling wave")
    ax1.set_xlabel("x")
    ax1.set_ylabel("u")
    ax1.legend()
    ax2.plot(trace.times, trace.positions, color=COLORS[0])
    ax2.set_xlabel("t")
    ax2.set_ylabel("front position")
    return save(fig, path)
