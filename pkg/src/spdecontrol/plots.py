"""Figure rendering for the CLI report path.

Figures are written next to the CSV/JSON outputs; they are a convenience
layer, the delimited files remain the interchange format.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .grids import PointGrid


def plot_space_time(fields: np.ndarray, times: np.ndarray, grid, out: str | Path,
                    title: str = "", cbar_label: str = "u") -> Path:
    """Space-time heatmap of a trajectory or control; falls back to a plain
    time series in the zero-dimensional case."""
    out = Path(out)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    fields = np.asarray(fields)
    if isinstance(grid, PointGrid):
        ax.plot(times, fields[:, 0], lw=1.0)
        ax.set_xlabel("t")
        ax.set_ylabel(cbar_label)
    else:
        mesh = ax.pcolormesh(grid.nodes, times, fields, shading="nearest", cmap="viridis")
        fig.colorbar(mesh, ax=ax, label=cbar_label)
        ax.set_xlabel("x")
        ax.set_ylabel("t")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def plot_history(history: list[dict], out: str | Path) -> Path:
    out = Path(out)
    it = [h["iteration"] for h in history]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.0, 5.0), sharex=True)
    costs = [np.nan if h["cost"] is None else h["cost"] for h in history]
    ax1.plot(it, costs, marker="o", ms=3)
    ax1.set_ylabel("cost")
    forced = [h["iteration"] for h in history if h.get("forced")]
    if forced:
        ax1.plot(forced, [costs[it.index(i)] for i in forced], "rx", label="forced accept")
        ax1.legend()
    ax2.semilogy(it, [h["grad_norm"] for h in history], marker="o", ms=3)
    ax2.set_ylabel("gradient norm")
    ax2.set_xlabel("iteration")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
