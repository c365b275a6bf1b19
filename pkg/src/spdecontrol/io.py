"""Delimited and JSON interchange formats.

Trajectory/control CSV: one comment header line

    # grid x_min x_max n_cells dt n_steps

then rows ``t, v_0, ..., v_{n-1}`` printed with %.17g, which round-trips
float64 losslessly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grids import PointGrid, SpatialGrid

HISTORY_KEYS = ("iteration", "cost", "std_error", "grad_norm", "beta", "step", "accepted", "forced")


def _grid_header(grid, dt: float, n_steps: int) -> str:
    if isinstance(grid, PointGrid):
        x_min, x_max = 0.0, 0.0
    else:
        x_min, x_max = grid.x_min, grid.x_max
    return f"# grid {x_min:.17g} {x_max:.17g} {grid.n_cells} {dt:.17g} {n_steps}"


def write_field_csv(path: str | Path, times: np.ndarray, fields: np.ndarray, grid, dt: float,
                    n_steps: int) -> None:
    """Write a time-indexed stack of fields (trajectory, adjoint, or control)."""
    fields = np.asarray(fields, dtype=float)
    lines = [_grid_header(grid, dt, n_steps)]
    for t, row in zip(times, fields):
        lines.append(",".join(f"{v:.17g}" for v in (t, *row)))
    Path(path).write_text("\n".join(lines) + "\n")


def read_field_csv(path: str | Path) -> tuple[dict, np.ndarray, np.ndarray]:
    """Inverse of write_field_csv: returns (metadata, times, fields)."""
    text = Path(path).read_text().strip().splitlines()
    header = text[0]
    if not header.startswith("# grid "):
        raise ValueError(f"{path}: missing grid header line")
    x_min, x_max, n_cells, dt, n_steps = header.split()[2:]
    meta = dict(x_min=float(x_min), x_max=float(x_max), n_cells=int(n_cells),
                dt=float(dt), n_steps=int(n_steps))
    data = np.array([[float(v) for v in line.split(",")] for line in text[1:]])
    return meta, data[:, 0], data[:, 1:]


def write_history_jsonl(path: str | Path, history: list[dict]) -> None:
    with open(path, "w") as fh:
        for record in history:
            fh.write(json.dumps({k: record[k] for k in HISTORY_KEYS}) + "\n")


def read_history_jsonl(path: str | Path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]


def write_json(path: str | Path, obj: dict) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
