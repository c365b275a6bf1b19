"""Quadratic cost functional, its Monte Carlo estimator, the adjoint-based
Monte Carlo gradient estimator, and the minimum-principle residual.

Time quadrature convention: the running cost uses left-endpoint dt-weights,
the same weighting the adjoint recursion carries its running source with.
That makes the adjoint gradient the exact derivative of the discrete cost,
so a common-random-numbers finite-difference check is limited only by FD
truncation error.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .adjoint import solve_adjoint, solve_adjoint_batch
from .dynamics import PathTrajectory, ProblemSpec, _check_control, simulate_path, simulate_paths
from .grids import inner_l2, spacetime_inner
from .noise import stream_from_tuple


@dataclass(frozen=True)
class CostWeights:
    """Weights and targets of the cost functional.

    running_target has one row per time node (n_steps + 1 rows); terminal_target
    is a single field.  None means a zero target.
    """

    c_running: float = 0.0
    c_terminal: float = 0.0
    lam: float = 0.0
    running_target: np.ndarray | None = None
    terminal_target: np.ndarray | None = None

    def __post_init__(self):
        for w in (self.c_running, self.c_terminal, self.lam):
            if not np.isfinite(w) or w < 0:
                raise ValueError("cost weights must be finite and non-negative")
        for name in ("running_target", "terminal_target"):
            t = getattr(self, name)
            if t is not None:
                t = np.asarray(t, dtype=float)
                if not np.all(np.isfinite(t)):
                    raise ValueError(f"{name} must be finite")
                object.__setattr__(self, name, t)

    def running_residuals(self, states: np.ndarray) -> np.ndarray:
        if self.running_target is None:
            return states
        if self.running_target.shape != states.shape:
            raise ValueError("running target does not match the trajectory shape")
        return states - self.running_target

    def terminal_residual(self, u_T: np.ndarray) -> np.ndarray:
        if self.terminal_target is None:
            return u_T
        return u_T - self.terminal_target


@dataclass
class CostBreakdown:
    running: float
    terminal: float
    control_penalty: float
    total: float
    n_paths: int
    std_error: float


@dataclass
class GradientEstimate:
    """Monte Carlo estimate of the cost gradient E[b p] + lam g, one value per
    (time step, node), with per-cell standard errors of the stochastic part."""

    values: np.ndarray  # (n_steps, n_cells)
    std_error: np.ndarray
    n_paths: int
    norm: float


def control_penalty(g: np.ndarray, spec: ProblemSpec, cost: CostWeights) -> float:
    g = _check_control(g, spec)
    return 0.5 * cost.lam * spacetime_inner(g, g, spec.dt, spec.grid)


def pathwise_cost(
    spec: ProblemSpec, path: PathTrajectory, g: np.ndarray, cost: CostWeights
) -> CostBreakdown:
    """Cost of a single realization (the expectation taken away)."""
    running_res = cost.running_residuals(path.states)
    # left-endpoint time sum over steps 0 .. n_steps-1, trapezoid weights in space
    run = 0.5 * cost.c_running * spec.dt * float(
        np.einsum("ni,i->", running_res[:-1] ** 2, spec.grid.quad_weights)
    )
    term_res = cost.terminal_residual(path.states[-1])
    term = 0.5 * cost.c_terminal * inner_l2(term_res, term_res, spec.grid)
    pen = control_penalty(g, spec, cost)
    return CostBreakdown(
        running=run,
        terminal=term,
        control_penalty=pen,
        total=run + term + pen,
        n_paths=1,
        std_error=0.0,
    )


# paths are simulated in fixed-size batches; the batch boundaries (and hence
# every floating-point reduction) are independent of the worker thread count
CHUNK_SIZE = 16


def _map_chunks(fn, seeds: Sequence[tuple], n_threads: int) -> list:
    chunks = [list(seeds[i : i + CHUNK_SIZE]) for i in range(0, len(seeds), CHUNK_SIZE)]
    if n_threads <= 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        return list(pool.map(fn, chunks))


def estimate_cost(
    spec: ProblemSpec,
    g: np.ndarray,
    cost: CostWeights,
    seeds: Sequence[tuple],
    n_threads: int = 1,
) -> CostBreakdown:
    if len(seeds) < 1:
        raise ValueError("need at least one path")
    g = _check_control(g, spec)
    w = spec.grid.quad_weights

    def chunk_costs(chunk):
        states = simulate_paths(spec, g, chunk)
        if cost.running_target is None:
            res = states
        else:
            res = states - cost.running_target[None, :, :]
        run = 0.5 * cost.c_running * spec.dt * np.einsum("pni,i->p", res[:, :-1] ** 2, w)
        term_res = cost.terminal_residual(states[:, -1])
        term = 0.5 * cost.c_terminal * np.einsum("pi,i->p", term_res**2, w)
        return run, term

    parts = _map_chunks(chunk_costs, seeds, n_threads)
    run = np.concatenate([p[0] for p in parts])
    term = np.concatenate([p[1] for p in parts])
    pen = control_penalty(g, spec, cost)
    totals = run + term + pen
    n = len(seeds)
    se = float(np.std(totals, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return CostBreakdown(
        running=float(run.mean()),
        terminal=float(term.mean()),
        control_penalty=pen,
        total=float(totals.mean()),
        n_paths=n,
        std_error=se,
    )


def estimate_gradient(
    spec: ProblemSpec,
    g: np.ndarray,
    cost: CostWeights,
    seeds: Sequence[tuple],
    n_threads: int = 1,
) -> GradientEstimate:
    """Monte Carlo gradient: simulate, solve the adjoint, average b times the
    pairing fields, then add lam g.  Path accumulation is in fixed chunk
    order, so the estimate does not depend on the thread schedule."""
    if len(seeds) < 1:
        raise ValueError("need at least one path")
    g = _check_control(g, spec)

    def chunk_sums(chunk):
        states = simulate_paths(spec, g, chunk)
        pairing = spec.b * solve_adjoint_batch(spec, states, cost)
        return pairing.sum(axis=0), (pairing**2).sum(axis=0)

    parts = _map_chunks(chunk_sums, seeds, n_threads)
    n = len(seeds)
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    mean = total / n
    if n > 1:
        var = np.maximum(total_sq - n * mean**2, 0.0) / (n - 1)
        se = np.sqrt(var / n)
    else:
        se = np.zeros_like(mean)
    values = mean + cost.lam * g
    norm = float(np.sqrt(spacetime_inner(values, values, spec.dt, spec.grid)))
    return GradientEstimate(values=values, std_error=se, n_paths=n, norm=norm)


def minimum_principle_residual(
    spec: ProblemSpec,
    g: np.ndarray,
    grad: GradientEstimate,
    test_controls: Sequence[np.ndarray],
) -> float:
    """min over test controls h of <grad, h - g>; non-negative (up to the
    statistical tolerance) at a constrained local minimum."""
    if len(test_controls) == 0:
        raise ValueError("need at least one test control")
    g = _check_control(g, spec)
    return min(
        spacetime_inner(grad.values, _check_control(h, spec) - g, spec.dt, spec.grid)
        for h in test_controls
    )
