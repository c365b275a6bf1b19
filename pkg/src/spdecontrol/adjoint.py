"""Pathwise backward adjoint solve.

The backward recursion is the algebraic transpose of the forward tangent
scheme under the trapezoid-weighted inner product, so the duality identity
pairing the adjoint with a control perturbation holds to roundoff for every
single path, at any resolution.  With M = I - dt L and D_n = diag(f'(u_n)):

    p_N = c_T (u_N - u^T)
    q_{n+1} = M^{-1} p_{n+1}          (M is self-adjoint, same solve as forward)
    p_n = (I + dt D_n) q_{n+1} + dt c_running (u_n - target_n)

The field paired with the control on step n is q_{n+1}; all dt-weighted time
sums are left-endpoint to match the recursions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.linalg import solve_banded

from .dynamics import BlowupError, PathTrajectory, ProblemSpec, simulate_tangent
from .grids import inner_l2, solve_tridiagonal, spacetime_inner

if TYPE_CHECKING:
    from .objective import CostWeights


@dataclass
class AdjointTrajectory:
    """Backward costate path plus the per-step fields the gradient pairs with."""

    costates: np.ndarray  # (n_steps + 1, n_cells), p_0 .. p_N
    pairing_states: np.ndarray  # (n_steps, n_cells), row n holds q_{n+1}
    seed_tuple: tuple | None = None


def solve_adjoint(spec: ProblemSpec, path: PathTrajectory, cost: "CostWeights") -> AdjointTrajectory:
    n_steps, n_cells = spec.n_steps, spec.grid.n_cells
    if path.states.shape != (n_steps + 1, n_cells):
        raise ValueError("trajectory does not match the spec resolution")
    if not np.all(np.isfinite(path.states)):
        raise BlowupError(step=-1, seed_tuple=path.seed_tuple)

    running = cost.running_residuals(path.states)
    terminal = cost.terminal_residual(path.states[-1])
    dt = spec.dt
    sys = spec.diffusion_system()

    costates = np.empty((n_steps + 1, n_cells))
    pairing = np.empty((n_steps, n_cells))
    p = cost.c_terminal * terminal
    costates[-1] = p
    for n in range(n_steps - 1, -1, -1):
        q = p if spec.zero_dimensional else solve_tridiagonal(sys, p)
        pairing[n] = q
        p = q + dt * (spec.reaction.fprime(path.states[n]) * q + cost.c_running * running[n])
        costates[n] = p
        if not np.all(np.isfinite(p)):
            raise BlowupError(step=n, seed_tuple=path.seed_tuple)
    return AdjointTrajectory(costates=costates, pairing_states=pairing, seed_tuple=path.seed_tuple)


def solve_adjoint_batch(spec: ProblemSpec, states: np.ndarray, cost: "CostWeights") -> np.ndarray:
    """Gradient pairing fields for a batch of trajectories, shape
    (n_paths, n_steps, n_cells); row [k, n] is q_{n+1} of path k.

    Same recursion as solve_adjoint with a shared multi-RHS diffusion solve;
    results equal the per-path solves exactly.
    """
    n_paths, n_rows, n_cells = states.shape
    if n_rows != spec.n_steps + 1 or n_cells != spec.grid.n_cells:
        raise ValueError("trajectory batch does not match the spec resolution")
    dt = spec.dt
    sys = spec.diffusion_system()
    ab = None if sys is None else sys.banded()
    target = cost.running_target
    pairing = np.empty((n_paths, spec.n_steps, n_cells))
    p = cost.c_terminal * cost.terminal_residual(states[:, -1])
    for n in range(spec.n_steps - 1, -1, -1):
        q = p if ab is None else solve_banded((1, 1), ab, p.T).T
        pairing[:, n] = q
        residual = states[:, n] if target is None else states[:, n] - target[n]
        p = q + dt * (spec.reaction.fprime(states[:, n]) * q + cost.c_running * residual)
        if not np.all(np.isfinite(p)):
            raise BlowupError(step=n)
    return pairing


def duality_gap(
    spec: ProblemSpec,
    path: PathTrajectory,
    cost: "CostWeights",
    h: np.ndarray,
    mismatch_time_quadrature: bool = False,
) -> float:
    """Relative gap between the adjoint pairing <b p, h> and the tangent form
    of the cost derivative.  Zero to roundoff by construction.

    mismatch_time_quadrature is a test hook: it evaluates the tangent side
    with trapezoid time weights instead of the recursion-matched left-endpoint
    weights, which breaks the identity by O(dt).
    """
    adj = solve_adjoint(spec, path, cost)
    lhs = spacetime_inner(spec.b * adj.pairing_states, np.asarray(h, dtype=float), spec.dt, spec.grid)

    tangent = simulate_tangent(spec, path, h)
    running = cost.running_residuals(path.states)
    weights = np.full(spec.n_steps, spec.dt)
    if mismatch_time_quadrature:
        weights[0] *= 0.5
        weights[-1] *= 0.5
    rhs = sum(
        w * cost.c_running * inner_l2(running[n], tangent.states[n], spec.grid)
        for n, w in enumerate(weights)
    )
    rhs += cost.c_terminal * inner_l2(
        cost.terminal_residual(path.states[-1]), tangent.states[-1], spec.grid
    )
    return abs(lhs - rhs) / (1.0 + abs(lhs))
