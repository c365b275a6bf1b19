"""Forward time stepping of the controlled reaction-diffusion state equation
and of its linearization in a control direction.

The scheme is semi-implicit Euler-Maruyama: implicit diffusion, explicit
reaction and noise.  The reaction is evaluated at the old state, which keeps
the tangent recursion exactly transposable in the adjoint module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from .grids import (
    PointGrid,
    SpatialGrid,
    TridiagonalSystem,
    implicit_diffusion_system,
    solve_tridiagonal,
)
from .noise import (
    CovarianceSpec,
    Purpose,
    cosine_eigenbasis,
    sample_qwiener_increment,
    sample_scalar_increment,
    stream_from_tuple,
)

BLOWUP_THRESHOLD = 1e6


class BlowupError(RuntimeError):
    """A trajectory left the finite range the moment bound promises for sane inputs."""

    def __init__(self, step: int, seed_tuple=None):
        self.step = step
        self.seed_tuple = seed_tuple
        detail = f" (seed tuple {seed_tuple})" if seed_tuple is not None else ""
        super().__init__(f"state blew up at time step {step}{detail}")


@dataclass(frozen=True)
class ReactionModel:
    """Pointwise reaction term f and its derivative; f(0) = 0 is required."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    fprime: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        if abs(float(self.f(np.zeros(1))[0])) > 1e-12:
            raise ValueError(f"reaction {self.name!r} violates f(0) = 0")


def schloegl(k: float, a: float) -> ReactionModel:
    """Bistable cubic f(u) = k u (u - 1)(a - u); stable states 0 and 1."""
    if k <= 0 or not 0 < a < 1:
        raise ValueError("need k > 0 and a in (0, 1)")
    return ReactionModel(
        name=f"schloegl(k={k}, a={a})",
        f=lambda u: k * u * (u - 1.0) * (a - u),
        fprime=lambda u: k * (-3.0 * u**2 + 2.0 * (a + 1.0) * u - a),
    )


def cubic_quadratic() -> ReactionModel:
    """f(u) = -u^3 + u^2: unstable state 0, stable state 1."""
    return ReactionModel(
        name="cubic_quadratic",
        f=lambda u: -(u**3) + u**2,
        fprime=lambda u: -3.0 * u**2 + 2.0 * u,
    )


def sde_potential() -> ReactionModel:
    """One-sided potential drift for the scalar SDE scenario:
    f(u) = u^2 / (2 (1 + u^2)) for u >= 0, 0 otherwise."""
    return ReactionModel(
        name="sde_potential",
        f=lambda u: np.where(u >= 0, u**2 / (2.0 * (1.0 + u**2)), 0.0),
        fprime=lambda u: np.where(u >= 0, u / (1.0 + u**2) ** 2, 0.0),
    )


def custom(name: str, f, fprime) -> ReactionModel:
    return ReactionModel(name=name, f=f, fprime=fprime)


@dataclass(frozen=True)
class ProblemSpec:
    """Everything needed to simulate one control problem at fixed resolution."""

    grid: SpatialGrid | PointGrid
    T: float
    n_steps: int
    reaction: ReactionModel
    noise: CovarianceSpec
    u0: np.ndarray
    b: float = 1.0
    zero_dimensional: bool = False

    def __post_init__(self):
        if self.n_steps < 1 or self.T <= 0:
            raise ValueError("need T > 0 and n_steps >= 1")
        u0 = np.asarray(self.u0, dtype=float)
        if u0.shape != (self.grid.n_cells,) or not np.all(np.isfinite(u0)):
            raise ValueError("u0 must be a finite field on the grid")
        object.__setattr__(self, "u0", u0)
        if self.zero_dimensional and not isinstance(self.grid, PointGrid):
            raise ValueError("zero-dimensional mode requires a PointGrid")
        if not self.zero_dimensional and isinstance(self.grid, PointGrid):
            raise ValueError("PointGrid requires zero-dimensional mode")

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    @property
    def sigma(self) -> float:
        return self.noise.amplitude

    def control_shape(self) -> tuple[int, int]:
        """Controls are piecewise constant in time: one field per step."""
        return (self.n_steps, self.grid.n_cells)

    def diffusion_system(self) -> TridiagonalSystem | None:
        if self.zero_dimensional:
            return None
        return implicit_diffusion_system(self.grid, self.dt)


@dataclass
class PathTrajectory:
    """One realization of the state over the full time grid."""

    states: np.ndarray  # (n_steps + 1, n_cells)
    seed_tuple: tuple | None = None


def zero_control(spec: ProblemSpec) -> np.ndarray:
    return np.zeros(spec.control_shape())


def _check_control(g: np.ndarray, spec: ProblemSpec) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.shape != spec.control_shape():
        raise ValueError(f"control has shape {g.shape}, expected {spec.control_shape()}")
    return g


def control_l6_norm(g: np.ndarray, spec: ProblemSpec) -> float:
    """Discrete L6([0,T] x domain) norm of a piecewise-constant control."""
    g = _check_control(g, spec)
    return float((spec.dt * (np.abs(g) ** 6) @ spec.grid.quad_weights).sum() ** (1.0 / 6.0))


def clamp_control(g: np.ndarray, kappa: float, spec: ProblemSpec) -> np.ndarray:
    """Rescale g into the L6 ball of radius kappa (no-op if already inside)."""
    norm = control_l6_norm(g, spec)
    if norm <= kappa or norm == 0.0:
        return g
    return g * (kappa / norm)


def step_forward(
    u_n: np.ndarray,
    g_n: np.ndarray,
    spec: ProblemSpec,
    dW: np.ndarray | float,
    sys: TridiagonalSystem | None = None,
) -> np.ndarray:
    """One semi-implicit step: (I - dt L) u_{n+1} = u_n + dt (f(u_n) + b g_n) + sigma dW."""
    dt = spec.dt
    rhs = u_n + dt * (spec.reaction.f(u_n) + spec.b * g_n) + spec.sigma * dW
    if spec.zero_dimensional:
        u_next = rhs
    else:
        if sys is None:
            sys = spec.diffusion_system()
        u_next = solve_tridiagonal(sys, rhs)
    if not np.all(np.isfinite(u_next)) or np.max(np.abs(u_next)) > BLOWUP_THRESHOLD:
        raise BlowupError(step=-1)
    return u_next


def draw_path_increments(spec: ProblemSpec, rng: np.random.Generator) -> np.ndarray:
    """All unscaled noise increments of one path, shape (n_steps, n_cells).

    Drawn as one block, which consumes the stream in exactly the same order
    as per-step sampling would, so a path is a pure function of its stream.
    With sigma = 0 nothing is drawn at all.
    """
    if spec.sigma == 0.0:
        return np.zeros((spec.n_steps, spec.grid.n_cells))
    if spec.zero_dimensional:
        return np.sqrt(spec.dt) * rng.standard_normal((spec.n_steps, 1))
    if spec.noise.n_modes == 0:
        return np.zeros((spec.n_steps, spec.grid.n_cells))
    xi = rng.standard_normal((spec.n_steps, spec.noise.n_modes))
    basis = cosine_eigenbasis(spec.noise, spec.grid)
    return (xi * np.sqrt(spec.dt * spec.noise.eigenvalues)) @ basis


def simulate_paths(
    spec: ProblemSpec,
    g: np.ndarray,
    seed_tuples: list[tuple],
) -> np.ndarray:
    """Forward trajectories for a batch of noise realizations, shape
    (n_paths, n_steps + 1, n_cells).

    Each path consumes only its own stream, so the batch result equals the
    stack of single-path simulations; the diffusion solve is shared across
    the batch (same factorization, multi-RHS solve).
    """
    g = _check_control(g, spec)
    n_paths = len(seed_tuples)
    if n_paths == 0:
        raise ValueError("need at least one path")
    dW = np.stack([draw_path_increments(spec, stream_from_tuple(s)) for s in seed_tuples])
    states = np.empty((n_paths, spec.n_steps + 1, spec.grid.n_cells))
    states[:, 0] = spec.u0
    sys = spec.diffusion_system()
    ab = None if sys is None else sys.banded()
    dt = spec.dt
    u = states[:, 0]
    for n in range(spec.n_steps):
        rhs = u + dt * (spec.reaction.f(u) + spec.b * g[n]) + spec.sigma * dW[:, n]
        u = rhs if ab is None else solve_banded((1, 1), ab, rhs.T).T
        bad = ~np.isfinite(u).all(axis=1) | (np.abs(u).max(axis=1) > BLOWUP_THRESHOLD)
        if bad.any():
            raise BlowupError(step=n + 1, seed_tuple=seed_tuples[int(np.argmax(bad))])
        states[:, n + 1] = u
    return states


def simulate_path(
    spec: ProblemSpec,
    g: np.ndarray,
    rng: np.random.Generator,
    seed_tuple: tuple | None = None,
) -> PathTrajectory:
    """Full forward trajectory for one noise realization.

    Deterministic given the stream: increments are drawn in step order.  With
    sigma = 0 no randomness is consumed and the path is a pure function of
    (spec, g).
    """
    g = _check_control(g, spec)
    states = np.empty((spec.n_steps + 1, spec.grid.n_cells))
    states[0] = spec.u0
    sys = spec.diffusion_system()
    dW = draw_path_increments(spec, rng)
    u = spec.u0
    for n in range(spec.n_steps):
        try:
            u = step_forward(u, g[n], spec, dW[n], sys=sys)
        except (BlowupError, FloatingPointError):
            raise BlowupError(step=n + 1, seed_tuple=seed_tuple) from None
        states[n + 1] = u
    return PathTrajectory(states=states, seed_tuple=seed_tuple)


def simulate_tangent(spec: ProblemSpec, base: PathTrajectory, h: np.ndarray) -> PathTrajectory:
    """Linearized dynamics along a base path: y_0 = 0 and
    (I - dt L) y_{n+1} = y_n + dt (f'(u_n) y_n + b h_n).  Linear in h."""
    h = _check_control(h, spec)
    if base.states.shape != (spec.n_steps + 1, spec.grid.n_cells):
        raise ValueError("base trajectory does not match the spec resolution")
    states = np.zeros((spec.n_steps + 1, spec.grid.n_cells))
    sys = spec.diffusion_system()
    y = states[0]
    dt = spec.dt
    for n in range(spec.n_steps):
        rhs = y + dt * (spec.reaction.fprime(base.states[n]) * y + spec.b * h[n])
        y = rhs if spec.zero_dimensional else solve_tridiagonal(sys, rhs)
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > BLOWUP_THRESHOLD:
            raise BlowupError(step=n + 1, seed_tuple=base.seed_tuple)
        states[n + 1] = y
    return PathTrajectory(states=states, seed_tuple=base.seed_tuple)
