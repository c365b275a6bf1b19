"""Uniform 1D grids with Neumann boundaries and the discrete operators built on them.

The grid is node-centered and includes both boundary nodes.  The Laplacian
uses mirrored ghost values, which makes it self-adjoint with respect to the
trapezoid quadrature weights; that symmetry is what the adjoint module's
exact duality test relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform node-centered grid on [x_min, x_max] with n_cells nodes."""

    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self):
        if self.n_cells < 3:
            raise ValueError(f"need at least 3 nodes, got {self.n_cells}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_cells - 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_cells)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def quad_weights(self) -> np.ndarray:
        """Trapezoid quadrature weights, one per node."""
        w = np.full(self.n_cells, self.dx)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w


@dataclass(frozen=True)
class PointGrid:
    """Degenerate single-node 'grid' for the zero-dimensional (SDE) mode.

    Quadrature weight is 1, so discrete inner products reduce to plain
    scalar products and the cost functional has no |domain| factor.
    """

    n_cells: int = 1

    @property
    def quad_weights(self) -> np.ndarray:
        return np.ones(1)

    @property
    def nodes(self) -> np.ndarray:
        return np.zeros(1)


@dataclass
class TridiagonalSystem:
    """Tridiagonal matrix in banded storage; lower[0] and upper[-1] are unused."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    @property
    def n(self) -> int:
        return len(self.diag)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.upper[:-1] * v[1:]
        out[1:] += self.lower[1:] * v[:-1]
        return out

    def banded(self) -> np.ndarray:
        ab = np.zeros((3, self.n))
        ab[0, 1:] = self.upper[:-1]
        ab[1] = self.diag
        ab[2, :-1] = self.lower[1:]
        return ab


def _check_field(u: np.ndarray, grid) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.n_cells,):
        raise ValueError(f"field has shape {u.shape}, grid expects ({grid.n_cells},)")
    return u


def apply_neumann_laplacian(u: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Second-order Laplacian with mirrored-ghost Neumann closure.

    Boundary rows are (2u_1 - 2u_0)/dx^2 and (2u_{n-2} - 2u_{n-1})/dx^2,
    from the ghost values u_{-1} = u_1 and u_n = u_{n-2}.
    """
    u = _check_field(u, grid)
    inv_dx2 = 1.0 / grid.dx**2
    out = np.empty_like(u)
    out[1:-1] = (u[:-2] - 2.0 * u[1:-1] + u[2:]) * inv_dx2
    out[0] = 2.0 * (u[1] - u[0]) * inv_dx2
    out[-1] = 2.0 * (u[-2] - u[-1]) * inv_dx2
    return out


def implicit_diffusion_system(grid: SpatialGrid, dt: float) -> TridiagonalSystem:
    """The matrix I - dt * Laplacian used by the semi-implicit time steppers.

    Strictly diagonally dominant for dt > 0, so the solve needs no pivoting.
    """
    n = grid.n_cells
    r = dt / grid.dx**2
    lower = np.full(n, -r)
    upper = np.full(n, -r)
    diag = np.full(n, 1.0 + 2.0 * r)
    upper[0] = -2.0 * r
    lower[-1] = -2.0 * r
    return TridiagonalSystem(lower=lower, diag=diag, upper=upper)


def solve_tridiagonal(sys: TridiagonalSystem, rhs: np.ndarray) -> np.ndarray:
    """Solve sys @ v = rhs.  rhs may carry extra trailing axes (batched solves)."""
    v = solve_banded((1, 1), sys.banded(), np.asarray(rhs, dtype=float))
    if not np.all(np.isfinite(v)):
        raise FloatingPointError("tridiagonal solve produced non-finite values")
    return v


def inner_l2(u: np.ndarray, v: np.ndarray, grid) -> float:
    """Discrete L2(domain) pairing with trapezoid weights."""
    u = _check_field(u, grid)
    v = _check_field(v, grid)
    return float(np.dot(grid.quad_weights, u * v))


def norm_l2(u: np.ndarray, grid) -> float:
    return float(np.sqrt(inner_l2(u, u, grid)))


def spacetime_norm(fields: np.ndarray, dt: float, grid, quadrature: str = "trapezoid") -> float:
    """Discrete L2([0,T] x domain) norm of a time-indexed stack of fields.

    'trapezoid' treats the rows as node samples spanning the full interval;
    'left' treats each row as constant on its own step of length dt (the
    weighting that matches the solver recursions and gradient pairing).
    """
    fields = np.asarray(fields, dtype=float)
    if fields.ndim != 2 or fields.shape[0] == 0:
        raise ValueError("expected a non-empty (n_times, n_cells) stack")
    sq = (fields**2) @ grid.quad_weights
    if quadrature == "left":
        return float(np.sqrt(dt * sq.sum()))
    if quadrature == "trapezoid":
        w = np.full(len(sq), dt)
        w[0] *= 0.5
        w[-1] *= 0.5
        return float(np.sqrt(np.dot(w, sq)))
    raise ValueError(f"unknown quadrature {quadrature!r}")


def spacetime_inner(a: np.ndarray, b: np.ndarray, dt: float, grid) -> float:
    """Left-endpoint space-time pairing sum_n dt * <a_n, b_n>; exact for
    piecewise-constant-in-time fields such as controls and gradients."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(dt * np.einsum("ni,i,ni->", a, grid.quad_weights, b))
