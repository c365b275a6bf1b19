"""Q-Wiener increments via truncated Karhunen-Loeve expansion, plus scalar
Brownian increments, under a counter-style reproducible seeding contract."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache

import numpy as np

from .grids import SpatialGrid


class Purpose(IntEnum):
    FORWARD = 0
    EVALUATION = 1


@dataclass(frozen=True)
class CovarianceSpec:
    """Truncated covariance: eigenvalues q_k = (1 + k^2)^(-s) on the Neumann
    cosine basis, scaled by the scalar noise amplitude sigma in the solver."""

    n_modes: int = 32
    decay_exponent: float = 1.0
    amplitude: float = 0.5

    def __post_init__(self):
        if self.decay_exponent <= 0.5:
            raise ValueError("decay exponent must exceed 1/2")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        if self.n_modes < 0:
            raise ValueError("n_modes must be non-negative")

    @property
    def eigenvalues(self) -> np.ndarray:
        k = np.arange(self.n_modes)
        return (1.0 + k**2) ** (-self.decay_exponent)


@dataclass(frozen=True)
class SeedPolicy:
    """Root seed for a run.  Each (iteration, path_index, purpose) tuple maps
    to an independent stream; replaying a tuple reproduces its draws exactly,
    regardless of the order in which streams are consumed."""

    run_seed: int

    def stream(self, iteration: int, path_index: int, purpose: Purpose) -> np.random.Generator:
        key = (self.run_seed, iteration, path_index, int(purpose))
        return np.random.default_rng(np.random.SeedSequence(key))

    def batch(self, iteration: int, n_paths: int, purpose: Purpose) -> list[tuple]:
        return [(self.run_seed, iteration, i, int(purpose)) for i in range(n_paths)]


def stream_from_tuple(seed_tuple: tuple) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(tuple(int(v) for v in seed_tuple)))


@lru_cache(maxsize=32)
def cosine_eigenbasis(spec: CovarianceSpec, grid: SpatialGrid) -> np.ndarray:
    """Neumann eigenfunctions sampled on the nodes, shape (n_modes, n_cells).

    e_0 = 1/sqrt(|domain|), e_k(x) = sqrt(2/|domain|) cos(k pi (x - x_min)/|domain|).
    """
    length = grid.length
    x = grid.nodes - grid.x_min
    k = np.arange(spec.n_modes)[:, None]
    basis = np.sqrt(2.0 / length) * np.cos(k * np.pi * x[None, :] / length)
    if spec.n_modes > 0:
        basis[0] = 1.0 / np.sqrt(length)
    basis.setflags(write=False)
    return basis


def increment_stddev(spec: CovarianceSpec, grid: SpatialGrid, dt: float) -> np.ndarray:
    """Per-node standard deviation of one unscaled increment (analytic)."""
    basis = cosine_eigenbasis(spec, grid)
    var = dt * spec.eigenvalues @ basis**2
    return np.sqrt(var)


def sample_qwiener_increment(
    spec: CovarianceSpec, grid: SpatialGrid, dt: float, rng: np.random.Generator
) -> np.ndarray:
    """One increment dW(x_i) = sum_k sqrt(q_k dt) xi_k e_k(x_i), xi_k iid N(0,1).

    Amplitude scaling by sigma is the solver's job, not done here.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if spec.n_modes == 0:
        return np.zeros(grid.n_cells)
    xi = rng.standard_normal(spec.n_modes)
    basis = cosine_eigenbasis(spec, grid)
    return np.sqrt(dt * spec.eigenvalues) * xi @ basis


def sample_scalar_increment(dt: float, rng: np.random.Generator) -> float:
    """N(0, dt) Brownian increment for the zero-dimensional mode."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if dt == 0:
        return 0.0
    return float(np.sqrt(dt) * rng.standard_normal())
