"""Randomized property tests for the algebraic identities the solvers rely on."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spdecontrol.grids import (
    SpatialGrid,
    TridiagonalSystem,
    apply_neumann_laplacian,
    implicit_diffusion_system,
    inner_l2,
    solve_tridiagonal,
)

fields = arrays(
    np.float64, 17,
    elements=st.floats(min_value=-100.0, max_value=100.0, allow_nan=False),
)

GRID = SpatialGrid(0.0, 4.0, 17)


@settings(max_examples=50, deadline=None)
@given(u=fields, v=fields)
def test_laplacian_symmetric_under_trapezoid_weights(u, v):
    lhs = inner_l2(apply_neumann_laplacian(u, GRID), v, GRID)
    rhs = inner_l2(u, apply_neumann_laplacian(v, GRID), GRID)
    scale = 1.0 + abs(lhs) + abs(rhs)
    assert abs(lhs - rhs) / scale < 1e-9


@settings(max_examples=50, deadline=None)
@given(u=fields, dt=st.floats(min_value=1e-4, max_value=1.0))
def test_implicit_solve_inverts_the_system(u, dt):
    sys = implicit_diffusion_system(GRID, dt)
    back = solve_tridiagonal(sys, sys.matvec(u.copy()))
    assert np.max(np.abs(back - u)) <= 1e-9 * (1.0 + np.max(np.abs(u)))


@settings(max_examples=50, deadline=None)
@given(
    rhs=fields,
    lower=fields,
    upper=fields,
    bump=arrays(np.float64, 17,
                elements=st.floats(min_value=0.1, max_value=10.0, allow_nan=False)),
)
def test_dominant_tridiagonal_residual_small(rhs, lower, upper, bump):
    diag = np.abs(lower) + np.abs(upper) + bump
    sys = TridiagonalSystem(lower=lower, diag=diag, upper=upper)
    v = solve_tridiagonal(sys, rhs)
    res = np.max(np.abs(sys.matvec(v.copy()) - rhs))
    assert res <= 1e-8 * (1.0 + np.max(np.abs(rhs)))
