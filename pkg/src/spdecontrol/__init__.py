"""Open-loop optimal control of 1D stochastic reaction-diffusion equations:
forward SPDE simulation, pathwise discrete adjoints, Monte Carlo gradients,
and probabilistic nonlinear conjugate gradient descent."""

from .adjoint import AdjointTrajectory, duality_gap, solve_adjoint
from .config import RunConfig, load_config, parse_config
from .dynamics import (
    BlowupError,
    PathTrajectory,
    ProblemSpec,
    ReactionModel,
    clamp_control,
    control_l6_norm,
    cubic_quadratic,
    custom,
    schloegl,
    sde_potential,
    simulate_path,
    simulate_tangent,
    step_forward,
    zero_control,
)
from .grids import (
    PointGrid,
    SpatialGrid,
    TridiagonalSystem,
    apply_neumann_laplacian,
    implicit_diffusion_system,
    inner_l2,
    norm_l2,
    solve_tridiagonal,
    spacetime_inner,
    spacetime_norm,
)
from .noise import (
    CovarianceSpec,
    Purpose,
    SeedPolicy,
    sample_qwiener_increment,
    sample_scalar_increment,
    stream_from_tuple,
)
from .objective import (
    CostBreakdown,
    CostWeights,
    GradientEstimate,
    estimate_cost,
    estimate_gradient,
    minimum_principle_residual,
    pathwise_cost,
)
from .optimizer import CgConfig, CgState, cg_step, optimize
from .scenarios import (
    ConfigError,
    Scenario,
    build_scenario,
    front_speed,
    sde_gradient_positivity,
    track_wave_front,
    wave_reference_profile,
)

__version__ = "0.1.0"
