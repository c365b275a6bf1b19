"""Probabilistic nonlinear conjugate gradient descent.

Per outer iteration: estimate the gradient on a fresh Monte Carlo batch,
form the direction d_n = -grad + beta_n d_{n-1} with beta_n the ratio of
successive gradient norms (beta_1 = 0), then step-halving line search on a
fixed common-random-numbers evaluation batch.  When the step drops below the
floor the candidate is accepted anyway; an accepted step resets to the
initial step size.  Stops when the gradient norm falls under eta.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import ProblemSpec, clamp_control, zero_control
from .noise import Purpose, SeedPolicy
from .objective import CostWeights, GradientEstimate, estimate_cost, estimate_gradient

MAX_HALVINGS = 50

BETA_RULES = ("norm_ratio", "fletcher_reeves_squared")


@dataclass(frozen=True)
class CgConfig:
    s0: float = 1.0
    eta: float = 1e-3
    min_step: float = 1e-4
    max_iters: int = 100
    n_paths_grad: int = 100
    n_paths_eval: int = 100
    beta_rule: str = "norm_ratio"
    restart_every: int | None = None
    kappa: float | None = None  # optional L6-ball radius for the control

    def __post_init__(self):
        if self.s0 <= 0 or self.eta <= 0 or self.min_step <= 0:
            raise ValueError("s0, eta, min_step must be positive")
        if self.min_step >= self.s0:
            raise ValueError("min_step must be below s0")
        if self.beta_rule not in BETA_RULES:
            raise ValueError(f"beta_rule must be one of {BETA_RULES}")


@dataclass
class CgState:
    g: np.ndarray
    iteration: int = 0
    gradient: GradientEstimate | None = None
    prev_grad_norm: float | None = None
    direction: np.ndarray | None = None
    step: float = 0.0
    last_cost: float | None = None
    history: list = field(default_factory=list)
    terminated: bool = False


def _beta(config: CgConfig, norm: float, prev_norm: float | None, iteration: int) -> float:
    if prev_norm is None or prev_norm == 0.0:
        return 0.0
    if config.restart_every is not None and iteration % config.restart_every == 0:
        return 0.0
    ratio = norm / prev_norm
    return ratio**2 if config.beta_rule == "fletcher_reeves_squared" else ratio


def cg_step(
    state: CgState,
    spec: ProblemSpec,
    cost: CostWeights,
    config: CgConfig,
    policy: SeedPolicy,
    n_threads: int = 1,
) -> CgState:
    """One outer iteration; returns the updated state (input state untouched
    except for the shared history list)."""
    n = state.iteration
    grad_seeds = policy.batch(n, config.n_paths_grad, Purpose.FORWARD)
    grad = estimate_gradient(spec, state.g, cost, grad_seeds, n_threads=n_threads)

    if grad.norm < config.eta:
        state.gradient = grad
        state.terminated = True
        state.history.append(
            dict(iteration=n, cost=state.last_cost, std_error=0.0, grad_norm=grad.norm,
                 beta=0.0, step=0.0, accepted=False, forced=False)
        )
        return state

    beta = _beta(config, grad.norm, state.prev_grad_norm, n)
    direction = -grad.values
    if beta > 0.0 and state.direction is not None:
        direction = direction + beta * state.direction

    # line search on a run-wide frozen evaluation batch (common random numbers)
    eval_seeds = policy.batch(0, config.n_paths_eval, Purpose.EVALUATION)
    incumbent = estimate_cost(spec, state.g, cost, eval_seeds, n_threads=n_threads)
    s = config.s0
    accepted = False
    forced = False
    for _ in range(MAX_HALVINGS):
        candidate = state.g + s * direction
        if config.kappa is not None:
            candidate = clamp_control(candidate, config.kappa, spec)
        trial = estimate_cost(spec, candidate, cost, eval_seeds, n_threads=n_threads)
        if trial.total < incumbent.total:
            accepted = True
            break
        s *= 0.5
        if s < config.min_step:
            forced = True
            break
    else:
        raise RuntimeError("line search exceeded the halving budget")
    if forced:
        candidate = state.g + s * direction
        if config.kappa is not None:
            candidate = clamp_control(candidate, config.kappa, spec)
        trial = estimate_cost(spec, candidate, cost, eval_seeds, n_threads=n_threads)

    state.history.append(
        dict(iteration=n, cost=trial.total, std_error=trial.std_error, grad_norm=grad.norm,
             beta=beta, step=s, accepted=accepted, forced=forced)
    )
    return CgState(
        g=candidate,
        iteration=n + 1,
        gradient=grad,
        prev_grad_norm=grad.norm,
        direction=direction,
        step=s,
        last_cost=trial.total,
        history=state.history,
        terminated=False,
    )


def optimize(
    spec: ProblemSpec,
    cost: CostWeights,
    g0: np.ndarray | None,
    config: CgConfig,
    policy: SeedPolicy,
    n_threads: int = 1,
) -> tuple[np.ndarray, CgState]:
    """Run the descent from g0 (zero control if None); returns the accepted
    control with the lowest evaluation-batch cost and the final state."""
    state = CgState(g=zero_control(spec) if g0 is None else np.array(g0, dtype=float))
    best_g = state.g
    best_cost = np.inf
    for _ in range(config.max_iters):
        state = cg_step(state, spec, cost, config, policy, n_threads=n_threads)
        if state.terminated:
            break
        if state.last_cost is not None and state.last_cost < best_cost:
            best_cost = state.last_cost
            best_g = state.g
    return best_g, state
