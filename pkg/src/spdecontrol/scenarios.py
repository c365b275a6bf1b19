"""Preset control problems and their analysis helpers.

Three presets:
  wave_steering   bistable cubic reaction on [0,20], horizon 15; the running
                  target first pushes the front rightward at unit speed, then
                  reflects it for the second half of the horizon.
  unstable_state  f(u) = -u^3 + u^2 on [0,20], horizon 30, terminal cost only:
                  hold the state at the one-sidedly unstable rest state 0.
  sde_toy         zero-dimensional double-well-like potential; terminal cost
                  E[u_T^2]/2 with a closed-form adjoint for cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import ProblemSpec, cubic_quadratic, schloegl, sde_potential
from .grids import PointGrid, SpatialGrid
from .noise import CovarianceSpec, stream_from_tuple
from .objective import CostWeights
from .optimizer import CgConfig

SCENARIO_NAMES = ("wave_steering", "unstable_state", "sde_toy")

_OVERRIDE_KEYS = frozenset(
    {
        "sigma", "n_cells", "n_steps", "n_modes", "decay_exponent",
        "eta", "n_paths", "n_paths_grad", "n_paths_eval",
        "s0", "min_step", "max_iters", "beta_rule", "restart_every", "kappa",
        "c_running", "c_terminal", "lam",
    }
)


class ConfigError(ValueError):
    """Bad scenario name, unknown knob, or inconsistent configuration."""


@dataclass(frozen=True)
class Scenario:
    name: str
    overrides: dict
    spec: ProblemSpec
    cost: CostWeights
    cg: CgConfig


def _front_sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-(np.sqrt(2.0) / 2.0) * z))


def wave_reference_profile(t: float, x: np.ndarray, T: float) -> np.ndarray:
    """Rightward-moving front for t <= T/2, reflected afterwards; the two
    branches agree at t = T/2."""
    shift = t if t <= T / 2.0 else T - t
    return _front_sigmoid(x - shift - 5.0)


def _check_overrides(overrides: dict) -> dict:
    unknown = set(overrides) - _OVERRIDE_KEYS
    if unknown:
        raise ConfigError(f"unknown override keys: {sorted(unknown)}")
    return overrides


def build_scenario(name: str, overrides: dict | None = None) -> Scenario:
    ov = _check_overrides(dict(overrides or {}))
    if name not in SCENARIO_NAMES:
        raise ConfigError(f"unknown scenario {name!r}; choose from {SCENARIO_NAMES}")

    n_paths = int(ov.get("n_paths", 100))
    cg_kwargs = dict(
        n_paths_grad=int(ov.get("n_paths_grad", n_paths)),
        n_paths_eval=int(ov.get("n_paths_eval", n_paths)),
        s0=float(ov.get("s0", 1.0)),
        min_step=float(ov.get("min_step", 1e-4)),
        max_iters=int(ov.get("max_iters", 100)),
        beta_rule=ov.get("beta_rule", "norm_ratio"),
        restart_every=ov.get("restart_every"),
        kappa=ov.get("kappa"),
    )

    if name == "sde_toy":
        if "n_cells" in ov:
            raise ConfigError("sde_toy is zero-dimensional; n_cells is not a knob")
        if float(ov.get("c_running", 0.0)) != 0.0:
            raise ConfigError("sde_toy has a terminal cost only; c_running must be 0")
        n_steps = int(ov.get("n_steps", 1000))
        spec = ProblemSpec(
            grid=PointGrid(),
            T=1.0,
            n_steps=n_steps,
            reaction=sde_potential(),
            noise=CovarianceSpec(n_modes=0, decay_exponent=1.0,
                                 amplitude=float(ov.get("sigma", 1.0))),
            u0=np.zeros(1),
            zero_dimensional=True,
        )
        cost = CostWeights(c_terminal=float(ov.get("c_terminal", 1.0)),
                           lam=float(ov.get("lam", 0.0)))
        cg = CgConfig(eta=float(ov.get("eta", 1e-3)), **cg_kwargs)
        return Scenario(name=name, overrides=ov, spec=spec, cost=cost, cg=cg)

    grid = SpatialGrid(0.0, 20.0, int(ov.get("n_cells", 401)))
    noise = CovarianceSpec(
        n_modes=int(ov.get("n_modes", 32)),
        decay_exponent=float(ov.get("decay_exponent", 1.0)),
        amplitude=float(ov.get("sigma", 0.5)),
    )

    if name == "wave_steering":
        T = 15.0
        n_steps = int(ov.get("n_steps", 1500))
        spec = ProblemSpec(
            grid=grid, T=T, n_steps=n_steps, reaction=schloegl(1.0, 39.0 / 40.0),
            noise=noise, u0=_front_sigmoid(grid.nodes - 5.0),
        )
        times = spec.times
        target = np.stack([wave_reference_profile(t, grid.nodes, T) for t in times])
        cost = CostWeights(
            c_running=float(ov.get("c_running", 1.0)),
            c_terminal=float(ov.get("c_terminal", 0.0)),
            lam=float(ov.get("lam", 0.0)),
            running_target=target,
        )
        cg = CgConfig(eta=float(ov.get("eta", 0.05)), **cg_kwargs)
        return Scenario(name=name, overrides=ov, spec=spec, cost=cost, cg=cg)

    # unstable_state
    T = 30.0
    n_steps = int(ov.get("n_steps", 3000))
    spec = ProblemSpec(
        grid=grid, T=T, n_steps=n_steps, reaction=cubic_quadratic(),
        noise=noise, u0=np.zeros(grid.n_cells),
    )
    cost = CostWeights(
        c_running=float(ov.get("c_running", 0.0)),
        c_terminal=float(ov.get("c_terminal", 1.0)),
        lam=float(ov.get("lam", 0.0)),
    )
    cg = CgConfig(eta=float(ov.get("eta", 0.002)), **cg_kwargs)
    return Scenario(name=name, overrides=ov, spec=spec, cost=cost, cg=cg)


def track_wave_front(states: np.ndarray, grid: SpatialGrid, level: float) -> np.ndarray:
    """Per time step, the position of the rightmost crossing of u = level,
    linearly interpolated; NaN where the level is never crossed."""
    states = np.asarray(states, dtype=float)
    first = states[0]
    if not first.min() < level < first.max():
        raise ValueError("level must lie strictly between the initial field's min and max")
    x = grid.nodes
    positions = np.full(states.shape[0], np.nan)
    for row, u in enumerate(states):
        s = u - level
        crossings = np.nonzero(s[:-1] * s[1:] <= 0.0)[0]
        crossings = crossings[s[crossings] != s[crossings + 1]]
        if len(crossings) == 0:
            continue
        i = crossings[-1]
        frac = s[i] / (s[i] - s[i + 1])
        positions[row] = x[i] + grid.dx * frac
    return positions


def front_speed(times: np.ndarray, positions: np.ndarray) -> float:
    """Traveling-wave speed in the convention u(t, x) = u0(x + c t): the
    least-squares slope of front position over time, sign-flipped (a front
    moving rightward corresponds to negative c)."""
    mask = np.isfinite(positions)
    if mask.sum() < 2:
        raise ValueError("not enough tracked front positions to fit a speed")
    slope = np.polyfit(np.asarray(times)[mask], np.asarray(positions)[mask], 1)[0]
    return -float(slope)


def sde_gradient_positivity(
    n_paths: int,
    dt: float,
    t_probe: float,
    sigma: float = 1.0,
    T: float = 1.0,
    run_seed: int = 0,
) -> tuple[float, float]:
    """Monte Carlo estimate of the cost gradient of the zero-dimensional
    scenario at the zero control, evaluated at t_probe, using the closed-form
    adjoint u_T exp(int_t^T f'(u_s) ds) per path (left-endpoint quadrature).

    Strictly positive for sigma > 0, exactly zero for sigma = 0.
    """
    n_steps = int(round(T / dt))
    n_probe = int(round(t_probe / dt))
    if not 0 <= n_probe < n_steps:
        raise ValueError("t_probe must lie in [0, T)")
    model = sde_potential()
    if sigma == 0.0:
        return 0.0, 0.0
    rng = stream_from_tuple((run_seed, 0, 0, 1))
    u = np.zeros(n_paths)
    log_weight = np.zeros(n_paths)
    sqdt = np.sqrt(dt)
    for m in range(n_steps):
        if m >= n_probe:
            log_weight += dt * model.fprime(u)
        u = u + dt * model.f(u) + sigma * sqdt * rng.standard_normal(n_paths)
    samples = u * np.exp(log_weight)
    est = float(samples.mean())
    se = float(samples.std(ddof=1) / np.sqrt(n_paths))
    return est, se
