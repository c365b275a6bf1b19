"""Command-line front end.

Subcommands:
  simulate   forward paths -> per-path trajectory CSVs + summary JSON
  gradcheck  adjoint-vs-finite-difference and duality verification -> report JSON
  optimize   full conjugate gradient run -> history JSONL + control CSV + summary

Exit codes: 0 ok, 2 bad configuration, 3 trajectory blowup, 4 check failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .adjoint import duality_gap
from .config import load_config
from .dynamics import BlowupError, simulate_path, zero_control
from .grids import spacetime_inner
from .io import write_field_csv, write_history_jsonl, write_json
from .noise import Purpose, SeedPolicy, stream_from_tuple
from .objective import estimate_cost, estimate_gradient
from .optimizer import optimize
from .scenarios import ConfigError

FD_TOLERANCE = 1e-6
DUALITY_TOLERANCE = 1e-10

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_CHECK = 4


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    scenario, policy = cfg.build()
    if args.seed is not None:
        policy = SeedPolicy(args.seed)
    spec = scenario.spec
    out = _out_dir(args.out)
    n_paths = args.paths
    g = zero_control(spec)
    seeds = policy.batch(0, n_paths, Purpose.FORWARD)
    t0 = time.perf_counter()
    files = []
    for i, seed_tuple in enumerate(seeds):
        path = simulate_path(spec, g, stream_from_tuple(seed_tuple), seed_tuple=seed_tuple)
        fname = out / f"path_{i:03d}.csv"
        write_field_csv(fname, spec.times, path.states, spec.grid, spec.dt, spec.n_steps)
        files.append(fname.name)
        if args.plot and i == 0:
            from .plots import plot_space_time

            plot_space_time(path.states, spec.times, spec.grid, out / "path_000.png",
                            title=f"{scenario.name} sample path")
    write_json(out / "summary.json", {
        "config": cfg.echo(),
        "run_seed": policy.run_seed,
        "seeds": [list(s) for s in seeds],
        "files": files,
        "blowup_count": 0,
    })
    # wall time goes to stdout, not into the summary, so reruns with the same
    # config and seed produce byte-identical output files
    print(f"simulate: {n_paths} path(s) in {time.perf_counter() - t0:.2f} s -> {out}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    cfg = load_config(args.config)
    scenario, policy = cfg.build()
    spec, cost, cg = scenario.spec, scenario.cost, scenario.cg
    g = zero_control(spec)
    eps = args.fd_step
    seeds = policy.batch(0, cg.n_paths_grad, Purpose.FORWARD)
    grad = estimate_gradient(spec, g, cost, seeds, n_threads=args.threads)

    dir_rng = stream_from_tuple((policy.run_seed, 0, 0, int(Purpose.EVALUATION)))
    fd_errors = []
    for _ in range(args.directions):
        h = dir_rng.standard_normal(spec.control_shape())
        h /= np.sqrt(spacetime_inner(h, h, spec.dt, spec.grid))
        adj_dd = spacetime_inner(grad.values, h, spec.dt, spec.grid)
        plus = estimate_cost(spec, g + eps * h, cost, seeds, n_threads=args.threads).total
        minus = estimate_cost(spec, g - eps * h, cost, seeds, n_threads=args.threads).total
        fd_dd = (plus - minus) / (2.0 * eps)
        fd_errors.append(abs(adj_dd - fd_dd) / max(abs(fd_dd), abs(adj_dd), 1e-10))

    gaps = []
    for seed_tuple in seeds[: min(5, len(seeds))]:
        path = simulate_path(spec, g, stream_from_tuple(seed_tuple), seed_tuple=seed_tuple)
        h = dir_rng.standard_normal(spec.control_shape())
        gaps.append(duality_gap(spec, path, cost, h,
                                mismatch_time_quadrature=args.mismatched_quadrature))

    report = {
        "config": cfg.echo(),
        "fd_step": eps,
        "directions": args.directions,
        "max_fd_rel_error": float(max(fd_errors)),
        "fd_tolerance": FD_TOLERANCE,
        "max_duality_gap": float(max(gaps)),
        "duality_tolerance": DUALITY_TOLERANCE,
    }
    ok = report["max_fd_rel_error"] <= FD_TOLERANCE and report["max_duality_gap"] <= DUALITY_TOLERANCE
    report["passed"] = ok
    if args.out:
        write_json(_out_dir(args.out) / "gradcheck.json", report)
    print(f"gradcheck: max FD error {report['max_fd_rel_error']:.3e} "
          f"(tol {FD_TOLERANCE}), max duality gap {report['max_duality_gap']:.3e} "
          f"(tol {DUALITY_TOLERANCE}) -> {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_optimize(args) -> int:
    cfg = load_config(args.config)
    scenario, policy = cfg.build()
    spec, cost, cg = scenario.spec, scenario.cost, scenario.cg
    out = _out_dir(args.out)
    t0 = time.perf_counter()
    g_best, state = optimize(spec, cost, None, cg, policy, n_threads=args.threads)
    write_history_jsonl(out / "history.jsonl", state.history)
    step_times = spec.times[:-1]
    write_field_csv(out / "control.csv", step_times, g_best, spec.grid, spec.dt, spec.n_steps)

    # held-out common-seed comparison of the zero control and the result
    heldout = policy.batch(1, cg.n_paths_eval, Purpose.EVALUATION)
    j0 = estimate_cost(spec, zero_control(spec), cost, heldout, n_threads=args.threads)
    j1 = estimate_cost(spec, g_best, cost, heldout, n_threads=args.threads)
    write_json(out / "summary.json", {
        "config": cfg.echo(),
        "iterations": state.iteration,
        "terminated_by_tolerance": state.terminated,
        "final_grad_norm": state.gradient.norm if state.gradient else None,
        "initial_cost": {"total": j0.total, "std_error": j0.std_error},
        "final_cost": {"total": j1.total, "std_error": j1.std_error},
    })
    if args.plot:
        from .plots import plot_history, plot_space_time

        plot_history(state.history, out / "history.png")
        plot_space_time(g_best, step_times, spec.grid, out / "control.png",
                        title=f"{scenario.name} optimized control", cbar_label="g")
        demo = simulate_path(spec, g_best, stream_from_tuple(heldout[0]), seed_tuple=heldout[0])
        plot_space_time(demo.states, spec.times, spec.grid, out / "controlled_path.png",
                        title=f"{scenario.name} controlled sample path")
    print(f"optimize: {state.iteration} iterations in {time.perf_counter() - t0:.1f} s, "
          f"cost {j0.total:.6g} -> {j1.total:.6g} on the held-out batch")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spdecontrol", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="simulate forward paths")
    p_sim.add_argument("config")
    p_sim.add_argument("--paths", type=int, default=1)
    p_sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_sim.add_argument("--out", default="out")
    p_sim.set_defaults(func=cmd_simulate)

    p_chk = sub.add_parser("gradcheck", help="verify the adjoint gradient")
    p_chk.add_argument("config")
    p_chk.add_argument("--directions", type=int, default=5)
    p_chk.add_argument("--fd-step", type=float, default=1e-4)
    p_chk.add_argument("--out", default=None)
    p_chk.add_argument("--mismatched-quadrature", action="store_true",
                       help=argparse.SUPPRESS)  # negative-control test hook
    p_chk.set_defaults(func=cmd_gradcheck)

    p_opt = sub.add_parser("optimize", help="run the conjugate gradient descent")
    p_opt.add_argument("config")
    p_opt.add_argument("--out", default="out")
    p_opt.set_defaults(func=cmd_optimize)

    for p in (p_sim, p_chk, p_opt):
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--no-plot", dest="plot", action="store_false")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowupError as exc:
        print(f"blowup: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
