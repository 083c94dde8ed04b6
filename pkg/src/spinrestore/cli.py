"""Command-line entry points.

Subcommands: solve, sweep-tau, sweep-n, verify, plot.  All outputs are
deterministic functions of (config, seed); the parallelism degree never
changes results.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .chain import ChainSpec, ControlSchedule, build_couplings
from .config import ConfigError, ExperimentConfig, load_config
from .metrics import sweep_n, sweep_tau
from .propagator import EvolutionModel, compose_schedule
from .report import (
    ReportError,
    render_csv,
    solution_set_payload,
    write_amplitude_extrema_csv,
    write_json,
    write_sweep_n_csv,
    write_sweep_tau_csv,
)
from .solver import SolveProblem, multi_start


def _add_common(p):
    p.add_argument("--config", required=True, help="config file path or preset name")
    p.add_argument("--seed", type=int, default=None, help="override solver seed")
    p.add_argument("--jobs", type=int, default=None, help="parallel workers")
    p.add_argument("--out", default=None, help="override output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinrestore")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("solve", "sweep-tau", "sweep-n", "verify"):
        _add_common(sub.add_parser(name))
    pp = sub.add_parser("plot")
    pp.add_argument("--input", required=True, help="CSV file to render")
    pp.add_argument("--output", default=None, help="SVG output path")
    pp.add_argument("--logy", action="store_true", help="logarithmic y axis")
    return ap


def _setup(args) -> tuple[ExperimentConfig, Path, int]:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    out = Path(args.out if args.out is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    return cfg, out, jobs


def _problem(cfg: ExperimentConfig, model: EvolutionModel, tau_reg: float) -> SolveProblem:
    coupling = build_couplings(cfg.chain)
    return SolveProblem(
        spec=cfg.chain,
        coupling=coupling,
        model=model,
        tau_reg=tau_reg,
        k_omega=cfg.k_omega,
        seed=cfg.seed,
        n_starts=cfg.n_starts,
        tol_root=cfg.tol_root,
        max_iters=cfg.max_iters,
    )


def cmd_solve(args) -> int:
    cfg, out, jobs = _setup(args)
    if cfg.tau_reg is None:
        print("solve: config must set sweep.tau_reg", file=sys.stderr)
        return 2
    any_converged = False
    for model in cfg.variants():
        problem = _problem(cfg, model, cfg.tau_reg)
        sols = multi_start(problem, jobs=jobs)
        label = model.label()
        write_json(solution_set_payload(cfg.source_text, sols), out / f"solutions_{label}.json")
        write_amplitude_extrema_csv(sols, out / f"amplitudes_{label}.csv")
        print(f"{label}: {sols.converged_count}/{sols.n_starts} converged")
        any_converged |= sols.converged_count > 0
    if not any_converged:
        print("solve: no start converged for any model", file=sys.stderr)
        return 1
    return 0


def cmd_sweep_tau(args) -> int:
    cfg, out, jobs = _setup(args)
    feasible = False
    for model in cfg.variants():
        problem = _problem(cfg, model, 0.0)
        res = sweep_tau(problem, cfg.resolved_horizon(), step=cfg.grid_step, jobs=jobs)
        label = model.label()
        csv_path = out / f"sweep_tau_{label}.csv"
        write_sweep_tau_csv(res.points, csv_path)
        if "svg" in cfg.formats:
            render_csv(csv_path, csv_path.with_suffix(".svg"))
        tau0 = "none" if res.tau_0 is None else f"{res.tau_0:g}"
        print(f"{label}: lambda_opt={res.lambda_opt:.6g} tau_0={tau0}")
        feasible |= res.tau_0 is not None
    if not feasible:
        print("sweep-tau: every grid point infeasible", file=sys.stderr)
        return 1
    return 0


def cmd_sweep_n(args) -> int:
    cfg, out, jobs = _setup(args)
    if not cfg.n_list:
        print("sweep-n: config must set sweep.n_list", file=sys.stderr)
        return 2
    feasible = False
    for kind in cfg.model_kinds:
        if kind == "pulse":
            models = [EvolutionModel("pulse", eps_tilde=cfg.eps_tildes[0])]
        elif kind == "trotter":
            models = [EvolutionModel("trotter", n=n) for n in cfg.trotter_ns]
        else:
            models = [EvolutionModel("exact")]
        for model in models:
            problem = _problem(cfg, model, 0.0)
            rows = sweep_n(
                problem,
                cfg.n_list,
                cfg.horizon_factor,
                step=cfg.grid_step,
                eps_list=cfg.eps_tildes if kind == "pulse" else None,
                jobs=jobs,
            )
            label = kind if kind == "pulse" else model.label()
            csv_path = out / f"sweep_n_{label}.csv"
            write_sweep_n_csv(rows, csv_path)
            if "svg" in cfg.formats:
                render_csv(csv_path, csv_path.with_suffix(".svg"))
            feasible |= any(r.tau_0 is not None for r in rows)
    if not feasible:
        print("sweep-n: no feasible length", file=sys.stderr)
        return 1
    return 0


def cmd_verify(args) -> int:
    from . import oracle
    from .propagator import compose_schedule_exact
    from .restore import embed_sender_state, receiver_density

    cfg, _, _ = _setup(args)
    spec = cfg.chain
    if spec.n_total > oracle.MAX_SITES:
        print(f"verify: requires n_total <= {oracle.MAX_SITES}", file=sys.stderr)
        return 2
    coupling = build_couplings(spec)
    rng = np.random.default_rng(cfg.seed)
    failures = 0

    def check(name, value, tol):
        nonlocal failures
        ok = value < tol
        print(f"{'PASS' if ok else 'FAIL'} {name}: {value:.3e} (tol {tol:g})")
        failures += 0 if ok else 1

    for trial in range(3):
        angles = rng.uniform(-np.pi, np.pi, size=(cfg.k_omega, spec.n_ext_receiver - 1))
        schedule = ControlSchedule(cfg.k_omega, float(rng.uniform(1.0, 10.0)), angles)
        u_full = oracle.full_propagate_schedule(spec, coupling, schedule)
        check(
            f"unitarity[{trial}]",
            float(np.max(np.abs(u_full @ u_full.conj().T - np.eye(u_full.shape[0])))),
            1e-10,
        )
        vac = 2 ** spec.n_total - 1  # all spins down
        check(f"vacuum_amplitude[{trial}]", abs(u_full[vac, vac] - 1.0), 1e-12)
        u1 = compose_schedule_exact(spec, coupling, schedule, EvolutionModel("exact")).u1
        block = oracle.one_excitation_block(u_full, spec.n_total)
        check(f"one_excitation_block[{trial}]", float(np.max(np.abs(block - u1))), 1e-10)
        rho_s = _random_sender_state(rng, spec.n_sender)
        dev = oracle.t_tensor_check(spec, coupling, schedule, [rho_s])
        check(f"transfer_tensor[{trial}]", dev, 1e-10)
    if failures:
        print(f"verify: {failures} check(s) failed", file=sys.stderr)
        return 1
    return 0


def _random_sender_state(rng, ns: int) -> np.ndarray:
    a = rng.normal(size=(ns + 1, ns + 1)) + 1j * rng.normal(size=(ns + 1, ns + 1))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def cmd_plot(args) -> int:
    src = Path(args.input)
    dst = Path(args.output) if args.output else src.with_suffix(".svg")
    try:
        render_csv(src, dst, logy=args.logy)
    except (ReportError, OSError) as exc:
        print(f"plot: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {dst}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "sweep-tau":
            return cmd_sweep_tau(args)
        if args.command == "sweep-n":
            return cmd_sweep_n(args)
        if args.command == "verify":
            return cmd_verify(args)
        return cmd_plot(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
