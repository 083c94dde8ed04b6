"""Quality characteristics of the restoring protocol.

Per registration time the solver produces a family of converged
parameter sets; the characteristics condense that family:

* s1 -- smallest (over the family) worst constraint violation under the
        exact reference propagator;
* s2 -- smallest worst error of the model scale factors against the
        exact ones;
* s3, s4 -- running maxima of s1, s2 along the time grid;
* s5 -- running best worst-case |lambda| (the headline quality figure);
* lambda_opt / tau_0 -- final s5 and the grid time where it is attained.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .chain import build_couplings
from .propagator import ScheduleEngine
from .solver import SolveProblem, Solution, SolutionSet, multi_start


@dataclass
class MetricPoint:
    tau: float
    s1: float | None
    s2: float | None
    lambda_best: float
    converged_count: int
    s3: float | None = None
    s4: float | None = None
    s5: float | None = None

    @property
    def feasible(self) -> bool:
        return self.converged_count > 0


@dataclass(frozen=True)
class SweepResult:
    points: tuple[MetricPoint, ...]
    horizon: float
    step: float
    lambda_opt: float
    tau_0: float | None
    best_solutions: SolutionSet | None  # solution family at tau_0


def point_metrics(solutions: SolutionSet, tau: float) -> MetricPoint:
    conv = solutions.converged
    if not conv:
        return MetricPoint(tau=tau, s1=None, s2=None, lambda_best=0.0, converged_count=0)
    s1 = min(s.exact_constraint_max for s in conv)
    s2 = min(float(np.max(np.abs(s.lam_model - s.lam_exact))) for s in conv)
    lam_best = max(float(np.min(np.abs(s.lam_model))) for s in conv)
    return MetricPoint(
        tau=tau, s1=s1, s2=s2, lambda_best=lam_best, converged_count=len(conv)
    )


def tau_grid(horizon: float, step: float) -> np.ndarray:
    n = int(round(horizon / step))
    return np.arange(n + 1) * step


def _point_job(args) -> tuple[MetricPoint, SolutionSet]:
    problem, tau = args
    sols = multi_start(replace(problem, tau_reg=float(tau)))
    return point_metrics(sols, float(tau)), sols


def sweep_tau(
    problem: SolveProblem,
    horizon: float,
    step: float = 0.1,
    jobs: int = 1,
) -> SweepResult:
    """Solve at every grid time and accumulate the running characteristics.

    Grid points are independent jobs; the running maxima are filled in a
    deterministic post-pass over the ordered grid.  Infeasible points
    (no converged start) are skipped in the running maxima.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    taus = tau_grid(horizon, step)
    args = [(problem, t) for t in taus]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        pool = ProcessPoolExecutor(max_workers=jobs)
        results = pool.map(_point_job, args)
    else:
        pool = None
        results = map(_point_job, args)
    points = []
    s3 = s4 = s5 = None
    lambda_opt = 0.0
    tau_0 = None
    best_sols = None
    for (pt, sols) in results:
        if pt.feasible:
            s3 = pt.s1 if s3 is None else max(s3, pt.s1)
            s4 = pt.s2 if s4 is None else max(s4, pt.s2)
            s5 = pt.lambda_best if s5 is None else max(s5, pt.lambda_best)
            if pt.lambda_best > lambda_opt:
                lambda_opt = pt.lambda_best
                tau_0 = pt.tau
                best_sols = sols
        pt.s3, pt.s4, pt.s5 = s3, s4, s5
        points.append(pt)
    if pool is not None:
        pool.shutdown()
    return SweepResult(
        points=tuple(points),
        horizon=horizon,
        step=step,
        lambda_opt=lambda_opt,
        tau_0=tau_0,
        best_solutions=best_sols,
    )


@dataclass(frozen=True)
class NSweepRow:
    n_total: int
    lambda_opt: float
    tau_0: float | None
    s1_at_tau0: float | None
    s2_at_tau0: float | None
    eps_tilde: float | None


def _metrics_at_eps(
    problem: SolveProblem, sols: SolutionSet, eps: float
) -> tuple[float, float]:
    """s1/s2 of a solution family re-scored at another pulse ratio."""
    conv = sols.converged
    engine = ScheduleEngine(
        problem.spec, problem.coupling, problem.model, sols.tau_reg, problem.k_omega
    )
    angles = np.stack([s.angles for s in conv])
    cols = engine.compose_exact_columns(angles, problem.spec.sender_sites, eps)
    blocks = cols[:, problem.spec.receiver_sites, :]
    nr, ns = blocks.shape[1], blocks.shape[2]
    off = ~np.eye(nr, ns, dtype=bool)
    s1 = float(np.min(np.max(np.abs(blocks[:, off]), axis=1)))
    lam_exact = np.diagonal(blocks, axis1=1, axis2=2)
    lam_model = np.stack([s.lam_model for s in conv])
    s2 = float(np.min(np.max(np.abs(lam_model - lam_exact), axis=1)))
    return s1, s2


def sweep_n(
    problem: SolveProblem,
    n_list,
    horizon_factor: float,
    step: float = 0.1,
    eps_list=None,
    jobs: int = 1,
) -> list[NSweepRow]:
    """One full time sweep per chain length.

    For the pulse model, s1/s2 at the optimal registration time are
    re-scored at every requested pulse ratio; other models yield one row
    per length.
    """
    rows = []
    for n in n_list:
        spec = replace(problem.spec, n_total=int(n))
        prob = replace(problem, spec=spec, coupling=build_couplings(spec))
        res = sweep_tau(prob, horizon_factor * n, step=step, jobs=jobs)
        if res.tau_0 is None or res.best_solutions is None:
            rows.append(NSweepRow(int(n), 0.0, None, None, None, None))
            continue
        base = next(p for p in res.points if p.tau == res.tau_0)
        if problem.model.kind == "pulse" and eps_list:
            for eps in eps_list:
                s1, s2 = _metrics_at_eps(prob, res.best_solutions, float(eps))
                rows.append(
                    NSweepRow(int(n), res.lambda_opt, res.tau_0, s1, s2, float(eps))
                )
        else:
            rows.append(
                NSweepRow(int(n), res.lambda_opt, res.tau_0, base.s1, base.s2, None)
            )
    return rows


@dataclass(frozen=True)
class PhysicalSchedule:
    """A solved schedule deformed to a concrete pulse ratio."""

    eps_tilde: float
    amplitudes: np.ndarray      # physical amplitudes a/eps, shape (k_omega, n_er)
    free_duration: float        # per-segment free-evolution span
    pulse_duration: float       # per-segment pulse span
    total_duration: float
    exact_constraint_max: float
    exact_residual_norm: float


def rescale_pulse_solution(
    problem: SolveProblem, solution: Solution, eps_tilde: float
) -> PhysicalSchedule:
    """Deform a pulse-model solution to a given pulse ratio.

    The approximate propagator (and hence the solved angles) is
    unchanged; the amplitudes are amplified by 1/eps and the pulses are
    shrunk accordingly, so only the exact-reference scores move.
    """
    if eps_tilde <= 0:
        raise ValueError("eps_tilde must be positive")
    if problem.model.kind != "pulse":
        raise ValueError("only pulse-model solutions can be rescaled")
    from .chain import amplitudes_from_angles

    engine = ScheduleEngine(
        problem.spec, problem.coupling, problem.model, problem.tau_reg, problem.k_omega
    )
    dt1 = engine.dt
    amps = amplitudes_from_angles(solution.angles) / eps_tilde
    cols = engine.compose_exact_columns(
        solution.angles[None], problem.spec.sender_sites, eps_tilde
    )
    block = cols[0][problem.spec.receiver_sites, :]
    nr, ns = block.shape
    off = ~np.eye(nr, ns, dtype=bool)
    z = block[off]
    res = np.concatenate([z.real, z.imag])
    return PhysicalSchedule(
        eps_tilde=float(eps_tilde),
        amplitudes=amps,
        free_duration=dt1,
        pulse_duration=eps_tilde * dt1,
        total_duration=problem.k_omega * dt1 * (1.0 + eps_tilde),
        exact_constraint_max=float(np.max(np.abs(z))),
        exact_residual_norm=float(np.linalg.norm(res)),
    )
