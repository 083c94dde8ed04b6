"""Multi-start damped least-squares solving of the restoring constraints.

The unknowns are the bounded angles behind the per-segment control
amplitudes; the residuals are the off-diagonal entries of the model
propagator's receiver block.  A damped Gauss-Newton (Levenberg-Marquardt
style) iteration with finite-difference Jacobians is run from many
random starting points; every converged parameter set is kept, since the
metrics layer optimizes min/max statistics over the whole solution
family.

All starts are advanced together in fixed-size batches so that the heavy
linear algebra runs as a few large array operations.  The batch layout
is a function of the problem alone, which keeps results bit-identical
across worker counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .chain import ChainSpec
from .propagator import EvolutionModel, ScheduleEngine
from .restore import offdiag_entries

FD_STEP = 1e-6
BATCH = 64  # fixed; part of the determinism contract
_MU_MIN = 1e-14
_MU_MAX = 1e8


@dataclass(frozen=True)
class SolveProblem:
    spec: ChainSpec
    coupling: np.ndarray
    model: EvolutionModel
    tau_reg: float
    k_omega: int
    seed: int = 0
    n_starts: int = 1
    tol_root: float = 1e-10
    max_iters: int = 200

    @property
    def n_free(self) -> int:
        return self.spec.n_ext_receiver - 1

    @property
    def n_params(self) -> int:
        return self.k_omega * self.n_free

    @property
    def n_residuals(self) -> int:
        return 2 * self.spec.n_receiver * (self.spec.n_sender - 1)


@dataclass(frozen=True)
class Solution:
    """One converged (or abandoned) parameter set."""

    start_index: int
    angles: np.ndarray
    residual_norm: float
    exact_residual_norm: float
    constraint_max: float        # max |off-diag receiver entry|, model propagator
    exact_constraint_max: float  # same under the exact reference propagator
    lam_model: np.ndarray
    lam_exact: np.ndarray
    converged: bool
    degenerate: bool = False     # tau_reg == 0: constraints hold with lambda = 0


@dataclass(frozen=True)
class SolutionSet:
    tau_reg: float
    solutions: tuple[Solution, ...]
    n_starts: int

    @property
    def converged(self) -> tuple[Solution, ...]:
        return tuple(s for s in self.solutions if s.converged)

    @property
    def converged_count(self) -> int:
        return len(self.converged)


def initial_angles(problem: SolveProblem, start_index: int) -> np.ndarray:
    """Deterministic per-start starting point, uniform over (-pi, pi]."""
    ss = np.random.SeedSequence((problem.seed, start_index))
    rng = np.random.default_rng(ss)
    return rng.uniform(-np.pi, np.pi, size=(problem.k_omega, problem.n_free))


def _make_engine(problem: SolveProblem) -> ScheduleEngine:
    return ScheduleEngine(
        problem.spec, problem.coupling, problem.model, problem.tau_reg, problem.k_omega
    )


def _blocks(engine: ScheduleEngine, x: np.ndarray, problem: SolveProblem) -> np.ndarray:
    """Batched receiver blocks of the model propagator.

    x: (B, P) flattened angles -> (B, n_receiver, n_sender).
    """
    b = x.shape[0]
    angles = x.reshape(b, problem.k_omega, problem.n_free)
    cols = engine.compose_columns(angles, problem.spec.sender_sites)
    return cols[:, problem.spec.receiver_sites, :]

def _residual_batch(engine, x, problem) -> np.ndarray:
    blk = _blocks(engine, x, problem)
    nr, ns = blk.shape[1], blk.shape[2]
    mask = ~np.eye(nr, ns, dtype=bool)
    z = blk[:, mask]
    out = np.empty((x.shape[0], 2 * z.shape[1]))
    out[:, 0::2] = z.real
    out[:, 1::2] = z.imag
    return out


def _lm_batch(problem: SolveProblem, x0: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Damped Gauss-Newton on a batch of starts.

    Returns (final angles (B, P), residual 2-norms (B,), converged (B,)).
    """
    engine = _make_engine(problem)
    b, p = x0.shape
    x = x0.copy()
    mu = np.full(b, 1e-3)
    f = _residual_batch(engine, x, problem)
    norm = np.linalg.norm(f, axis=1)
    converged = norm < problem.tol_root
    active = ~converged
    eye = np.eye(p)
    for _ in range(problem.max_iters):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        xa = x[idx]
        fa = f[idx]
        na = idx.size
        # central finite-difference Jacobian, all columns in one batch
        pert = np.repeat(xa[:, None, :], 2 * p, axis=1)
        cols = np.arange(p)
        pert[:, 2 * cols, cols] += FD_STEP
        pert[:, 2 * cols + 1, cols] -= FD_STEP
        fp = _residual_batch(engine, pert.reshape(na * 2 * p, p), problem)
        fp = fp.reshape(na, 2 * p, -1)
        jac = (fp[:, 0::2] - fp[:, 1::2]).transpose(0, 2, 1) / (2 * FD_STEP)
        jtj = jac.transpose(0, 2, 1) @ jac
        g = np.einsum("brp,br->bp", jac, fa)
        # reuse this Jacobian across damping retries
        trial = idx
        for _attempt in range(6):
            sel = np.searchsorted(idx, trial)
            a = jtj[sel] + mu[trial, None, None] * eye
            try:
                delta = -np.linalg.solve(a, g[sel][:, :, None])[:, :, 0]
            except np.linalg.LinAlgError:
                delta = -np.stack(
                    [
                        np.linalg.lstsq(ai, gi, rcond=None)[0]
                        for ai, gi in zip(a, g[sel])
                    ]
                )
            x_trial = x[trial] + delta
            f_trial = _residual_batch(engine, x_trial, problem)
            norm_trial = np.linalg.norm(f_trial, axis=1)
            better = norm_trial < norm[trial]
            acc = trial[better]
            x[acc] = x_trial[better]
            f[acc] = f_trial[better]
            norm[acc] = norm_trial[better]
            mu[acc] = np.maximum(mu[acc] / 3.0, _MU_MIN)
            rej = trial[~better]
            mu[rej] = mu[rej] * 4.0
            trial = rej[mu[rej] < _MU_MAX]
            if trial.size == 0:
                break
        newly = norm < problem.tol_root
        converged |= newly
        active &= ~newly
        active &= mu < _MU_MAX  # hopeless starts are abandoned
    return x, norm, converged


def _finalize(
    problem: SolveProblem, x: np.ndarray, norm: np.ndarray, conv: np.ndarray, indices
) -> list[Solution]:
    """Attach exact-reference diagnostics to a batch of final iterates."""
    engine = _make_engine(problem)
    b = x.shape[0]
    angles = x.reshape(b, problem.k_omega, problem.n_free)
    blk = _blocks(engine, x, problem)
    if problem.model.kind == "exact":
        blk_exact = blk
    else:
        cols = engine.compose_exact_columns(angles, problem.spec.sender_sites)
        blk_exact = cols[:, problem.spec.receiver_sites, :]
    out = []
    degenerate = problem.tau_reg == 0
    for i in range(b):
        res_ex = _stack_offdiag(blk_exact[i])
        out.append(
            Solution(
                start_index=int(indices[i]),
                angles=angles[i].copy(),
                residual_norm=float(norm[i]),
                exact_residual_norm=float(np.linalg.norm(res_ex)),
                constraint_max=float(np.max(np.abs(offdiag_entries(blk[i])))),
                exact_constraint_max=float(np.max(np.abs(offdiag_entries(blk_exact[i])))),
                lam_model=np.ascontiguousarray(np.diagonal(blk[i])),
                lam_exact=np.ascontiguousarray(np.diagonal(blk_exact[i])),
                converged=bool(conv[i]),
                degenerate=degenerate,
            )
        )
    return out


def _stack_offdiag(block: np.ndarray) -> np.ndarray:
    z = offdiag_entries(block)
    out = np.empty(2 * z.size)
    out[0::2] = z.real
    out[1::2] = z.imag
    return out


def solve_once(problem: SolveProblem, initial: np.ndarray) -> Solution:
    """Single damped least-squares run from a given starting point."""
    x0 = np.asarray(initial, dtype=float).reshape(1, problem.n_params)
    x, norm, conv = _lm_batch(problem, x0)
    return _finalize(problem, x, norm, conv, [0])[0]


def _run_chunk(problem: SolveProblem, lo: int, hi: int) -> list[Solution]:
    x0 = np.stack(
        [initial_angles(problem, i).ravel() for i in range(lo, hi)]
    )
    x, norm, conv = _lm_batch(problem, x0)
    return _finalize(problem, x, norm, conv, range(lo, hi))


def multi_start(problem: SolveProblem, jobs: int = 1) -> SolutionSet:
    """Independent solver runs from seeded random starts.

    The start set is processed in fixed-size chunks whose layout does not
    depend on ``jobs``, so the returned set is a pure function of the
    problem and seed.
    """
    if problem.n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    chunks = [
        (lo, min(lo + BATCH, problem.n_starts))
        for lo in range(0, problem.n_starts, BATCH)
    ]
    if jobs > 1 and len(chunks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_run_chunk_star, [(problem, lo, hi) for lo, hi in chunks]))
    else:
        parts = [_run_chunk(problem, lo, hi) for lo, hi in chunks]
    sols = [s for part in parts for s in part]
    sols.sort(key=lambda s: s.start_index)
    return SolutionSet(
        tau_reg=problem.tau_reg, solutions=tuple(sols), n_starts=problem.n_starts
    )


def _run_chunk_star(args) -> list[Solution]:
    return _run_chunk(*args)
