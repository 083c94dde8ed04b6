"""Evolution operators in the (0,1)-excitation subspace.

Three ways of building the single-excitation propagator of a control
schedule are provided:

* ``exact``    -- eigendecomposition of each segment Hamiltonian;
* ``trotter``  -- alternating free/diagonal factors (Model 1);
* ``pulse``    -- free evolution followed by an idealized short
                  high-amplitude diagonal pulse (Model 2).

For the approximate models a companion *exact reference* propagator of
the same schedule is available; scoring an approximation always means
comparing against that reference.

The vacuum amplitude is identically 1: the zero-sum constraint on the
control frequencies removes any vacuum phase, so only the N x N
one-excitation block evolves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import ChainSpec, ControlSchedule, one_excitation_hamiltonian


@dataclass(frozen=True)
class EvolutionModel:
    """Which propagator approximation to use.

    ``kind`` is one of ``exact``, ``trotter``, ``pulse``.  ``n`` is the
    Trotterization number (trotter only); ``eps_tilde`` is the pulse
    duration ratio in (0, 1] (pulse only).
    """

    kind: str
    n: int = 1
    eps_tilde: float = 1.0

    def __post_init__(self):
        if self.kind not in ("exact", "trotter", "pulse"):
            raise ValueError(f"unknown evolution model kind {self.kind!r}")
        if self.kind == "trotter" and self.n < 1:
            raise ValueError("Trotterization number must be >= 1")
        if self.kind == "pulse" and not (0.0 < self.eps_tilde <= 1.0):
            raise ValueError("eps_tilde must lie in (0, 1]")

    def label(self) -> str:
        if self.kind == "trotter":
            return f"trotter_n{self.n}"
        if self.kind == "pulse":
            return f"pulse_eps{self.eps_tilde:g}"
        return "exact"


@dataclass(frozen=True)
class SubspacePropagator:
    """One-excitation block plus the (trivial) vacuum phase."""

    u1: np.ndarray
    u0: complex = 1.0 + 0.0j

    @property
    def n(self) -> int:
        return self.u1.shape[0]


class HermitianExp:
    """Cached eigendecomposition of a Hermitian matrix.

    Evaluating exp(-i*h*t) for many t values reuses the eigenpairs.
    """

    def __init__(self, h: np.ndarray):
        self.w, self.v = np.linalg.eigh(h)

    def __call__(self, t: float) -> np.ndarray:
        return (self.v * np.exp(-1j * self.w * t)) @ self.v.conj().T


def expm_herm(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i*h*t) for Hermitian h via eigendecomposition."""
    return HermitianExp(h)(t)


def exact_segment(h: np.ndarray, dt: float) -> SubspacePropagator:
    """Exact propagator of one constant-Hamiltonian segment."""
    if dt < 0:
        raise ValueError("segment duration must be nonnegative")
    return SubspacePropagator(expm_herm(h, dt))


def trotter_segment(
    h0: np.ndarray, omega: np.ndarray, dt: float, n: int
) -> SubspacePropagator:
    """Model 1 segment: n alternating free/diagonal factors.

    The diagonal factor carries phases e^{+i omega_k dt/n} since the
    frequency contribution to the one-excitation diagonal is -omega_k.
    """
    if n < 1:
        raise ValueError("Trotterization number must be >= 1")
    e_free = expm_herm(h0, dt / n)
    d = np.exp(1j * np.asarray(omega) * (dt / n))
    factor = e_free * d[None, :]
    u = factor.copy()
    for _ in range(n - 1):
        u = factor @ u
    return SubspacePropagator(u)


def pulse_segment(
    h0: np.ndarray, omega: np.ndarray, dt1: float, eps_tilde: float
) -> tuple[SubspacePropagator, SubspacePropagator]:
    """Model 2 segment: pulse first, free evolution after.

    Returns (approx, exact_ref).  The approximation replaces the pulse
    subinterval by a purely diagonal rotation and is independent of
    eps_tilde; the reference keeps the full Hamiltonian during the pulse
    of duration eps_tilde*dt1 with amplitudes scaled by 1/eps_tilde, so
    the physical segment lasts dt1*(1 + eps_tilde).
    """
    if dt1 <= 0:
        raise ValueError("free-evolution duration must be positive")
    if not (0.0 < eps_tilde <= 1.0):
        raise ValueError("eps_tilde must lie in (0, 1]")
    omega = np.asarray(omega, dtype=float)
    e_free = expm_herm(h0, dt1)
    approx = e_free * np.exp(1j * omega * dt1)[None, :]
    # diagonal of the one-excitation block is -omega_k, amplified by 1/eps
    h_pulse = h0.copy()
    h_pulse[np.diag_indices_from(h_pulse)] = -omega / eps_tilde
    exact_ref = e_free @ expm_herm(h_pulse, eps_tilde * dt1)
    return SubspacePropagator(approx), SubspacePropagator(exact_ref)


class ScheduleEngine:
    """Composes schedule propagators, batched over many angle sets.

    The free-Hamiltonian eigenpairs are computed once; per-segment
    diagonal factors are cheap.  Batching over the leading axis lets a
    multi-start solver evaluate hundreds of candidate schedules with a
    handful of large matrix products.
    """

    def __init__(
        self,
        spec: ChainSpec,
        coupling: np.ndarray,
        model: EvolutionModel,
        tau_reg: float,
        k_omega: int,
    ):
        self.spec = spec
        self.model = model
        self.tau_reg = float(tau_reg)
        self.k_omega = int(k_omega)
        self.dt = self.tau_reg / self.k_omega
        self.h0 = one_excitation_hamiltonian(coupling, np.zeros(spec.n_total))
        self._h0_exp = HermitianExp(self.h0)
        n = spec.n_total
        if model.kind == "trotter":
            self._e_free = self._h0_exp(self.dt / model.n)
        elif model.kind == "pulse":
            self._e_free = self._h0_exp(self.dt)
        else:
            self._e_free = None
        self.n_sites = n

    # -- frequency tables -------------------------------------------------

    def omega_batch(self, angles: np.ndarray) -> np.ndarray:
        """(B, K, n_free) angles -> (B, K, N) per-site frequencies."""
        from .chain import amplitudes_from_angles

        angles = np.asarray(angles, dtype=float)
        amps = amplitudes_from_angles(angles)
        b, k = amps.shape[0], amps.shape[1]
        table = np.zeros((b, k, self.n_sites))
        table[:, :, self.spec.ext_receiver_sites] = amps
        return table

    # -- model propagators ------------------------------------------------

    def compose_columns(self, angles: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Apply the model propagator to selected identity columns.

        ``angles``: (B, K, n_free); ``cols``: 1-D array of column (site)
        indices.  Returns (B, N, len(cols)).
        """
        omega = self.omega_batch(angles)
        b = omega.shape[0]
        n = self.n_sites
        x = np.zeros((b, n, len(cols)), dtype=complex)
        x[:, cols, np.arange(len(cols))] = 1.0
        if self.model.kind == "exact":
            w, v = self._segment_eigh(omega, scale=1.0)
            for j in range(self.k_omega):
                vj = v[:, j]
                phase = np.exp(-1j * w[:, j] * self.dt)
                x = vj @ (phase[:, :, None] * (vj.conj().swapaxes(1, 2) @ x))
        elif self.model.kind == "trotter":
            step = self.dt / self.model.n
            for j in range(self.k_omega):
                d = np.exp(1j * omega[:, j] * step)
                for _ in range(self.model.n):
                    x = self._apply_free(d[:, :, None] * x)
        else:  # pulse
            for j in range(self.k_omega):
                d = np.exp(1j * omega[:, j] * self.dt)
                x = self._apply_free(d[:, :, None] * x)
        return x

    def compose_exact_columns(
        self, angles: np.ndarray, cols: np.ndarray, eps_tilde: float | None = None
    ) -> np.ndarray:
        """Exact-reference propagator of the same schedules, on columns.

        For the trotter model (and the exact model itself) this is the
        exact piecewise-constant evolution; for the pulse model it keeps
        the full Hamiltonian during each amplified pulse.
        """
        omega = self.omega_batch(angles)
        b = omega.shape[0]
        n = self.n_sites
        x = np.zeros((b, n, len(cols)), dtype=complex)
        x[:, cols, np.arange(len(cols))] = 1.0
        if self.model.kind == "pulse":
            eps = self.model.eps_tilde if eps_tilde is None else float(eps_tilde)
            w, v = self._segment_eigh(omega, scale=1.0 / eps)
            for j in range(self.k_omega):
                vj = v[:, j]
                phase = np.exp(-1j * w[:, j] * (eps * self.dt))
                x = vj @ (phase[:, :, None] * (vj.conj().swapaxes(1, 2) @ x))
                x = self._apply_free_exact(x, self.dt)
        else:
            w, v = self._segment_eigh(omega, scale=1.0)
            for j in range(self.k_omega):
                vj = v[:, j]
                phase = np.exp(-1j * w[:, j] * self.dt)
                x = vj @ (phase[:, :, None] * (vj.conj().swapaxes(1, 2) @ x))
        return x

    def compose_full(self, angles: np.ndarray) -> np.ndarray:
        """Model propagator as a full N x N matrix for one angle set."""
        cols = np.arange(self.n_sites)
        return self.compose_columns(angles[None], cols)[0]

    def compose_full_exact(
        self, angles: np.ndarray, eps_tilde: float | None = None
    ) -> np.ndarray:
        cols = np.arange(self.n_sites)
        return self.compose_exact_columns(angles[None], cols, eps_tilde)[0]

    # -- helpers ----------------------------------------------------------

    def _apply_free(self, x: np.ndarray) -> np.ndarray:
        return self._e_free @ x

    def _apply_free_exact(self, x: np.ndarray, dt: float) -> np.ndarray:
        e = self._h0_exp(dt)
        return e @ x

    def _segment_eigh(self, omega: np.ndarray, scale: float):
        """Batched eigendecomposition of h0 + diagonal(-omega*scale).

        omega: (B, K, N).  Returns eigenvalues (B, K, N) and
        eigenvectors (B, K, N, N).
        """
        b, k, n = omega.shape
        h = np.broadcast_to(self.h0, (b, k, n, n)).copy()
        idx = np.arange(n)
        h[:, :, idx, idx] = -omega * scale
        return np.linalg.eigh(h)


def compose_schedule(
    spec: ChainSpec,
    coupling: np.ndarray,
    schedule: ControlSchedule,
    model: EvolutionModel,
) -> SubspacePropagator:
    """Model propagator of a full schedule (segment 1 applied first)."""
    if schedule.tau_reg == 0:
        return SubspacePropagator(np.eye(spec.n_total, dtype=complex))
    engine = ScheduleEngine(spec, coupling, model, schedule.tau_reg, schedule.k_omega)
    return SubspacePropagator(engine.compose_full(schedule.angles))


def compose_schedule_exact(
    spec: ChainSpec,
    coupling: np.ndarray,
    schedule: ControlSchedule,
    model: EvolutionModel,
    eps_tilde: float | None = None,
) -> SubspacePropagator:
    """Exact-reference propagator of the same schedule.

    For ``exact``/``trotter`` models: product of exact segment
    exponentials.  For ``pulse``: product of free-evolution-plus-
    amplified-pulse segments at the requested eps_tilde.
    """
    if schedule.tau_reg == 0:
        return SubspacePropagator(np.eye(spec.n_total, dtype=complex))
    engine = ScheduleEngine(spec, coupling, model, schedule.tau_reg, schedule.k_omega)
    return SubspacePropagator(engine.compose_full_exact(schedule.angles, eps_tilde))
