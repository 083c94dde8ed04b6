"""Chain geometry, couplings and the one-excitation Hamiltonian block.

Everything is dimensionless: the nearest-neighbour coupling of the first
pair defines the unit of energy (and hence of time), so the coupling
matrix is fixed entirely by the site spacing law and the control
frequencies are given in the same units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ZERO_SUM_TOL = 1e-12


@dataclass(frozen=True)
class ChainSpec:
    """Geometry of the communication line.

    The chain is split into sender (first ``n_sender`` sites), transmission
    line, and receiver (last ``n_receiver`` sites).  The extended receiver
    is the block of the last ``n_ext_receiver`` sites; only those sites may
    carry nonzero control frequencies.
    """

    n_total: int
    n_sender: int
    n_receiver: int
    n_ext_receiver: int
    coupling_exponent: float = 3.0

    def __post_init__(self):
        if self.n_sender < 1 or self.n_sender != self.n_receiver:
            raise ValueError("sender and receiver must have equal size >= 1")
        if not (self.n_receiver <= self.n_ext_receiver <= self.n_total - self.n_sender):
            raise ValueError(
                "need n_receiver <= n_ext_receiver <= n_total - n_sender"
            )
        if self.n_total < self.n_sender + self.n_receiver:
            raise ValueError("chain too short for sender plus receiver")

    @property
    def n_line(self) -> int:
        """Number of transmission-line sites (may be zero)."""
        return self.n_total - self.n_sender - self.n_receiver

    @property
    def sender_sites(self) -> np.ndarray:
        return np.arange(self.n_sender)

    @property
    def receiver_sites(self) -> np.ndarray:
        return np.arange(self.n_total - self.n_receiver, self.n_total)

    @property
    def ext_receiver_sites(self) -> np.ndarray:
        return np.arange(self.n_total - self.n_ext_receiver, self.n_total)

    @property
    def free_control_sites(self) -> np.ndarray:
        """Extended-receiver sites with independent amplitudes.

        The last site carries the closure amplitude that enforces the
        zero-sum constraint and is not a free parameter.
        """
        return self.ext_receiver_sites[:-1]


def build_couplings(spec: ChainSpec) -> np.ndarray:
    """All-pairs coupling matrix d_ij = 1/|i-j|**p for a homogeneous chain.

    The first-neighbour coupling is 1 by construction, which fixes the
    dimensionless time unit.
    """
    idx = np.arange(spec.n_total)
    dist = np.abs(idx[:, None] - idx[None, :]).astype(float)
    with np.errstate(divide="ignore"):
        d = dist ** (-spec.coupling_exponent)
    np.fill_diagonal(d, 0.0)
    return d


def amplitudes_from_angles(angles: np.ndarray) -> np.ndarray:
    """Map free angles to bounded amplitudes plus the closure amplitude.

    The free amplitudes are 2*sin(angle), hence confined to [-2, 2]; the
    appended last amplitude is minus their sum so the total is exactly
    zero.  Works on batches: the mapping is applied along the last axis.
    """
    angles = np.asarray(angles, dtype=float)
    free = 2.0 * np.sin(angles)
    closure = -free.sum(axis=-1, keepdims=True)
    return np.concatenate([free, closure], axis=-1)


@dataclass(frozen=True)
class ControlSchedule:
    """Piecewise-constant control frequencies on the extended receiver.

    ``angles`` has shape (k_omega, n_ext_receiver - 1); each row yields the
    per-segment amplitudes via :func:`amplitudes_from_angles`.  All
    segments have equal duration tau_reg / k_omega.
    """

    k_omega: int
    tau_reg: float
    angles: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        if a.ndim != 2 or a.shape[0] != self.k_omega:
            raise ValueError("angles must have shape (k_omega, n_free)")
        if self.tau_reg < 0:
            raise ValueError("tau_reg must be nonnegative")
        object.__setattr__(self, "angles", a)

    @property
    def dt(self) -> float:
        return self.tau_reg / self.k_omega

    @property
    def amplitudes(self) -> np.ndarray:
        """Per-segment extended-receiver amplitudes, shape (k_omega, n_er)."""
        return amplitudes_from_angles(self.angles)

    def omega_table(self, spec: ChainSpec) -> np.ndarray:
        """Full per-site frequency table, shape (k_omega, n_total).

        Sites outside the extended receiver carry zero frequency.
        """
        amps = self.amplitudes
        if amps.shape[1] != spec.n_ext_receiver:
            raise ValueError("schedule does not match the extended receiver size")
        table = np.zeros((self.k_omega, spec.n_total))
        table[:, spec.ext_receiver_sites] = amps
        return table


def one_excitation_hamiltonian(coupling: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Single-excitation Hamiltonian block for given couplings and frequencies.

    Off-diagonal entries are half the coupling constants (hopping
    amplitude of a single flipped spin); the diagonal entry at site k is
    -omega_k.  The frequency vector must satisfy the zero-sum constraint,
    which is what keeps the vacuum from evolving.
    """
    omega = np.asarray(omega, dtype=float)
    n = coupling.shape[0]
    if omega.shape != (n,):
        raise ValueError("omega length must match the chain length")
    if abs(omega.sum()) > ZERO_SUM_TOL:
        raise ValueError(
            f"frequency vector violates the zero-sum constraint: sum={omega.sum():g}"
        )
    h = 0.5 * np.asarray(coupling, dtype=float).copy()
    np.fill_diagonal(h, -omega)
    return h
