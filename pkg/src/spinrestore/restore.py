"""Receiver block, restoring residuals, scale factors and reduced states.

The restoring contract asks the receiver's reduced density matrix at the
registration time to be element-wise proportional to the sender's
initial state.  In the (0,1)-excitation sector the whole constraint
system collapses to "the receiver block of the one-excitation propagator
is diagonal"; the diagonal entries are the scale factors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import ChainSpec


@dataclass(frozen=True)
class LambdaSet:
    """Scale factors lambda_{p0}, one per receiver slot."""

    lam: np.ndarray

    def products(self) -> np.ndarray:
        """Pairwise factors lambda_{pq} = lambda_{p0} * conj(lambda_{q0})."""
        return self.lam[:, None] * self.lam.conj()[None, :]

    def min_abs(self) -> float:
        return float(np.min(np.abs(self.lam)))


def receiver_block(u1: np.ndarray, spec: ChainSpec) -> np.ndarray:
    """Receiver-rows / sender-columns block of the one-excitation propagator.

    Entry (p, q) is the transition amplitude from an excitation at sender
    site q+1 to one at receiver site N - n_receiver + p + 1.
    """
    rows = spec.receiver_sites
    cols = spec.sender_sites
    return u1[np.ix_(rows, cols)]


def offdiag_entries(block: np.ndarray) -> np.ndarray:
    """Off-diagonal entries of the receiver block, row-major order."""
    nr, ns = block.shape
    mask = ~np.eye(nr, ns, dtype=bool)
    return block[mask]


def residuals(block: np.ndarray) -> np.ndarray:
    """Stacked (re, im) pairs of the off-diagonal receiver-block entries."""
    z = offdiag_entries(block)
    out = np.empty(2 * z.size)
    out[0::2] = z.real
    out[1::2] = z.imag
    return out


def lambdas(block: np.ndarray) -> LambdaSet:
    """Scale factors read off the receiver-block diagonal."""
    return LambdaSet(np.ascontiguousarray(np.diagonal(block)))


def embed_sender_state(rho_s: np.ndarray, spec: ChainSpec) -> np.ndarray:
    """Embed a sender (0,1)-sector state into the chain (0,1)-sector.

    Basis: index 0 is the vacuum, index k (1..N) an excitation at site k.
    The transmission line and receiver start in the ground state, so all
    non-sender entries vanish.
    """
    rho_s = np.asarray(rho_s, dtype=complex)
    ns = spec.n_sender
    if rho_s.shape != (ns + 1, ns + 1):
        raise ValueError(f"sender state must be {(ns + 1, ns + 1)}")
    if not np.allclose(rho_s, rho_s.conj().T, atol=1e-10):
        raise ValueError("sender state must be Hermitian")
    if abs(np.trace(rho_s).real - 1.0) > 1e-10:
        raise ValueError("sender state must have unit trace")
    evals = np.linalg.eigvalsh(rho_s)
    if evals.min() < -1e-10:
        raise ValueError("sender state must be positive semidefinite")
    n = spec.n_total
    rho = np.zeros((n + 1, n + 1), dtype=complex)
    rho[0, 0] = rho_s[0, 0]
    rho[1 : ns + 1, 0] = rho_s[1:, 0]
    rho[0, 1 : ns + 1] = rho_s[0, 1:]
    rho[1 : ns + 1, 1 : ns + 1] = rho_s[1:, 1:]
    return rho


def evolve_state(u1: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Conjugate a (0,1)-sector chain state by the subspace propagator."""
    n = u1.shape[0]
    u = np.zeros((n + 1, n + 1), dtype=complex)
    u[0, 0] = 1.0
    u[1:, 1:] = u1
    return u @ rho @ u.conj().T


def receiver_density(u1: np.ndarray, rho0: np.ndarray, spec: ChainSpec) -> np.ndarray:
    """Evolve a chain state and trace out sender plus transmission line.

    In the (0,1) sector the trace is a reshuffle: non-receiver excitation
    populations fall into the receiver vacuum entry, receiver rows and
    columns carry over directly.
    """
    rho = evolve_state(u1, rho0)
    nr = spec.n_receiver
    rec = spec.receiver_sites + 1  # shift past the vacuum index
    other = np.setdiff1d(np.arange(1, spec.n_total + 1), rec)
    out = np.zeros((nr + 1, nr + 1), dtype=complex)
    out[0, 0] = rho[0, 0] + rho[other, other].sum()
    out[1:, 0] = rho[rec, 0]
    out[0, 1:] = rho[0, rec]
    out[1:, 1:] = rho[np.ix_(rec, rec)]
    return out


def restore_check(
    u1: np.ndarray, rho_s: np.ndarray, lam: LambdaSet, spec: ChainSpec
) -> float:
    """Worst deviation from the proportionality contract.

    Compares every element of the receiver's reduced density matrix
    (except the vacuum-vacuum one, which is not restorable) against
    lambda_ij times the corresponding sender element.
    """
    rho0 = embed_sender_state(rho_s, spec)
    rho_r = receiver_density(u1, rho0, spec)
    nr = spec.n_receiver
    scale = np.zeros((nr + 1, nr + 1), dtype=complex)
    scale[1:, 0] = lam.lam
    scale[0, 1:] = lam.lam.conj()
    scale[1:, 1:] = lam.products()
    dev = np.abs(rho_r - scale * np.asarray(rho_s, dtype=complex))
    dev[0, 0] = 0.0
    return float(dev.max())
