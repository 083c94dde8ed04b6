"""Brute-force full-Hilbert-space reference for small chains.

Everything here works with dense 2^N x 2^N matrices built from explicit
spin-1/2 operators (site 1 is the most significant bit of the basis
index, a set bit marks an excited spin).  It exists purely to validate
the subspace machinery: the one-excitation blocks, the partial trace,
and the sender-to-receiver transfer tensor.  Clarity over speed.
"""

from __future__ import annotations

import numpy as np

from .chain import ChainSpec, ControlSchedule
from .propagator import expm_herm
from .restore import embed_sender_state, receiver_density

MAX_SITES = 12

_SX = 0.5 * np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SY = 0.5 * np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_SZ = 0.5 * np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_ID = np.eye(2, dtype=complex)


def _site_operator(op: np.ndarray, site: int, n: int) -> np.ndarray:
    """Embed a single-spin operator at a 0-based site (site 0 = MSB)."""
    out = np.array([[1.0 + 0.0j]])
    for k in range(n):
        out = np.kron(out, op if k == site else _ID)
    return out


def _check_size(n: int):
    if n > MAX_SITES:
        raise ValueError(f"full-space oracle limited to {MAX_SITES} sites")


def full_hamiltonian(
    spec: ChainSpec, coupling: np.ndarray, omega: np.ndarray
) -> np.ndarray:
    """Dense flip-flop Hamiltonian plus local z-field terms."""
    n = spec.n_total
    _check_size(n)
    dim = 2 ** n
    h = np.zeros((dim, dim), dtype=complex)
    xs = [_site_operator(_SX, k, n) for k in range(n)]
    ys = [_site_operator(_SY, k, n) for k in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if coupling[i, j] != 0.0:
                h += coupling[i, j] * (xs[i] @ xs[j] + ys[i] @ ys[j])
    for k in range(n):
        if omega[k] != 0.0:
            h += omega[k] * _site_operator(_SZ, k, n)
    return h


def total_z(n: int) -> np.ndarray:
    _check_size(n)
    return sum(_site_operator(_SZ, k, n) for k in range(n))


def one_excitation_indices(n: int) -> np.ndarray:
    """Full-space basis indices of single-excitation states, site order."""
    return np.array([1 << (n - 1 - k) for k in range(n)])


def one_excitation_block(full_op: np.ndarray, n: int) -> np.ndarray:
    idx = one_excitation_indices(n)
    return full_op[np.ix_(idx, idx)]


def full_propagate_schedule(
    spec: ChainSpec, coupling: np.ndarray, schedule: ControlSchedule
) -> np.ndarray:
    """Exact full-space propagator of a schedule (segment 1 first)."""
    n = spec.n_total
    _check_size(n)
    omega_table = schedule.omega_table(spec)
    u = np.eye(2 ** n, dtype=complex)
    for j in range(schedule.k_omega):
        h = full_hamiltonian(spec, coupling, omega_table[j])
        u = expm_herm(h, schedule.dt) @ u
    return u


def _sector_patterns(n_sites: int, max_exc: int = 1):
    """All bit patterns of a subsystem with at most max_exc excitations."""
    pats = [(0,) * n_sites]
    if max_exc >= 1:
        for k in range(n_sites):
            p = [0] * n_sites
            p[k] = 1
            pats.append(tuple(p))
    return pats


def _pattern_index(pattern) -> int:
    idx = 0
    for b in pattern:
        idx = (idx << 1) | b
    return idx


def _composite_index(ns_pat, tl_pat, r_pat) -> int:
    bits = tuple(ns_pat) + tuple(tl_pat) + tuple(r_pat)
    return _pattern_index(bits)


def transfer_tensor(spec: ChainSpec, u_full: np.ndarray) -> np.ndarray:
    """Sender-to-receiver transfer tensor over (0,1)-sector indices.

    Index 0 stands for the subsystem vacuum, index k for an excitation
    at subsystem slot k.  Returns T with shape (nr+1, nr+1, ns+1, ns+1)
    such that rho_R[a, b] = sum_{c, d} T[a, b, c, d] * rho_S[c, d].
    """
    ns, ntl, nr = spec.n_sender, spec.n_line, spec.n_receiver
    s_pats = _sector_patterns(ns)
    r_pats = _sector_patterns(nr)
    tl_zero = (0,) * ntl
    s_zero = (0,) * ns
    # intermediate sender/TL patterns with 0 or 1 total excitations
    inter = []
    for p_s in _sector_patterns(ns):
        for p_tl in _sector_patterns(ntl):
            w = sum(p_s) + sum(p_tl)
            if w <= 1:
                inter.append((p_s, p_tl, w))
    t = np.zeros((nr + 1, nr + 1, ns + 1, ns + 1), dtype=complex)
    for a, n_r in enumerate(r_pats):
        for b, m_r in enumerate(r_pats):
            for c, i_s in enumerate(s_pats):
                for d, j_s in enumerate(s_pats):
                    w_need = sum(i_s) - sum(n_r)
                    if w_need != sum(j_s) - sum(m_r) or w_need < 0:
                        continue
                    acc = 0.0 + 0.0j
                    for (p_s, p_tl, w) in inter:
                        if w != w_need:
                            continue
                        row = _composite_index(p_s, p_tl, n_r)
                        col = _composite_index(i_s, tl_zero, (0,) * nr)
                        row2 = _composite_index(j_s, tl_zero, (0,) * nr)
                        col2 = _composite_index(p_s, p_tl, m_r)
                        acc += u_full[row, col] * u_full[col2, row2].conj()
                    t[a, b, c, d] = acc
    return t


def apply_transfer_tensor(t: np.ndarray, rho_s: np.ndarray) -> np.ndarray:
    return np.einsum("abcd,cd->ab", t, rho_s)


def full_partial_trace_receiver(
    spec: ChainSpec, rho_full: np.ndarray
) -> np.ndarray:
    """Partial trace over sender and transmission line, full space."""
    n, nr = spec.n_total, spec.n_receiver
    dim_env = 2 ** (n - nr)
    dim_r = 2 ** nr
    rho = rho_full.reshape(dim_env, dim_r, dim_env, dim_r)
    return np.trace(rho, axis1=0, axis2=2)


def t_tensor_check(
    spec: ChainSpec,
    coupling: np.ndarray,
    schedule: ControlSchedule,
    rho_s_samples,
) -> float:
    """Worst disagreement between the transfer tensor and evolve-then-trace.

    The tensor is materialized from the full-space propagator; the other
    route evolves the embedded state in the (0,1) subspace and traces.
    """
    u_full = full_propagate_schedule(spec, coupling, schedule)
    t = transfer_tensor(spec, u_full)
    u1 = one_excitation_block(u_full, spec.n_total)
    worst = 0.0
    for rho_s in rho_s_samples:
        via_tensor = apply_transfer_tensor(t, np.asarray(rho_s, dtype=complex))
        via_trace = receiver_density(u1, embed_sender_state(rho_s, spec), spec)
        worst = max(worst, float(np.max(np.abs(via_tensor - via_trace))))
    return worst
