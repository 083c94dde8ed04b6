import numpy as np
import pytest

from spinrestore import (
    ChainSpec,
    ControlSchedule,
    EvolutionModel,
    build_couplings,
    compose_schedule,
    embed_sender_state,
    lambdas,
    receiver_block,
    receiver_density,
    residuals,
    restore_check,
)
from spinrestore.restore import evolve_state, offdiag_entries
from spinrestore.oracle import (
    full_partial_trace_receiver,
    full_propagate_schedule,
    one_excitation_block,
    one_excitation_indices,
)

from conftest import random_density_matrix


def ground_state(dim):
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


class TestReceiverBlock:
    def test_identity_gives_zero_block(self, spec6):
        b = receiver_block(np.eye(6, dtype=complex), spec6)
        assert np.array_equal(b, np.zeros((2, 2)))

    def test_entries_bounded_for_unitary(self, spec6, coupling6):
        rng = np.random.default_rng(0)
        sch = ControlSchedule(4, 11.0, rng.uniform(-np.pi, np.pi, (4, 1)))
        u = compose_schedule(spec6, coupling6, sch, EvolutionModel("exact")).u1
        assert np.all(np.abs(receiver_block(u, spec6)) <= 1.0 + 1e-12)

    def test_two_site_perfect_transfer(self):
        # a 2-site chain swaps the excitation completely at tau = pi
        spec = ChainSpec(2, 1, 1, 1)
        coupling = build_couplings(spec)
        sch = ControlSchedule(1, np.pi, np.zeros((1, 0)))
        u = compose_schedule(spec, coupling, sch, EvolutionModel("exact")).u1
        b = receiver_block(u, spec)
        assert abs(abs(b[0, 0]) - 1.0) < 1e-12


class TestResiduals:
    def test_zero_block(self):
        assert np.array_equal(residuals(np.zeros((2, 2), dtype=complex)), np.zeros(4))

    def test_diagonal_block(self):
        b = np.diag([0.3 + 0.1j, -0.2j])
        assert np.array_equal(residuals(b), np.zeros(4))

    def test_length_two_qubit(self):
        assert residuals(np.ones((2, 2), dtype=complex)).size == 4

    def test_length_three_qubit(self):
        assert residuals(np.ones((3, 3), dtype=complex)).size == 12


class TestLambdas:
    def test_identity_block(self):
        lam = lambdas(np.eye(2, dtype=complex))
        assert np.array_equal(lam.lam, [1, 1])
        assert np.array_equal(lam.products(), np.ones((2, 2)))

    def test_zero_block(self):
        lam = lambdas(np.zeros((2, 2), dtype=complex))
        assert np.array_equal(lam.lam, [0, 0])

    def test_products_identity(self):
        rng = np.random.default_rng(1)
        z = rng.normal(size=2) + 1j * rng.normal(size=2)
        lam = lambdas(np.diag(z))
        prod = lam.products()
        assert np.array_equal(prod, z[:, None] * z.conj()[None, :])
        assert np.max(np.abs(prod.diagonal().imag)) < 1e-14


class TestEmbedSenderState:
    def test_ground(self, spec6):
        rho = embed_sender_state(ground_state(3), spec6)
        assert rho[0, 0] == 1.0
        assert np.count_nonzero(rho) == 1

    def test_pure_one_excitation(self, spec6):
        psi = np.array([0.0, 1 / np.sqrt(2), 1j / np.sqrt(2)])
        rho_s = np.outer(psi, psi.conj())
        rho = embed_sender_state(rho_s, spec6)
        assert abs(np.trace(rho) - 1) < 1e-12
        assert np.allclose(rho[1:3, 1:3], rho_s[1:, 1:])

    def test_random_states_remain_physical(self, spec6):
        rng = np.random.default_rng(2)
        for _ in range(5):
            rho_s = random_density_matrix(rng, 3)
            rho = embed_sender_state(rho_s, spec6)
            assert abs(np.trace(rho) - 1) < 1e-12
            assert np.linalg.eigvalsh(rho).min() > -1e-10

    def test_rejects_wrong_size(self, spec6):
        with pytest.raises(ValueError):
            embed_sender_state(np.eye(4) / 4, spec6)

    def test_rejects_non_psd(self, spec6):
        bad = np.diag([1.5, -0.5, 0.0]).astype(complex)
        with pytest.raises(ValueError):
            embed_sender_state(bad, spec6)


class TestReceiverDensity:
    def test_ground_state_stays_ground(self, spec6, coupling6):
        rng = np.random.default_rng(3)
        sch = ControlSchedule(4, 5.0, rng.uniform(-np.pi, np.pi, (4, 1)))
        u = compose_schedule(spec6, coupling6, sch, EvolutionModel("exact")).u1
        rho0 = embed_sender_state(ground_state(3), spec6)
        rho_r = receiver_density(u, rho0, spec6)
        assert np.allclose(rho_r, ground_state(3), atol=1e-12)

    def test_trace_preserved(self, spec6, coupling6):
        rng = np.random.default_rng(4)
        sch = ControlSchedule(4, 5.0, rng.uniform(-np.pi, np.pi, (4, 1)))
        u = compose_schedule(spec6, coupling6, sch, EvolutionModel("exact")).u1
        rho0 = embed_sender_state(random_density_matrix(rng, 3), spec6)
        rho_r = receiver_density(u, rho0, spec6)
        assert abs(np.trace(rho_r).real - 1.0) < 1e-12
        # excitation probability balance
        assert abs(rho_r[0, 0].real + np.sum(np.diagonal(rho_r)[1:]).real - 1) < 1e-12

    @pytest.mark.parametrize("n_total", [4, 6, 8])
    def test_matches_full_space_partial_trace(self, n_total):
        spec = ChainSpec(n_total, 2, 2, 2)
        coupling = build_couplings(spec)
        rng = np.random.default_rng(n_total)
        sch = ControlSchedule(3, 4.0, rng.uniform(-np.pi, np.pi, (3, 1)))
        u_full = full_propagate_schedule(spec, coupling, sch)
        u1 = one_excitation_block(u_full, n_total)
        rho_s = random_density_matrix(rng, 3)
        rho_r = receiver_density(u1, embed_sender_state(rho_s, spec), spec)
        # full-space route
        dim = 2 ** n_total
        rho_full = np.zeros((dim, dim), dtype=complex)
        exc = one_excitation_indices(n_total)
        emb = [0, exc[0], exc[1]]
        for i, fi in enumerate(emb):
            for j, fj in enumerate(emb):
                rho_full[fi, fj] = rho_s[i, j]
        reduced = full_partial_trace_receiver(
            spec, u_full @ rho_full @ u_full.conj().T
        )
        # receiver bits: first receiver site is the MSB of the 2-bit index
        perm = [0, 2, 1]  # sector index -> full receiver-space index
        mapped = np.zeros((3, 3), dtype=complex)
        for i in range(3):
            for j in range(3):
                mapped[i, j] = reduced[perm[i], perm[j]]
        assert np.max(np.abs(mapped - rho_r)) < 1e-10


class TestRestoreCheck:
    def _converged_u(self, spec, coupling):
        from spinrestore import SolveProblem, multi_start
        from spinrestore.propagator import ScheduleEngine

        prob = SolveProblem(
            spec, coupling, EvolutionModel("exact"), tau_reg=20.0, k_omega=4,
            seed=0, n_starts=32,
        )
        sols = multi_start(prob)
        best = min(sols.converged, key=lambda s: s.residual_norm)
        engine = ScheduleEngine(spec, coupling, prob.model, 20.0, 4)
        return engine.compose_full(best.angles)

    def test_ground_state_zero_deviation(self, spec6, coupling6):
        rng = np.random.default_rng(5)
        sch = ControlSchedule(4, 5.0, rng.uniform(-np.pi, np.pi, (4, 1)))
        u = compose_schedule(spec6, coupling6, sch, EvolutionModel("exact")).u1
        lam = lambdas(receiver_block(u, spec6))
        assert restore_check(u, ground_state(3), lam, spec6) < 1e-14

    def test_identity_propagator_trivially_satisfies_with_zero_lambda(self, spec6):
        # identity leaves the receiver empty; lambda = 0 makes both sides vanish
        u = np.eye(6, dtype=complex)
        lam = lambdas(receiver_block(u, spec6))
        rho_s = np.array(
            [[0.5, 0.2 - 0.1j, 0.0], [0.2 + 0.1j, 0.3, 0.1j], [0.0, -0.1j, 0.2]]
        )
        assert restore_check(u, rho_s, lam, spec6) == 0.0

    def test_crossed_permutation_deviation(self, spec6):
        # send sender site 1 into receiver slot 2: an off-diagonal leak with
        # zero lambdas, so the deviation is the leaked population / coherence
        u = np.zeros((6, 6), dtype=complex)
        u[5, 0] = 1.0
        rest = [1, 2, 3, 4]
        free = [0, 1, 2, 3, 4]
        for r, c in zip(free[:4], rest):
            u[r, c] = 1.0
        u[4, 5] = 1.0
        assert np.allclose(u @ u.conj().T, np.eye(6))
        lam = lambdas(receiver_block(u, spec6))
        assert np.array_equal(lam.lam, [0, 0])
        rho_s = np.array(
            [[0.5, 0.2 - 0.1j, 0.0], [0.2 + 0.1j, 0.3, 0.1j], [0.0, -0.1j, 0.2]]
        )
        dev = restore_check(u, rho_s, lam, spec6)
        expected = max(abs(rho_s[1, 1]), abs(rho_s[1, 0]))
        assert dev == pytest.approx(expected)

    def test_converged_solution_restores(self, spec6, coupling6):
        u = self._converged_u(spec6, coupling6)
        lam = lambdas(receiver_block(u, spec6))
        rng = np.random.default_rng(6)
        worst = 0.0
        for _ in range(20):
            rho_s = random_density_matrix(rng, 3)
            worst = max(worst, restore_check(u, rho_s, lam, spec6))
        assert worst < 1e-8

    def test_diagonal_restoring(self, spec6, coupling6):
        u = self._converged_u(spec6, coupling6)
        lam = lambdas(receiver_block(u, spec6))
        rng = np.random.default_rng(7)
        for _ in range(5):
            rho_s = random_density_matrix(rng, 3)
            rho_r = receiver_density(u, embed_sender_state(rho_s, spec6), spec6)
            for p in range(2):
                expected = abs(lam.lam[p]) ** 2 * rho_s[p + 1, p + 1].real
                assert rho_r[p + 1, p + 1].real == pytest.approx(expected, abs=1e-8)

    def test_near_diagonal_block_bounds_deviation(self, spec6, coupling6):
        # leakage through an almost-diagonal receiver block stays linear
        rng = np.random.default_rng(8)
        u = self._converged_u(spec6, coupling6)
        delta = 1e-4
        u_pert = u.copy()
        u_pert[4, 1] += delta  # receiver slot 1, sender slot 2
        lam = lambdas(receiver_block(u_pert, spec6))
        worst = 0.0
        for _ in range(20):
            rho_s = random_density_matrix(rng, 3)
            worst = max(worst, restore_check(u_pert, rho_s, lam, spec6))
        assert worst <= 4 * delta


class TestEvolveState:
    def test_vacuum_invariant(self, spec6, coupling6):
        rng = np.random.default_rng(9)
        sch = ControlSchedule(4, 5.0, rng.uniform(-np.pi, np.pi, (4, 1)))
        u = compose_schedule(spec6, coupling6, sch, EvolutionModel("exact")).u1
        rho = np.zeros((7, 7), dtype=complex)
        rho[0, 0] = 1.0
        assert np.allclose(evolve_state(u, rho), rho, atol=1e-14)

    def test_offdiag_helper_order(self):
        b = np.array([[1, 2], [3, 4]], dtype=complex)
        assert np.array_equal(offdiag_entries(b), [2, 3])
