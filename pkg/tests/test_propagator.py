import numpy as np
import pytest

from spinrestore import (
    ChainSpec,
    ControlSchedule,
    EvolutionModel,
    build_couplings,
    compose_schedule,
    compose_schedule_exact,
    one_excitation_hamiltonian,
)
from spinrestore.propagator import (
    exact_segment,
    expm_herm,
    pulse_segment,
    trotter_segment,
)

from conftest import random_zero_sum_omega


def free_hamiltonian(spec):
    return one_excitation_hamiltonian(build_couplings(spec), np.zeros(spec.n_total))


class TestExactSegment:
    def test_zero_duration_is_identity(self, spec6, coupling6):
        h = one_excitation_hamiltonian(coupling6, np.zeros(6))
        u = exact_segment(h, 0.0).u1
        assert np.allclose(u, np.eye(6))

    def test_two_site_closed_form(self):
        h = np.array([[0.0, 0.5], [0.5, 0.0]])
        u = exact_segment(h, np.pi).u1
        expected = np.array([[0, -1j], [-1j, 0]])
        assert np.max(np.abs(u - expected)) < 1e-12

    def test_unitarity(self, spec6, coupling6):
        rng = np.random.default_rng(2)
        omega = random_zero_sum_omega(rng, spec6)
        h = one_excitation_hamiltonian(coupling6, omega)
        u = exact_segment(h, 3.7).u1
        assert np.max(np.abs(u @ u.conj().T - np.eye(6))) < 1e-12


class TestTrotterSegment:
    def test_zero_field_matches_exact(self, spec6):
        h0 = free_hamiltonian(spec6)
        for n in (1, 7, 60):
            ut = trotter_segment(h0, np.zeros(6), 2.5, n).u1
            ue = exact_segment(h0, 2.5).u1
            assert np.max(np.abs(ut - ue)) < 1e-12

    def test_first_order_convergence(self, spec6):
        h0 = free_hamiltonian(spec6)
        rng = np.random.default_rng(3)
        omega = random_zero_sum_omega(rng, spec6)
        full = h0.copy()
        full[np.diag_indices(6)] = -omega
        ue = exact_segment(full, 1.0).u1
        errs = {
            n: np.max(np.abs(trotter_segment(h0, omega, 1.0, n).u1 - ue))
            for n in (40, 80, 160)
        }
        assert 1.5 < errs[40] / errs[80] < 2.5
        assert 1.5 < errs[80] / errs[160] < 2.5

    def test_n60_beats_n10_by_factor_four(self, spec6):
        h0 = free_hamiltonian(spec6)
        rng = np.random.default_rng(4)
        omega = random_zero_sum_omega(rng, spec6)
        full = h0.copy()
        full[np.diag_indices(6)] = -omega
        ue = exact_segment(full, 1.0).u1
        e10 = np.max(np.abs(trotter_segment(h0, omega, 1.0, 10).u1 - ue))
        e60 = np.max(np.abs(trotter_segment(h0, omega, 1.0, 60).u1 - ue))
        assert e60 <= e10 / 4


class TestPulseSegment:
    def test_zero_field_free_evolution(self, spec6):
        h0 = free_hamiltonian(spec6)
        eps = 0.25
        approx, exact_ref = pulse_segment(h0, np.zeros(6), 1.5, eps)
        assert np.allclose(approx.u1, expm_herm(h0, 1.5), atol=1e-12)
        assert np.allclose(exact_ref.u1, expm_herm(h0, 1.5 * (1 + eps)), atol=1e-12)

    def test_approx_independent_of_eps(self, spec6):
        h0 = free_hamiltonian(spec6)
        rng = np.random.default_rng(5)
        omega = random_zero_sum_omega(rng, spec6)
        a1, _ = pulse_segment(h0, omega, 1.0, 0.3)
        a2, _ = pulse_segment(h0, omega, 1.0, 0.003)
        assert np.array_equal(a1.u1, a2.u1)

    def test_eps_halving_halves_error(self, spec6):
        h0 = free_hamiltonian(spec6)
        rng = np.random.default_rng(6)
        omega = random_zero_sum_omega(rng, spec6)

        def err(eps):
            a, e = pulse_segment(h0, omega, 1.0, eps)
            return np.max(np.abs(a.u1 - e.u1))

        assert 1.5 < err(0.02) / err(0.01) < 2.5
        assert 1.5 < err(0.01) / err(0.005) < 2.5


ALL_MODELS = [
    EvolutionModel("exact"),
    EvolutionModel("trotter", n=10),
    EvolutionModel("trotter", n=60),
    EvolutionModel("pulse", eps_tilde=0.5),
    EvolutionModel("pulse", eps_tilde=0.01),
]


class TestComposeSchedule:
    def test_zero_duration_identity(self, spec6, coupling6):
        sch = ControlSchedule(4, 0.0, np.zeros((4, 1)))
        for model in ALL_MODELS:
            u = compose_schedule(spec6, coupling6, sch, model).u1
            assert np.array_equal(u, np.eye(6, dtype=complex))

    def test_single_segment_exact_equals_segment(self, spec6, coupling6):
        rng = np.random.default_rng(7)
        sch = ControlSchedule(1, 4.0, rng.uniform(-1, 1, (1, 1)))
        u = compose_schedule(spec6, coupling6, sch, EvolutionModel("exact")).u1
        omega = sch.omega_table(spec6)[0]
        h = one_excitation_hamiltonian(coupling6, omega)
        assert np.max(np.abs(u - exact_segment(h, 4.0).u1)) < 1e-12

    def test_zero_angles_free_evolution_all_models(self, spec6, coupling6):
        h0 = free_hamiltonian(spec6)
        sch = ControlSchedule(4, 6.0, np.zeros((4, 1)))
        ref = expm_herm(h0, 6.0)
        for model in ALL_MODELS:
            u = compose_schedule(spec6, coupling6, sch, model).u1
            assert np.max(np.abs(u - ref)) < 1e-10, model

    def test_unitarity_and_determinant(self, spec6, coupling6):
        rng = np.random.default_rng(8)
        sch = ControlSchedule(4, 9.0, rng.uniform(-np.pi, np.pi, (4, 1)))
        for model in ALL_MODELS:
            u = compose_schedule(spec6, coupling6, sch, model).u1
            assert np.max(np.abs(u @ u.conj().T - np.eye(6))) < 1e-10
            assert abs(abs(np.linalg.det(u)) - 1) < 1e-8

    def test_exact_grid_refinement_invariance(self, spec6, coupling6):
        rng = np.random.default_rng(9)
        angles = rng.uniform(-1, 1, (1, 1))
        sch1 = ControlSchedule(1, 3.0, angles)
        sch2 = ControlSchedule(2, 3.0, np.repeat(angles, 2, axis=0))
        u1 = compose_schedule(spec6, coupling6, sch1, EvolutionModel("exact")).u1
        u2 = compose_schedule(spec6, coupling6, sch2, EvolutionModel("exact")).u1
        assert np.max(np.abs(u1 - u2)) < 1e-12

    def test_trotter_error_decreases_in_n(self, spec6, coupling6):
        rng = np.random.default_rng(10)
        sch = ControlSchedule(4, 8.0, rng.uniform(-np.pi, np.pi, (4, 1)))
        ref = compose_schedule_exact(
            spec6, coupling6, sch, EvolutionModel("trotter", n=10)
        ).u1
        errs = [
            np.max(
                np.abs(
                    compose_schedule(spec6, coupling6, sch, EvolutionModel("trotter", n=n)).u1
                    - ref
                )
            )
            for n in (10, 20, 30, 60)
        ]
        assert all(a > b for a, b in zip(errs, errs[1:]))

    def test_pulse_exact_reference_converges(self, spec6, coupling6):
        rng = np.random.default_rng(11)
        sch = ControlSchedule(4, 8.0, rng.uniform(-np.pi, np.pi, (4, 1)))
        approx = compose_schedule(
            spec6, coupling6, sch, EvolutionModel("pulse", eps_tilde=0.5)
        ).u1
        errs = []
        for eps in (0.01, 0.001, 0.0001):
            ref = compose_schedule_exact(
                spec6, coupling6, sch, EvolutionModel("pulse", eps_tilde=eps)
            ).u1
            errs.append(np.max(np.abs(approx - ref)))
        assert errs[0] > errs[1] > errs[2]
        assert errs[0] / errs[2] > 10
