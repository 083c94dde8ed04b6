import numpy as np
import pytest

from spinrestore import ChainSpec, build_couplings


@pytest.fixture
def spec6():
    return ChainSpec(n_total=6, n_sender=2, n_receiver=2, n_ext_receiver=2)


@pytest.fixture
def coupling6(spec6):
    return build_couplings(spec6)


def random_density_matrix(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_zero_sum_omega(rng, spec):
    omega = np.zeros(spec.n_total)
    vals = rng.uniform(-2.0, 2.0, size=spec.n_ext_receiver - 1)
    omega[spec.ext_receiver_sites[:-1]] = vals
    omega[spec.ext_receiver_sites[-1]] = -vals.sum()
    return omega
