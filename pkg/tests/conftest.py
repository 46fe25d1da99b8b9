import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_hermitian(rng, d):
    a = random_complex(rng, d, d)
    return 0.5 * (a + a.conj().T)


def random_density(rng, d):
    a = random_complex(rng, d, d)
    rho = a @ a.conj().T
    return rho / np.trace(rho)
