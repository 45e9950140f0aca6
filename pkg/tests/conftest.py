import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def rand_pd(k, rng, jitter=0.5):
    """Random Hermitian positive-definite matrix."""
    a = (rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))) / np.sqrt(2)
    return a @ a.conj().T + jitter * k * np.eye(k)


def rand_cvec(k, rng):
    return (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2)
