import numpy as np
import pytest

from twosystem.model import PolynomialHamiltonian, standard_j


def random_symmetric(rng, d, scale=1.0):
    A = rng.normal(size=(d, d)) * scale
    return 0.5 * (A + A.T)


def random_spd(rng, d, low=0.5, high=2.0):
    """Symmetric positive definite matrix with eigenvalues in [low, high]."""
    Qm, _ = np.linalg.qr(rng.normal(size=(d, d)))
    return (Qm * rng.uniform(low, high, size=d)) @ Qm.T


def random_sp(rng, n, scale=1.0):
    """Random element of sp(2n): J times a symmetric matrix."""
    return standard_j(n) @ random_symmetric(rng, 2 * n, scale)


def random_polynomial(rng, n, n_terms=8, max_exp=3):
    d = 2 * n
    terms = [(rng.normal(), tuple(rng.integers(0, max_exp + 1, size=d)))
             for _ in range(n_terms)]
    return PolynomialHamiltonian(n, terms)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
