"""Shared random-state generators and tolerances for the test suite."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True)
settings.load_profile("default")


def random_density(rng, dim, rank=None):
    """Ginibre-distributed density matrix of the given rank (full rank by default)."""
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return m / np.real(np.trace(m))


def random_psd(rng, dim, rank=None, scale=1.0):
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    return scale * (g @ g.conj().T)


def random_hermitian(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (g + g.conj().T)


def random_pure(rng, dim):
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def dense_sqrt_fidelity(rho, sigma, cutoff=1e-13):
    """Independent oracle: dense square root and full spectrum of the sandwich.

    Eigenvalues below ``cutoff`` times the largest are treated as zero;
    otherwise round-off directions of a rank-deficient ``rho`` each add
    about ``sqrt(1e-17)`` to the trace.
    """
    w, v = np.linalg.eigh(rho)
    s = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    k = s @ sigma @ s
    lam = np.linalg.eigvalsh(0.5 * (k + k.conj().T))
    lam = np.where(lam > cutoff * max(lam.max(), 0.0), lam, 0.0)
    return float(np.sum(np.sqrt(lam)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
