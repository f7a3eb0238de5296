"""Shared random-object helpers for the test suite."""

import numpy as np
import pytest

from qmeas.measurement import MeasurementSystem


def random_density(rng, dim):
    """A random full-rank density matrix (Wishart normalized to trace one)."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_unit_pair(rng):
    """A Haar-ish random orthonormal basis of C^2."""
    u = rng.uniform(-1.0, 1.0)
    phi = rng.uniform(0.0, 2.0 * np.pi)
    a = np.sqrt((1.0 + u) / 2.0)
    b = np.sqrt((1.0 - u) / 2.0) * np.exp(1j * phi)
    extra = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
    b0 = np.array([a, b], dtype=complex)
    b1 = np.array([-np.conj(b), np.conj(a)], dtype=complex) * extra
    return b0, b1


def random_basis(rng, periods=3):
    """A random measurement system with the given period length."""
    return MeasurementSystem.explicit([random_unit_pair(rng) for _ in range(periods)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
