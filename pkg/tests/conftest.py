from pathlib import Path

import numpy as np
import pytest

from relatime import DensityMatrix, Hamiltonian, spectral_decompose

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def random_hermitian(rng, dim: int, scale: float = 1.0) -> np.ndarray:
    """Random Hermitian matrix with spectral radius <= scale."""
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = 0.5 * (a + a.conj().T)
    radius = float(np.max(np.abs(np.linalg.eigvalsh(h))))
    return h * (scale / max(radius, 1e-12))


def random_hamiltonian(rng, dim: int, scale: float = 1.0) -> Hamiltonian:
    return spectral_decompose(random_hermitian(rng, dim, scale))


def random_density(rng, dim: int) -> DensityMatrix:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return DensityMatrix(rho / np.trace(rho))


def random_pure_density(rng, dim: int) -> DensityMatrix:
    vec = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    vec /= np.linalg.norm(vec)
    return DensityMatrix(np.outer(vec, vec.conj()))


def plus_density(dim: int = 2) -> DensityMatrix:
    return DensityMatrix(np.full((dim, dim), 1.0 / dim))


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
