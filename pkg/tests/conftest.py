import numpy as np
import pytest

from kpmperf.core.lattice import Domain, buildHamiltonian, estimateBounds
from kpmperf.core.sparsemat import SparseMatrix, randomBlockVector


@pytest.fixture(scope='session')
def tiny_domain():
    return Domain(4, 4, 4)


@pytest.fixture(scope='session')
def tiny_H(tiny_domain):
    return buildHamiltonian(tiny_domain)


@pytest.fixture(scope='session')
def small_domain():
    return Domain(8, 8, 8)


@pytest.fixture(scope='session')
def small_H(small_domain):
    return buildHamiltonian(small_domain)


@pytest.fixture(scope='session')
def small_bounds(small_H):
    return estimateBounds(small_H)


@pytest.fixture
def block(small_H):
    return randomBlockVector(small_H.nrows, 4, seed=7)


@pytest.fixture
def irregular():
    """Small Hermitian matrix with uneven row lengths and an empty row."""
    rng = np.random.default_rng(3)
    n = 37
    A = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        if i == 5:
            continue
        k = 1 + (i * 7) % 9
        cols = rng.choice([j for j in range(n) if j != 5], size=k, replace=False)
        A[i, cols] = rng.normal(size=k) + 1j * rng.normal(size=k)
    A = A + A.conj().T
    return SparseMatrix.fromScipy(A)
