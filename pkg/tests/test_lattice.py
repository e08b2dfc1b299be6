import numpy as np
import pytest

from kpmperf.core.errors import SizingError
from kpmperf.core.lattice import (Domain, PotentialSpec, GammaSet, SpectralBounds,
    buildHamiltonian, estimateBounds, applyShiftScale, isHermitian)
from kpmperf.core.sparsemat import SparseMatrix, crsToSell
from kpmperf.bench import oracles


def test_gammas_clifford():
    G = GammaSet.default()
    assert G.isClifford()
    for a in range(1, 5):
        for b in range(1, 5):
            expected = 2 * np.eye(4) if a == b else np.zeros((4, 4))
            np.testing.assert_allclose(G.anticommutator(a, b), expected, atol=1e-15)


def test_hamiltonian_hermitian(small_H, tiny_H):
    assert isHermitian(small_H)
    assert isHermitian(tiny_H)


def test_nonzeros_per_row_open_z(small_H):
    # bulk rows hold 13 entries, the two open z faces 11
    lengths = small_H.rowLengths()
    assert set(np.unique(lengths)) == {11, 13}
    assert small_H.nnzPerRow == pytest.approx(12.5)


def test_nonzeros_per_row_torus():
    H = buildHamiltonian(Domain(3, 4, 5, periodic=(True, True, True)))
    assert np.all(H.rowLengths() == 13)
    assert H.nnz == 13 * H.nrows


def test_matches_dense_assembly(tiny_domain, tiny_H):
    dense = oracles.denseHamiltonian(tiny_domain)
    assert np.array_equal(tiny_H.toDense(), dense)


def test_superlattice_matches_dense_assembly():
    domain = Domain(6, 4, 3, potential=PotentialSpec.superlattice((3, 2, 3), -0.5, 1))
    H = buildHamiltonian(domain)
    assert np.array_equal(H.toDense(), oracles.denseHamiltonian(domain))
    assert isHermitian(H)


def test_superlattice_site_values():
    pot = PotentialSpec.superlattice((4, 4, 4), 1.5, 2)
    values = pot.siteValues(np.array([0, 1, 2, 5]), np.array([0, 1, 0, 4]),
        np.array([0, 0, 0, 1]))
    np.testing.assert_array_equal(values, [1.5, 1.5, 0.0, 1.5])


def test_uniform_potential_shifts_spectrum(tiny_domain):
    shifted = Domain(4, 4, 4, potential=PotentialSpec.uniform(0.3))
    e0 = oracles.denseEigenvalues(buildHamiltonian(tiny_domain))
    e1 = oracles.denseEigenvalues(buildHamiltonian(shifted))
    np.testing.assert_allclose(e1, e0 + 0.3, atol=1e-12)


def test_translation_invariance_x(tiny_domain, tiny_H):
    # shifting every site by one lattice constant along a periodic axis
    n = np.arange(tiny_domain.nsites)
    x, y, z = tiny_domain.siteCoords(n)
    site_map = tiny_domain.siteIndex((x + 1) % tiny_domain.nx, y, z)
    perm = (4 * site_map[:, None] + np.arange(4)).ravel()
    A = tiny_H.toDense()
    P = np.zeros_like(A)
    P[perm, np.arange(A.shape[0])] = 1
    np.testing.assert_array_equal(P @ A @ P.T, A)


def test_invalid_potential():
    with pytest.raises(ValueError):
        PotentialSpec('random')
    with pytest.raises(ValueError):
        PotentialSpec.superlattice((0, 1, 1), 1.0, 1)


def test_domain_validation():
    with pytest.raises(ValueError):
        Domain(0, 4, 4)
    assert str(Domain(2, 3, 4)) == '2x3x4'
    assert Domain(2, 3, 4).N == 96


def test_index_range_overflow():
    with pytest.raises(SizingError):
        buildHamiltonian(Domain(1024, 1024, 1024))


def test_bounds_enclose_spectrum(tiny_H):
    bounds = estimateBounds(tiny_H)
    eigs = oracles.denseEigenvalues(tiny_H)
    lo, hi = bounds.enclosure
    assert lo <= eigs[0] and eigs[-1] <= hi
    assert np.max(np.abs(bounds.toScaled(eigs))) <= 1 - bounds.epsilon + 1e-12


def test_bounds_diagonal():
    bounds = estimateBounds(SparseMatrix.fromScipy(np.diag([-2.0, 2.0])))
    assert bounds.b == pytest.approx(0.0)
    assert bounds.a == pytest.approx(0.495)


def test_bounds_multiple_of_identity():
    bounds = estimateBounds(SparseMatrix.identity(5, scale=3.0))
    assert bounds.b == pytest.approx(3.0)
    assert bounds.a == pytest.approx(0.99)


def test_spectral_bounds_validation():
    with pytest.raises(ValueError):
        SpectralBounds(-1.0, 0.0)
    with pytest.raises(ValueError):
        SpectralBounds(1.0, 0.0, epsilon=0.5)
    b = SpectralBounds(0.5, 1.0)
    np.testing.assert_allclose(b.toEnergy(b.toScaled([0.0, 2.5])), [0.0, 2.5])


def test_shift_scale_diagonal():
    H = SparseMatrix.fromScipy(np.diag([1.0, 3.0]))
    scaled = applyShiftScale(H, SpectralBounds(2.0, 1.0))
    np.testing.assert_array_equal(scaled.toDense(), np.diag([0.0, 4.0]))
    # the zero diagonal entry stays stored
    assert scaled.nnz == 2
    assert 'bounds' not in H.meta


def test_shift_scale_keeps_sell(tiny_H):
    bounds = estimateBounds(tiny_H)
    scaled = applyShiftScale(crsToSell(tiny_H, 4, 16), bounds)
    assert scaled.chunk_height == 4 and scaled.sigma == 16
    expected = bounds.a * (tiny_H.toDense() - bounds.b * np.eye(tiny_H.nrows))
    np.testing.assert_allclose(scaled.toDense(), expected, atol=1e-14)
