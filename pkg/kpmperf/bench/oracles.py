"""Dense reference computations for small systems.

These are deliberately independent of the sparse code paths: the Hamiltonian
is assembled block by block in a dense array, spectra come from a dense
eigensolver and Chebyshev polynomials are evaluated through Vandermonde
matrices.
"""

import numpy as np
from numpy.polynomial import chebyshev
import scipy.linalg

from ..core.conventions import ORBITALS
from ..core.lattice import GammaSet, HOPPING


def denseHamiltonian(domain, t=HOPPING, gammas=None):
    """Dense Hamiltonian of ``domain`` built by looping over sites and bonds."""
    gammas = gammas or GammaSet.default()
    N = domain.N
    if N > 20000:
        raise ValueError(f'Dense oracle refuses N = {N}.')
    H = np.zeros((N, N), dtype=np.complex128)
    for z in range(domain.nz):
        for y in range(domain.ny):
            for x in range(domain.nx):
                n = domain.siteIndex(x, y, z)
                s = slice(ORBITALS * n, ORBITALS * (n + 1))
                v = float(domain.potential.siteValues(x, y, z))
                H[s, s] += gammas.onsiteBlock(v)
                coords = [x, y, z]
                for axis in range(3):
                    nbr = list(coords)
                    nbr[axis] += 1
                    if nbr[axis] == domain.extents[axis]:
                        if not domain.periodic[axis]:
                            continue
                        nbr[axis] = 0
                    m = domain.siteIndex(*nbr)
                    d = slice(ORBITALS * m, ORBITALS * (m + 1))
                    T = gammas.hoppingBlock(axis, t)
                    H[d, s] += T
                    H[s, d] += T.conj().T
    return H


def denseEigenvalues(H):
    """Eigenvalues of a Hermitian matrix (dense array or SparseMatrix), ascending."""
    if hasattr(H, 'toDense'):
        H = H.toDense()
    return scipy.linalg.eigh(H, eigvals_only=True)


def denseMoments(H, bounds, v0, M):
    """
    Normalized Chebyshev moments <v0|T_m(H~)|v0>/<v0|v0> for one start
    vector, from the eigendecomposition of H.
    """
    if hasattr(H, 'toDense'):
        H = H.toDense()
    lam, U = scipy.linalg.eigh(H)
    weights = np.abs(U.conj().T @ np.ravel(v0)) ** 2
    T = chebyshev.chebvander(bounds.toScaled(lam), M - 1)
    return weights @ T / weights.sum()


def denseTraceMoments(eigenvalues, bounds, M):
    """(1/N) tr T_m(H~) from the eigenvalues of H."""
    T = chebyshev.chebvander(bounds.toScaled(eigenvalues), M - 1)
    return T.mean(axis=0)


def scalarEta(x, M, eta0=1.0):
    """
    Scalar products of the recurrence for the 1x1 matrix (x):
    eta_2m = T_m(x)^2*eta0, eta_2m+1 = T_m+1(x)*T_m(x)*eta0.
    """
    T = chebyshev.chebvander(np.array([x]), M // 2)[0]
    eta = np.empty(M)
    eta[0::2] = T[:-1] ** 2 * eta0
    eta[1::2] = T[1:] * T[:-1] * eta0
    return eta


def eigenvalueHistogram(eigenvalues, edges):
    """Eigenvalue count per bin."""
    counts, _ = np.histogram(eigenvalues, bins=edges)
    return counts
