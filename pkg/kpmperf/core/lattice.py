'''Topological insulator Hamiltonian on a cuboid lattice.

Sites are numbered ``n = x + nx*(y + ny*z)`` and each carries four
orbital/spin components, so matrix row ``4*n + o`` belongs to orbital ``o`` of
site ``n``. Bonds along axis j couple neighbouring sites through the block
``-t*(G1 - i*G(j+1))/2`` and each site carries ``V_n*G0 + 2*G1``.
'''

import logging
logger = logging.getLogger('kpmperf')

from dataclasses import dataclass, field
import numpy as np
import scipy.sparse as sp

from .conventions import ORBITALS, INDEX_MAX, X, Y, Z
from .errors import SizingError
from .sparsemat import SparseMatrix, crsToSell
from .conventions import Layout


'''Nearest-neighbour hopping amplitude; energies are in units of t.'''
HOPPING = 1.0

'''Default safety margin keeping the scaled spectrum off +-1.'''
EPSILON = 0.01

SIGMA_0 = np.eye(2, dtype=np.complex128)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


@dataclass(frozen=True)
class PotentialSpec:
    """
    On-site potential V_n.

    ``variant`` is one of ``'zero'``, ``'uniform'`` (every site gets
    ``value``) or ``'superlattice'`` (sites inside dot cuboids of edge
    ``dot_size``, repeated every ``spacing`` sites per axis, get ``depth``;
    all other sites 0).
    """

    variant: str = 'zero'
    value: float = 0.0
    spacing: tuple = (1, 1, 1)
    depth: float = 0.0
    dot_size: int = 1

    VARIANTS = ('zero', 'uniform', 'superlattice')

    def __post_init__(self):
        if self.variant not in self.VARIANTS:
            raise ValueError(f'Unknown potential "{self.variant}". '
                f'Use one of {list(self.VARIANTS)}.')
        if self.variant == 'superlattice':
            if len(self.spacing) != 3 or any(int(s) < 1 for s in self.spacing):
                raise ValueError('Superlattice spacing must be three positive integers.')
            if self.dot_size < 1:
                raise ValueError('Superlattice dot size must be positive.')
            object.__setattr__(self, 'spacing', tuple(int(s) for s in self.spacing))

    @classmethod
    def zero(cls):
        return cls('zero')

    @classmethod
    def uniform(cls, v):
        return cls('uniform', value=float(v))

    @classmethod
    def superlattice(cls, spacing, depth, dot_size):
        return cls('superlattice', spacing=tuple(spacing), depth=float(depth),
            dot_size=int(dot_size))

    def siteValues(self, x, y, z):
        """Potential of the sites with the given coordinate arrays."""
        x = np.asarray(x)
        if self.variant == 'zero':
            return np.zeros(x.shape)
        if self.variant == 'uniform':
            return np.full(x.shape, self.value)
        sx, sy, sz = self.spacing
        inside = (x % sx < self.dot_size) & (np.asarray(y) % sy < self.dot_size) & \
            (np.asarray(z) % sz < self.dot_size)
        return np.where(inside, self.depth, 0.0)


@dataclass(frozen=True)
class Domain:
    """
    Lattice sample of ``nx*ny*nz`` sites.

    Attributes
    ----------
    nx, ny, nz : :obj:`int`
        Lattice extents.
    potential : :obj:`PotentialSpec`
        On-site potential.
    periodic : :obj:`tuple`
        Boundary condition per axis; periodic in x and y, open in z by
        default.
    """

    nx: int
    ny: int
    nz: int
    potential: PotentialSpec = field(default_factory=PotentialSpec.zero)
    periodic: tuple = (True, True, False)

    def __post_init__(self):
        if min(self.nx, self.ny, self.nz) < 1:
            raise ValueError(f'Lattice extents must be positive, got {self.extents}.')
        if len(self.periodic) != 3:
            raise ValueError('Need one boundary flag per axis.')
        object.__setattr__(self, 'periodic', tuple(bool(p) for p in self.periodic))

    @property
    def extents(self):
        return (self.nx, self.ny, self.nz)

    @property
    def nsites(self):
        return self.nx * self.ny * self.nz

    @property
    def N(self):
        """Matrix dimension, four components per site."""
        return ORBITALS * self.nsites

    def siteIndex(self, x, y, z):
        return x + self.nx * (y + self.ny * z)

    def siteCoords(self, n):
        n = np.asarray(n)
        return n % self.nx, (n // self.nx) % self.ny, n // (self.nx * self.ny)

    def __str__(self):
        return f'{self.nx}x{self.ny}x{self.nz}'


@dataclass(frozen=True)
class GammaSet:
    """
    Five Hermitian 4x4 matrices; G1..G4 satisfy the Clifford algebra.

    The representation is G0 = 1, G1 = sz (x) 1, G(j+1) = sx (x) s_j for
    j = 1, 2, 3.
    """

    gammas: tuple

    @classmethod
    def default(cls):
        g = [np.eye(4, dtype=np.complex128), np.kron(SIGMA_Z, SIGMA_0)]
        g += [np.kron(SIGMA_X, s) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)]
        return cls(tuple(g))

    def __getitem__(self, a):
        return self.gammas[a]

    def __len__(self):
        return len(self.gammas)

    def anticommutator(self, a, b):
        return self[a] @ self[b] + self[b] @ self[a]

    def isClifford(self, atol=1e-15):
        """True if every G is Hermitian and {Ga, Gb} = 2*delta_ab for a, b >= 1."""
        if not all(np.allclose(g, g.conj().T, rtol=0, atol=atol) for g in self.gammas):
            return False
        eye = np.eye(4)
        return all(np.allclose(self.anticommutator(a, b), 2 * (a == b) * eye,
            rtol=0, atol=atol) for a in range(1, 5) for b in range(1, 5))

    def hoppingBlock(self, axis, t=HOPPING):
        """Block coupling site n to site n + e_axis, placed at H[n+e, n]."""
        return -t * (self[1] - 1j * self[axis + 2]) / 2

    def onsiteBlock(self, v):
        return v * self[0] + 2 * self[1]


@dataclass(frozen=True)
class SpectralBounds:
    """
    Shift and scale for H~ = a*(H - b*1).

    Attributes
    ----------
    a : :obj:`float`
        Scale, positive.
    b : :obj:`float`
        Shift, the centre of the estimated spectrum.
    epsilon : :obj:`float`
        Safety margin in (0, 0.5); the estimated spectrum maps onto
        ``[-1+epsilon, 1-epsilon]``.
    """

    a: float
    b: float
    epsilon: float = EPSILON

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f'Scale a must be positive, got {self.a}.')
        if not 0 < self.epsilon < 0.5:
            raise ValueError(f'epsilon must lie in (0, 0.5), got {self.epsilon}.')

    @property
    def interval(self):
        """Energies mapped onto [-1, 1]."""
        return (self.b - 1 / self.a, self.b + 1 / self.a)

    @property
    def enclosure(self):
        """Energies mapped onto [-1+epsilon, 1-epsilon]."""
        h = (1 - self.epsilon) / self.a
        return (self.b - h, self.b + h)

    def toScaled(self, energies):
        return self.a * (np.asarray(energies) - self.b)

    def toEnergy(self, x):
        return np.asarray(x) / self.a + self.b


def _bondPairs(domain, axis):
    """Source and target sites of every bond along ``axis``."""
    n = np.arange(domain.nsites, dtype=np.int64)
    coords = list(domain.siteCoords(n))
    extent = domain.extents[axis]
    if domain.periodic[axis]:
        src = n
    else:
        src = n[coords[axis] < extent - 1]
        coords = [c[coords[axis] < extent - 1] for c in coords]
    coords[axis] = (coords[axis] + 1) % extent
    return src, domain.siteIndex(*coords)


def _blockTriplets(block, row_sites, col_sites):
    """COO triplets of the same 4x4 block placed at (row_site, col_site) pairs."""
    p, q = np.nonzero(block)
    rows = (ORBITALS * row_sites[:, None] + p[None, :]).ravel()
    cols = (ORBITALS * col_sites[:, None] + q[None, :]).ravel()
    vals = np.broadcast_to(block[p, q], (row_sites.size, p.size)).ravel()
    return rows, cols, vals


def buildHamiltonian(domain, t=HOPPING, gammas=None):
    """
    Assemble the Hamiltonian of ``domain`` as a CRS matrix.

    Parameters
    ----------
    domain : :obj:`Domain`
        Lattice sample and potential.
    t : :obj:`float`, optional
        Hopping amplitude.
    gammas : :obj:`GammaSet`, optional
        Dirac matrix representation, :obj:`GammaSet.default` if omitted.

    Returns
    -------
    :obj:`.core.sparsemat.SparseMatrix`
        Hermitian matrix of dimension ``domain.N`` with structural zeros
        removed.
    """
    if domain.N - 1 > INDEX_MAX:
        raise SizingError(f'Domain {domain} has N = {domain.N} rows, beyond the '
            f'32-bit index range.')
    gammas = gammas or GammaSet.default()
    N = domain.N
    parts = []

    sites = np.arange(domain.nsites, dtype=np.int64)
    potential = domain.potential.siteValues(*domain.siteCoords(sites))
    onsite = np.diagonal(gammas.onsiteBlock(0.0)).real
    rows = (ORBITALS * sites[:, None] + np.arange(ORBITALS)).ravel()
    parts.append((rows, rows, (potential[:, None] + onsite[None, :]).ravel()))

    for axis in (X, Y, Z):
        src, dst = _bondPairs(domain, axis)
        if src.size == 0:
            continue
        T = gammas.hoppingBlock(axis, t)
        parts.append(_blockTriplets(T, dst, src))
        parts.append(_blockTriplets(T.conj().T, src, dst))

    rows, cols, vals = (np.concatenate(c) for c in zip(*parts))
    A = sp.coo_matrix((vals.astype(np.complex128), (rows, cols)), shape=(N, N)).tocsr()
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    H = SparseMatrix.fromScipy(A, name=f'TI {domain}',
        meta={'domain': domain, 'hopping': t})
    logger.info(f'Built Hamiltonian for {domain}: N={H.nrows}, nnz={H.nnz} '
        f'({H.nnzPerRow:.2f} per row)')
    return H


def estimateBounds(matrix, epsilon=EPSILON):
    """
    Gershgorin estimate of the spectral interval and the matching scaling.

    Parameters
    ----------
    matrix : :obj:`.core.sparsemat.SparseMatrix`
        Square matrix.
    epsilon : :obj:`float`, optional
        Safety margin.

    Returns
    -------
    :obj:`SpectralBounds`
        ``b`` is the centre of the union of Gershgorin discs and
        ``a = (1-epsilon)/halfwidth``. A multiple of the identity gives
        ``a = 1-epsilon`` and ``b`` equal to that multiple.
    """
    if matrix.nrows != matrix.ncols:
        raise ValueError('Bounds need a square matrix.')
    if matrix.nrows == 0:
        raise ValueError('Bounds of an empty matrix are undefined.')
    A = matrix.toScipy()
    diag = A.diagonal()
    radii = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(diag)
    lo = np.min(diag.real - radii)
    hi = np.max(diag.real + radii)
    b = (hi + lo) / 2
    halfwidth = (hi - lo) / 2
    if halfwidth <= np.finfo(float).eps * max(1.0, abs(b)):
        bounds = SpectralBounds(1 - epsilon, b, epsilon)
    else:
        bounds = SpectralBounds((1 - epsilon) / halfwidth, b, epsilon)
    logger.info(f'Gershgorin interval [{lo:.6g}, {hi:.6g}]: a={bounds.a:.6g}, b={bounds.b:.6g}')
    return bounds


def applyShiftScale(matrix, bounds):
    """
    Return a*(H - b*1) with every diagonal entry stored.

    The result keeps the layout of ``matrix``; diagonal entries that come out
    exactly zero stay stored.
    """
    if matrix.nrows != matrix.ncols:
        raise ValueError('Shift and scale need a square matrix.')
    n = matrix.nrows
    A = matrix.toScipy().tocoo()
    diag = np.arange(n)
    rows = np.concatenate((A.row, diag))
    cols = np.concatenate((A.col, diag))
    vals = np.concatenate((bounds.a * A.data, np.full(n, -bounds.a * bounds.b,
        dtype=np.complex128)))
    scaled = SparseMatrix.fromScipy(
        sp.coo_matrix((vals, (rows, cols)), shape=matrix.shape).tocsr(),
        name=f'{matrix.name} scaled', meta=matrix.meta)
    scaled.meta['bounds'] = bounds
    if matrix.layout == Layout.SELL:
        scaled = crsToSell(scaled, matrix.chunk_height, matrix.sigma)
    return scaled


def isHermitian(matrix):
    """Exact Hermiticity check of the stored entries."""
    return matrix.isHermitian()
