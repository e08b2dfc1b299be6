'''KPM-DOS driver.

The three solver stages produce, for every random start vector, the scalar
products eta_2m = <nu_m|nu_m> and eta_2m+1 = <nu_m+1|nu_m> of the Chebyshev
recurrence nu_m+1 = 2*H~*nu_m - nu_m-1 with H~ = a(H - b). They differ only in
how the recurrence is executed:

- naive: one SpMV and a chain of BLAS-1 calls per step,
- aug_spmv: one fused augmented SpMV per step and vector,
- aug_spmmv: one fused augmented SpMMV per step for all vectors at once.
'''

import logging
logger = logging.getLogger('kpmperf')

from dataclasses import dataclass
import time

import numpy as np
from numpy.polynomial import chebyshev
import pandas as pd

from .conventions import Stage, Damping, Sampling
from .errors import ShapeError
from .item import DataItem, Saveable, Loadable
from .lattice import SpectralBounds, estimateBounds, EPSILON
from .sparsemat import BlockVector, randomBlockVector
from . import kernels


'''Largest tolerated imaginary part of an averaged moment.'''
IMAG_TOLERANCE = 1e-10


@dataclass
class KpmConfig:
    """
    Solver settings.

    Attributes
    ----------
    M : :obj:`int`
        Number of moments, even and at least 2.
    R : :obj:`int`
        Number of random start vectors.
    seed : :obj:`int`
        Root seed; vector r is column r of ``randomBlockVector(N, R, seed)``.
    stage : :obj:`.core.conventions.Stage`
        Solver stage.
    bounds : :obj:`.core.lattice.SpectralBounds`, optional
        Scaling; estimated with Gershgorin discs if omitted.
    threads : :obj:`int`, optional
        Worker count of the kernels.
    weights : :obj:`tuple`, optional
        Relative work share per worker.
    reduce_at_end : :obj:`bool`
        Keep per-worker partial dot products for the whole run and reduce
        them once after the loop.
    epsilon : :obj:`float`
        Safety margin used when bounds are estimated.
    """

    M: int = 200
    R: int = 1
    seed: int = 0
    stage: Stage = Stage.AUG_SPMMV
    bounds: SpectralBounds = None
    threads: int = None
    weights: tuple = None
    reduce_at_end: bool = False
    epsilon: float = EPSILON

    def __post_init__(self):
        if self.M < 2 or self.M % 2:
            raise ValueError(f'Number of moments M must be even and >= 2, got {self.M}.')
        if self.R < 1:
            raise ValueError(f'Need at least one random vector, got R={self.R}.')
        if self.threads is not None and self.threads < 1:
            raise ValueError(f'Thread count must be positive, got {self.threads}.')
        self.stage = Stage.parse(self.stage)
        if self.weights is not None:
            self.weights = tuple(float(w) for w in self.weights)

    @property
    def steps(self):
        """Matrix sweeps per start vector."""
        return self.M // 2


class MomentSeries(DataItem, Saveable, Loadable):
    """
    Chebyshev scalar products of a KPM run and their stochastic average.

    Attributes
    ----------
    eta : :obj:`numpy.ndarray`
        Complex array of shape (R, M), row r holding eta_m of start vector r.
        ``None`` for series loaded from a moments CSV.
    mu : :obj:`numpy.ndarray`
        Averaged normalized moments, real, length M.
    bounds : :obj:`.core.lattice.SpectralBounds`
        Scaling used in the run.
    nrows : :obj:`int`
        Matrix dimension N.
    """

    TYPE_NAME = "MomentSeries"
    LOAD_FILE_EXTENTIONS = ['csv', 'npz']
    SAVE_FILE_EXTENTIONS = ['csv', 'npz']

    def __init__(self, eta=None, mu=None, bounds=None, nrows=None, name=None,
        meta=None):
        DataItem.__init__(self, name=name, meta=meta)
        if eta is None and mu is None:
            raise ValueError('MomentSeries needs eta or mu.')
        self.eta = None if eta is None else np.atleast_2d(np.asarray(eta,
            dtype=np.complex128))
        self.mu = averageMoments(self.eta) if mu is None else np.asarray(mu,
            dtype=np.float64)
        self.bounds = bounds
        self.nrows = nrows

    def __repr__(self):
        return f"MomentSeries(M={self.M}, R={self.R})"

    @property
    def M(self):
        return self.mu.size

    @property
    def R(self):
        return 0 if self.eta is None else self.eta.shape[0]

    def toDataFrame(self):
        return pd.DataFrame({'m': np.arange(self.M), 'mu': self.mu})

    def saveToPath(self, path):
        """
        Save to ``.csv`` (columns ``m,mu``, 17 significant digits) or ``.npz``
        (eta, mu, bounds and N).
        """
        path, ext = self._checkSaveSuffix(path)
        if ext == 'csv':
            self.toDataFrame().to_csv(path, index=False, float_format='%.17g')
        else:
            b = self.bounds
            np.savez(path, eta=self.eta if self.eta is not None else np.zeros((0, self.M)),
                mu=self.mu, nrows=np.int64(self.nrows or 0),
                bounds=np.array([b.a, b.b, b.epsilon] if b else []))

    @classmethod
    def loadFromPath(cls, path):
        path, ext = cls._checkLoadSuffix(path)
        if ext == 'csv':
            df = pd.read_csv(path, float_precision='round_trip')
            return cls(mu=df['mu'].to_numpy(), name=path.stem)
        with np.load(path) as f:
            eta = f['eta'] if f['eta'].size else None
            bounds = SpectralBounds(*f['bounds']) if f['bounds'].size else None
            nrows = int(f['nrows']) or None
            return cls(eta=eta, mu=f['mu'], bounds=bounds, nrows=nrows,
                name=path.stem)


class DosCurve(DataItem, Saveable, Loadable):
    """
    Density of states sampled at ``energies``.

    ``weights`` are quadrature weights in energy, so ``sum(weights*rho)``
    approximates the integral of rho, which is N for a normalized run.
    """

    TYPE_NAME = "DosCurve"
    LOAD_FILE_EXTENTIONS = ['csv']
    SAVE_FILE_EXTENTIONS = ['csv']

    def __init__(self, energies, rho, weights=None, name=None, meta=None):
        DataItem.__init__(self, name=name, meta=meta)
        self.energies = np.asarray(energies, dtype=np.float64)
        self.rho = np.asarray(rho, dtype=np.float64)
        if self.energies.shape != self.rho.shape:
            raise ShapeError('Energies and densities differ in length.')
        self.weights = None if weights is None else np.asarray(weights, dtype=np.float64)

    def __repr__(self):
        return f"DosCurve(K={self.energies.size})"

    def integrate(self):
        """Integral of rho over the sampled interval."""
        if self.weights is not None:
            return float(np.sum(self.weights * self.rho))
        return float(np.trapz(self.rho, self.energies))

    def toDataFrame(self):
        return pd.DataFrame({'E': self.energies, 'rho': self.rho})

    def saveToPath(self, path):
        path, _ = self._checkSaveSuffix(path)
        self.toDataFrame().to_csv(path, index=False, float_format='%.17g')

    @classmethod
    def loadFromPath(cls, path):
        path, _ = cls._checkLoadSuffix(path)
        df = pd.read_csv(path, float_precision='round_trip')
        return cls(df['E'].to_numpy(), df['rho'].to_numpy(), name=path.stem)


def _checkSolve(matrix, config):
    if matrix.nrows != matrix.ncols:
        raise ShapeError(f'KPM needs a square matrix, got {matrix.shape}.')
    if not isinstance(config, KpmConfig):
        raise TypeError('config must be a KpmConfig.')


def _series(eta, matrix, a, b, config, stage):
    bounds = config.bounds if config.bounds is not None else \
        SpectralBounds(a, b, config.epsilon)
    return MomentSeries(eta=eta, bounds=bounds, nrows=matrix.nrows,
        name=f'{matrix.name} {stage.value}',
        meta={'seed': config.seed, 'stage': stage.value, 'threads': config.threads})


def kpmNaive(matrix, a, b, config):
    """
    Naive KPM-DOS: SpMV followed by axpy, scal, axpy, nrm2 and dot.

    Parameters
    ----------
    matrix : :obj:`.core.sparsemat.SparseMatrix`
        Unscaled matrix H.
    a, b : :obj:`float`
        Scale and shift.
    config : :obj:`KpmConfig`
        Solver settings; ``stage`` is ignored.

    Returns
    -------
    :obj:`MomentSeries`
    """
    _checkSolve(matrix, config)
    N, M = matrix.nrows, config.M
    kw = dict(threads=config.threads, weights=config.weights)
    eta = np.empty((config.R, M), dtype=np.complex128)
    for r in range(config.R):
        v = randomBlockVector(N, 1, config.seed, offset=r)
        w = BlockVector.zeros(N)
        u = BlockVector.zeros(N)
        for m in range(config.steps):
            if m == 0:
                beta, alpha = 0.0, a
            else:
                v, w = w, v
                beta, alpha = -1.0, 2 * a
            kernels.spmv(matrix, v, u, **kw)
            kernels.axpy(u, v, -b)
            kernels.scal(w, beta)
            kernels.axpy(w, u, alpha)
            eta[r, 2 * m] = kernels.nrm2(v)[0]
            eta[r, 2 * m + 1] = kernels.dot(w, v)[0]
    return _series(eta, matrix, a, b, config, Stage.NAIVE)


def _augmentedRun(matrix, a, b, config, V, W, call):
    steps = config.steps
    partial_even = partial_odd = None
    eta = np.empty((V.width, config.M), dtype=np.complex128)
    kw = dict(threads=config.threads, weights=config.weights)
    for m in range(steps):
        if m > 0:
            V, W = W, V
        res = call(matrix, a, b, V, W, first=(m == 0), **kw)
        if config.reduce_at_end:
            if m == 0:
                partial_even = np.empty((steps,) + res.partial_even.shape)
                partial_odd = np.empty((steps,) + res.partial_odd.shape,
                    dtype=np.complex128)
            partial_even[m] = res.partial_even
            partial_odd[m] = res.partial_odd
        else:
            eta[:, 2 * m] = res.eta_even
            eta[:, 2 * m + 1] = res.eta_odd
    if config.reduce_at_end:
        eta[:, 0::2] = kernels.reduceWorkers(partial_even).T
        eta[:, 1::2] = kernels.reduceWorkers(partial_odd).T
    return eta


def kpmStage1(matrix, a, b, config):
    """KPM-DOS with one augmented SpMV per step and start vector."""
    _checkSolve(matrix, config)
    N = matrix.nrows
    eta = np.empty((config.R, config.M), dtype=np.complex128)
    for r in range(config.R):
        v = randomBlockVector(N, 1, config.seed, offset=r)
        w = BlockVector.zeros(N)
        eta[r] = _augmentedRun(matrix, a, b, config, v, w, kernels.augSpmv)[0]
    return _series(eta, matrix, a, b, config, Stage.AUG_SPMV)


def kpmStage2(matrix, a, b, config):
    """
    Blocked KPM-DOS: all R recurrences advance together through one
    augmented SpMMV per step, so the matrix is read M/2 times in total.
    """
    _checkSolve(matrix, config)
    N = matrix.nrows
    V = randomBlockVector(N, config.R, config.seed)
    W = BlockVector.zeros(N, config.R)
    eta = _augmentedRun(matrix, a, b, config, V, W, kernels.augSpmmv)
    return _series(eta, matrix, a, b, config, Stage.AUG_SPMMV)


_STAGES = {Stage.NAIVE: kpmNaive, Stage.AUG_SPMV: kpmStage1,
           Stage.AUG_SPMMV: kpmStage2}


def calcMoments(matrix, config):
    """
    Run the solver stage selected in ``config``.

    Bounds are estimated from Gershgorin discs when ``config.bounds`` is
    ``None``.

    Returns
    -------
    :obj:`MomentSeries`
    """
    bounds = config.bounds if config.bounds is not None else \
        estimateBounds(matrix, config.epsilon)
    start = time.perf_counter()
    series = _STAGES[config.stage](matrix, bounds.a, bounds.b, config)
    series.bounds = bounds
    elapsed = time.perf_counter() - start
    series.meta['time_s'] = elapsed
    logger.info(f'{config.stage.value}: M={config.M}, R={config.R} on N={matrix.nrows} '
        f'in {elapsed:.3f} s')
    return series


def averageMoments(eta):
    """
    Stochastic average of normalized Chebyshev moments.

    Each start vector's products are divided by its eta_0, then the doubling
    identities T_2m = 2T_m^2 - T_0 and T_2m+1 = 2T_m+1*T_m - T_1 turn them into
    moments: mu_0 = 1, mu_1 = mean(eta_1/eta_0), mu_2m = 2*mean(eta_2m/eta_0) - 1,
    mu_2m+1 = 2*mean(eta_2m+1/eta_0) - mu_1.

    Parameters
    ----------
    eta : array_like
        Shape (R, M) or (M,).

    Returns
    -------
    :obj:`numpy.ndarray`
        Real moments, length M.
    """
    eta = np.atleast_2d(np.asarray(eta, dtype=np.complex128))
    if eta.shape[1] < 2:
        raise ValueError('Need at least two scalar products per start vector.')
    eta0 = eta[:, 0]
    if np.any(eta0 == 0):
        raise ValueError('eta_0 = <nu_0|nu_0> is zero for some start vector.')
    norm = (eta / eta0[:, None]).mean(axis=0)
    mu = np.empty(eta.shape[1], dtype=np.complex128)
    mu[0] = 1
    mu[1] = norm[1]
    mu[2::2] = 2 * norm[2::2] - 1
    mu[3::2] = 2 * norm[3::2] - mu[1]
    residue = np.max(np.abs(mu.imag))
    if residue >= IMAG_TOLERANCE:
        raise ValueError(f'Moments have imaginary part {residue:.3g}; is the '
            f'matrix Hermitian?')
    if residue >= IMAG_TOLERANCE / 10:
        logger.warning(f'Imaginary moment residue {residue:.3g} close to tolerance')
    return mu.real.copy()


def jacksonKernel(M):
    """Jackson damping factors g_0..g_M-1."""
    if M < 1:
        raise ValueError('Need at least one moment.')
    m = np.arange(M)
    q = np.pi / (M + 1)
    return ((M - m + 1) * np.cos(q * m) + np.sin(q * m) / np.tan(q)) / (M + 1)


def dampingFactors(M, damping):
    damping = Damping(damping)
    if damping == Damping.JACKSON:
        return jacksonKernel(M)
    return np.ones(M)


def samplePoints(npoints, sampling=Sampling.CHEBYSHEV):
    """
    Abscissae in (-1, 1) and their quadrature weights in x.

    Chebyshev nodes carry Gauss-Chebyshev weights (pi/K)*sqrt(1-x^2), exact
    for the truncated expansion; the uniform grid uses cell midpoints.
    """
    K = int(npoints)
    if K < 2:
        raise ValueError(f'Need at least two sample points, got {K}.')
    k = np.arange(K)
    if Sampling(sampling) == Sampling.CHEBYSHEV:
        x = -np.cos(np.pi * (k + 0.5) / K)
        return x, np.pi / K * np.sqrt(1 - x * x)
    x = -1 + (2 * k + 1) / K
    return x, np.full(K, 2 / K)


def reconstructDos(mu, bounds, npoints=None, damping=Damping.JACKSON, nrows=1,
    sampling=Sampling.CHEBYSHEV):
    """
    Density of states from Chebyshev moments.

    rho~(x) = (g_0*mu_0 + 2*sum g_m*mu_m*T_m(x)) / (pi*sqrt(1-x^2)) is mapped
    back to E = x/a + b and scaled by a*N, so the curve integrates to N.

    Parameters
    ----------
    mu : array_like or :obj:`MomentSeries`
        Moments, length M >= 2.
    bounds : :obj:`.core.lattice.SpectralBounds`
        Scaling used for the moments.
    npoints : :obj:`int`, optional
        Number of samples K, 2M if omitted.
    damping : :obj:`.core.conventions.Damping` or :obj:`str`
        Kernel factors g_m.
    nrows : :obj:`int`
        Matrix dimension N.
    sampling : :obj:`.core.conventions.Sampling` or :obj:`str`
        Chebyshev nodes or uniform grid.

    Returns
    -------
    :obj:`DosCurve`
    """
    if isinstance(mu, MomentSeries):
        mu = mu.mu
    mu = np.asarray(mu, dtype=np.float64)
    M = mu.size
    if M < 2:
        raise ValueError(f'Need at least two moments, got {M}.')
    x, wx = samplePoints(2 * M if npoints is None else npoints, sampling)
    coeffs = dampingFactors(M, damping) * mu
    coeffs[1:] *= 2
    rho_x = chebyshev.chebval(x, coeffs) / (np.pi * np.sqrt(1 - x * x))
    energies = bounds.toEnergy(x)
    rho = bounds.a * nrows * rho_x
    return DosCurve(energies, rho, weights=wx / bounds.a,
        meta={'M': M, 'damping': Damping(damping).value, 'nrows': nrows})


def calcIntegratedDos(mu, bounds, energies, damping=Damping.JACKSON, nrows=1):
    """
    Number of states below each energy from the closed-form antiderivative
    of the damped expansion.

    Returns
    -------
    :obj:`numpy.ndarray`
        N*[g_0*mu_0*(1 - t/pi) - (2/pi)*sum g_m*mu_m*sin(m*t)/m] with
        t = arccos(a(E - b)), clipped to [0, N*g_0*mu_0] outside the interval.
    """
    if isinstance(mu, MomentSeries):
        mu = mu.mu
    mu = np.asarray(mu, dtype=np.float64)
    M = mu.size
    if M < 2:
        raise ValueError(f'Need at least two moments, got {M}.')
    g = dampingFactors(M, damping)
    theta = np.arccos(np.clip(bounds.toScaled(energies), -1, 1))
    m = np.arange(1, M)
    series = np.sin(np.multiply.outer(theta, m)) @ (g[1:] * mu[1:] / m)
    return nrows * (g[0] * mu[0] * (1 - theta / np.pi) - 2 / np.pi * series)
