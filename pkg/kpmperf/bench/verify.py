"""Cross-module verification checks behind ``kpmperf verify``."""

import logging
logger = logging.getLogger('kpmperf')

from dataclasses import dataclass, replace
from pathlib import Path
import tempfile

import numpy as np
import pandas as pd

from ..core.conventions import Stage
from ..core.errors import VerificationError
from ..core.lattice import Domain, buildHamiltonian, estimateBounds
from ..core.sparsemat import SparseMatrix, BlockVector, crsToSell, sellToCrs, \
    randomBlockVector
from ..core.kernels import runCounted, spmv
from ..core.solver import KpmConfig, kpmNaive, kpmStage1, kpmStage2, \
    reconstructDos, calcIntegratedDos
from ..model.perfmodel import ProblemSpec, calcVKPM, calcFlops
from ..utils.utils import relativeError
from . import oracles


SUITES = ('stages', 'oracle-dos', 'traffic', 'formats')


@dataclass
class CheckResult:
    suite: str
    name: str
    passed: bool
    delta: float
    tolerance: float

    def __str__(self):
        status = 'PASS' if self.passed else 'FAIL'
        return f'[{status}] {self.suite}/{self.name}: delta={self.delta:.3g} ' \
            f'(tol {self.tolerance:.3g})'


def _check(results, suite, name, delta, tolerance):
    res = CheckResult(suite, name, bool(delta <= tolerance), float(delta), tolerance)
    results.append(res)
    log = logger.info if res.passed else logger.error
    log(str(res))
    return res


def checkStages(results, seed=0, threads=None, domain=Domain(8, 8, 8), M=200, R=4):
    """Naive, aug_spmv and aug_spmmv produce the same eta series."""
    H = buildHamiltonian(domain)
    bounds = estimateBounds(H)
    config = KpmConfig(M=M, R=R, seed=seed, bounds=bounds, threads=threads)
    etas = {stage: solve(H, bounds.a, bounds.b, config).eta for stage, solve in
        ((Stage.NAIVE, kpmNaive), (Stage.AUG_SPMV, kpmStage1),
         (Stage.AUG_SPMMV, kpmStage2))}
    ref = etas[Stage.NAIVE]
    for stage in (Stage.AUG_SPMV, Stage.AUG_SPMMV):
        _check(results, 'stages', f'naive vs {stage.value}',
            relativeError(ref, etas[stage]), 1e-12)
    deferred = kpmStage2(H, bounds.a, bounds.b, replace(config, reduce_at_end=True)).eta
    _check(results, 'stages', 'reduce at end', relativeError(etas[Stage.AUG_SPMMV],
        deferred), 0.0)


def checkOracleDos(results, seed=0, threads=None, domain=Domain(4, 4, 4), M=1000,
    R=64, nbins=16):
    """KPM moments and binned DOS against a dense eigendecomposition."""
    H = buildHamiltonian(domain)
    dense = oracles.denseHamiltonian(domain)
    _check(results, 'oracle-dos', 'dense assembly',
        float(np.max(np.abs(H.toDense() - dense))), 0.0)
    bounds = estimateBounds(H)
    N = H.nrows
    eigs = oracles.denseEigenvalues(dense)
    _check(results, 'oracle-dos', 'spectrum inside bounds',
        float(np.max(np.abs(bounds.toScaled(eigs)))) - (1 - bounds.epsilon), 1e-12)

    single = kpmStage2(H, bounds.a, bounds.b, KpmConfig(M=200, R=1, seed=seed,
        bounds=bounds, threads=threads))
    v0 = randomBlockVector(N, 1, seed).values[:, 0]
    _check(results, 'oracle-dos', 'moments',
        float(np.max(np.abs(single.mu - oracles.denseMoments(dense, bounds, v0, 200)))),
        1e-8)

    series = kpmStage2(H, bounds.a, bounds.b, KpmConfig(M=M, R=R, seed=seed,
        bounds=bounds, threads=threads))
    # edges off any lattice-symmetric energy
    span = eigs[-1] - eigs[0]
    edges = np.linspace(eigs[0] - 0.0137 * span, eigs[-1] + 0.0119 * span, nbins + 1)
    counts = oracles.eigenvalueHistogram(eigs, edges)
    nos = calcIntegratedDos(series.mu, bounds, edges, nrows=N)
    _check(results, 'oracle-dos', 'binned DOS',
        float(np.max(np.abs(np.diff(nos) - counts))), 0.05 * N)
    curve = reconstructDos(series.mu, bounds, nrows=N)
    _check(results, 'oracle-dos', 'normalization', abs(curve.integrate() - N) / N, 0.01)


def checkTraffic(results, seed=0, threads=None, domain=Domain(20, 20, 8), M=100,
    Rs=(1, 4, 8)):
    """Counted perfect-cache traffic and flops equal the model for every stage."""
    H = buildHamiltonian(domain)
    bounds = estimateBounds(H)
    for R in Rs:
        problem = ProblemSpec.fromMatrix(H, R, M)
        config = KpmConfig(M=M, R=R, seed=seed, bounds=bounds, threads=threads)
        for stage, solve in ((Stage.NAIVE, kpmNaive), (Stage.AUG_SPMV, kpmStage1),
                (Stage.AUG_SPMMV, kpmStage2)):
            counters = runCounted(solve, H, bounds.a, bounds.b, config)
            _check(results, 'traffic', f'{stage.value} R={R} bytes',
                abs(counters.total_bytes - calcVKPM(stage, problem)), 0)
            _check(results, 'traffic', f'{stage.value} R={R} flops',
                abs(counters.total_flops - calcFlops(problem)), 0)
    # padded SELL storage: padding is measured traffic, not model traffic
    sell = crsToSell(H, 32, 1)
    R = Rs[-1]
    problem = ProblemSpec.fromMatrix(H, R, M)
    config = KpmConfig(M=M, R=R, seed=seed, bounds=bounds, threads=threads)
    counters = runCounted(kpmStage2, sell, bounds.a, bounds.b, config)
    _check(results, 'traffic', f'SELL-32-1 R={R} bytes',
        abs(counters.total_bytes - calcVKPM(Stage.AUG_SPMMV, problem)), 0)


def checkFormats(results, seed=0, threads=None, domain=Domain(4, 4, 4)):
    """Storage conversions and file formats reproduce the matrix exactly."""
    H = buildHamiltonian(domain)
    ref = H.toScipy()
    x = randomBlockVector(H.nrows, 1, seed)
    y_crs = spmv(H, x, threads=threads).values
    for C, sigma in ((1, 1), (4, 1), (4, 16), (32, 128)):
        sell = crsToSell(H, C, sigma)
        back = sellToCrs(sell).toScipy()
        _check(results, 'formats', f'SELL-{C}-{sigma} round trip',
            float(abs(back - ref).max()) + abs(back.nnz - ref.nnz), 0.0)
        y = spmv(sell, x, threads=threads).values
        _check(results, 'formats', f'SELL-{C}-{sigma} spmv',
            relativeError(y_crs, y), 1e-14)
    with tempfile.TemporaryDirectory() as tmp:
        for ext in ('mtx', 'npz'):
            path = Path(tmp) / f'H.{ext}'
            H.saveToPath(path)
            loaded = SparseMatrix.loadFromPath(path).toScipy()
            _check(results, 'formats', f'.{ext} round trip',
                float(abs(loaded - ref).max()), 0.0)
        path = Path(tmp) / 'x.bvec'
        x.saveToPath(path)
        _check(results, 'formats', '.bvec round trip',
            float(np.max(np.abs(BlockVector.loadFromPath(path).values - x.values))), 0.0)


_RUNNERS = {'stages': checkStages, 'oracle-dos': checkOracleDos,
            'traffic': checkTraffic, 'formats': checkFormats}


def verify(suites=None, seed=0, threads=None, raise_on_failure=False):
    """
    Run verification suites.

    Parameters
    ----------
    suites : iterable of :obj:`str`, optional
        Any of ``stages``, ``oracle-dos``, ``traffic``, ``formats``; all if
        omitted.
    raise_on_failure : :obj:`bool`
        Raise :obj:`.core.errors.VerificationError` if a check fails.

    Returns
    -------
    :obj:`list` of :obj:`CheckResult`
    """
    suites = list(SUITES if suites is None else suites)
    unknown = [s for s in suites if s not in _RUNNERS]
    if unknown:
        raise ValueError(f'Unknown suites {unknown}. Use any of {list(SUITES)}.')
    results = []
    for suite in suites:
        logger.info(f'Running verification suite "{suite}"')
        _RUNNERS[suite](results, seed=seed, threads=threads)
    failed = [r for r in results if not r.passed]
    if failed and raise_on_failure:
        raise VerificationError(f'{len(failed)} of {len(results)} checks failed: '
            + ', '.join(f'{r.suite}/{r.name}' for r in failed))
    return results


def resultsTable(results):
    return pd.DataFrame([vars(r) for r in results])
