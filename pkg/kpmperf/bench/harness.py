"""Benchmark harness.

Times complete KPM-DOS solves and derives flop rates from the model's
algorithmic flop counts and bandwidths from the counted minimum traffic.
"""

import logging
logger = logging.getLogger('kpmperf')

from dataclasses import dataclass, asdict, field
import time

import numpy as np
import pandas as pd

from ..core.conventions import Stage
from ..core.errors import SizingError
from ..core.item import DataItemSet, Saveable
from ..core.lattice import Domain, buildHamiltonian, estimateBounds
from ..core.kernels import runCounted, defaultThreads, augSpmmv
from ..core.sparsemat import BlockVector, randomBlockVector
from ..core.solver import KpmConfig, kpmNaive, kpmStage1, kpmStage2
from ..model.perfmodel import ProblemSpec, calcFlops, calcCodeBalance
from ..utils.utils import availableMemory, writeGnuplot

'''Column order of sweep CSV output.'''
SWEEP_COLUMNS = ['kernel', 'stage', 'N', 'nnz', 'R', 'M', 'threads', 'time_s',
                 'gflops', 'bw_gbs', 'omega']

_SOLVERS = {Stage.NAIVE: kpmNaive, Stage.AUG_SPMV: kpmStage1,
            Stage.AUG_SPMMV: kpmStage2}


@dataclass
class BenchResult:
    """
    One timed configuration.

    ``gflops`` is the model flop count of the solve divided by the median
    time, ``bw_gbs`` the counted perfect-cache traffic divided by the same
    time.
    """

    kernel: str
    stage: str
    N: int
    nnz: int
    R: int
    M: int
    threads: int
    time_s: float
    gflops: float
    bw_gbs: float
    omega: float
    reps: int
    seed: int
    flops: int = 0
    bytes: int = 0
    times: list = field(default_factory=list, repr=False)

    def toRecord(self, columns=SWEEP_COLUMNS):
        d = asdict(self)
        return {c: d[c] for c in columns if c in d}


class BenchResultSet(DataItemSet, Saveable):
    """:obj:`.core.item.DataItemSet` of :obj:`BenchResult`, saved as CSV or
    gnuplot ``.dat``."""

    TYPE_NAME = "BenchResultSet"
    SAVE_FILE_EXTENTIONS = ['csv', 'dat']

    def __init__(self, results=None, extra_columns=()):
        DataItemSet.__init__(self, results)
        self.extra = {c: {} for c in extra_columns}

    def setExtra(self, column, result, value):
        self.extra.setdefault(column, {})[id(result)] = value

    def toDataFrame(self):
        rows = []
        for res in self.getSelected():
            row = res.toRecord()
            for column, values in self.extra.items():
                row[column] = values.get(id(res), np.nan)
            rows.append(row)
        return pd.DataFrame(rows, columns=SWEEP_COLUMNS + list(self.extra))

    def saveToPath(self, path):
        path, ext = self._checkSaveSuffix(path)
        df = self.toDataFrame()
        if ext == 'csv':
            df.to_csv(path, index=False)
        else:
            writeGnuplot(df, path, title='kpmperf sweep')


def estimateMemory(N, nnz, R):
    """Bytes for a CRS matrix and three block vectors of width R."""
    return nnz * 20 + (N + 1) * 8 + 3 * N * R * 16


def checkMemory(N, nnz, R, fraction=0.8):
    """Raise :obj:`.core.errors.SizingError` if the problem cannot fit in RAM."""
    need = estimateMemory(N, nnz, R)
    have = availableMemory()
    if have is None:
        logger.warning('Cannot determine physical memory; skipping size check.')
        return need
    if need > fraction * have:
        raise SizingError(f'Problem needs about {need / 2**30:.2f} GiB, only '
            f'{have / 2**30:.2f} GiB of memory available.')
    return need


def prepareMatrix(domain, R=1):
    """Build the Hamiltonian of ``domain`` after checking it fits in memory."""
    checkMemory(domain.N, 13 * domain.N, R)
    return buildHamiltonian(domain)


def benchKernel(stage, matrix, R=1, M=100, threads=None, reps=3, seed=0,
    weights=None, bounds=None, llc_size=None):
    """
    Time complete solves of one stage.

    One counted warm-up solve provides the traffic (and, with ``llc_size``,
    the simulated omega); then ``reps`` timed solves follow and the median
    time is reported. Matrix generation and bounds estimation are not timed.

    Parameters
    ----------
    stage : :obj:`.core.conventions.Stage` or :obj:`str`
    matrix : :obj:`.core.sparsemat.SparseMatrix` or :obj:`.core.lattice.Domain`
    R, M : :obj:`int`
        Random vectors and moments.
    threads : :obj:`int`, optional
        Kernel worker count.
    reps : :obj:`int`
        Timed repetitions, at least 3.
    llc_size : :obj:`int`, optional
        Simulated LLC size in bytes for omega.

    Returns
    -------
    :obj:`BenchResult`
    """
    stage = Stage.parse(stage)
    if reps < 3:
        raise ValueError(f'Need at least 3 repetitions, got {reps}.')
    if isinstance(matrix, Domain):
        matrix = prepareMatrix(matrix, R)
    else:
        checkMemory(matrix.nrows, matrix.nnz, R)
    threads = threads or defaultThreads()
    bounds = bounds or estimateBounds(matrix)
    config = KpmConfig(M=M, R=R, seed=seed, stage=stage, bounds=bounds,
        threads=threads, weights=weights)
    solve = _SOLVERS[stage]

    counters = runCounted(solve, matrix, bounds.a, bounds.b, config, llc_size=llc_size)
    times = []
    for _ in range(reps):
        start = time.perf_counter()
        solve(matrix, bounds.a, bounds.b, config)
        times.append(time.perf_counter() - start)
    t = float(np.median(times))
    flops = calcFlops(ProblemSpec.fromMatrix(matrix, R, M))
    result = BenchResult(kernel=stage.kernel, stage=stage.value, N=matrix.nrows,
        nnz=matrix.nnz, R=R, M=M, threads=threads, time_s=t,
        gflops=flops / t / 1e9, bw_gbs=counters.total_bytes / t / 1e9,
        omega=counters.omega, reps=reps, seed=seed, flops=flops,
        bytes=counters.total_bytes, times=times)
    logger.debug(f'{stage.value} R={R} threads={threads}: {t:.4f} s, '
        f'{result.gflops:.3f} Gflop/s')
    return result


def sweep(stages, Rs, threads_list, matrix, M=100, reps=3, seed=0, weights=None,
    llc_size=None, with_bmin=False, results=None):
    """
    Benchmark the cross product stages x R x threads, in that nesting order.

    Parameters
    ----------
    with_bmin : :obj:`bool`
        Add a ``b_min`` column with the model code balance of each row.
    results : :obj:`BenchResultSet`, optional
        Set to append to; its ``itemadded`` signal fires for each row.

    Returns
    -------
    :obj:`BenchResultSet`
    """
    if isinstance(stages, (str, Stage)):
        stages = [stages]
    stages = [Stage.parse(s) for s in stages]
    if isinstance(matrix, Domain):
        matrix = prepareMatrix(matrix, max(Rs))
    bounds = estimateBounds(matrix)
    results = results if results is not None else BenchResultSet()
    for stage in stages:
        for R in Rs:
            for threads in threads_list:
                res = benchKernel(stage, matrix, R=R, M=M, threads=threads,
                    reps=reps, seed=seed, weights=weights, bounds=bounds,
                    llc_size=llc_size)
                if with_bmin:
                    report = calcCodeBalance(ProblemSpec.fromMatrix(matrix, R, M),
                        stage=stage)
                    results.setExtra('b_min', res, report.B_min)
                results.add(res)
    return results


def simulateOmega(matrix, R, llc_size, seed=0):
    """
    Traffic inflation of one augmented SpMMV sweep with an LRU cache of
    ``llc_size`` bytes.
    """
    V = randomBlockVector(matrix.nrows, R, seed)
    W = BlockVector.zeros(matrix.nrows, R)
    counters = runCounted(augSpmmv, matrix, 1.0, 0.0, V, W, first=True,
        llc_size=llc_size)
    return counters.omega


def calcScaling(results):
    """
    Thread scaling of each (stage, R) series of a sweep.

    Returns
    -------
    :obj:`pandas.DataFrame`
        Columns stage, R, threads, gflops and speedup, the flop rate over the
        rate at the smallest thread count of the same series.
    """
    df = results.toDataFrame() if isinstance(results, BenchResultSet) else results
    df = df[['stage', 'R', 'threads', 'gflops']].sort_values(['stage', 'R', 'threads'])
    base = df.groupby(['stage', 'R'])['gflops'].transform('first')
    return df.assign(speedup=df['gflops'] / base).reset_index(drop=True)


@dataclass
class TrendReport:
    """
    Qualitative performance trends of one host.

    Attributes
    ----------
    scaling : :obj:`pandas.DataFrame`
        Output of :func:`calcScaling`.
    naive_gflops, blocked_gflops : :obj:`float`
        Flop rates of the naive stage (R=1) and the blocked stage at the
        largest thread count.
    naive_speedup, blocked_speedup : :obj:`float`
        Their speedups over the smallest thread count.
    serial_ratio : :obj:`float`
        Blocked over aug_spmv flop rate at the smallest thread count.
    """

    scaling: pd.DataFrame
    naive_gflops: float
    blocked_gflops: float
    naive_speedup: float
    blocked_speedup: float
    serial_ratio: float

    @property
    def decoupled(self):
        """Blocked stage beats the naive stage at full threads."""
        return self.blocked_gflops > self.naive_gflops

    @property
    def saturating(self):
        """Naive stage scales worse than the blocked stage."""
        return self.naive_speedup < self.blocked_speedup


def checkTrend(matrix, threads_list=None, R=8, M=20, reps=3, seed=0, results=None):
    """
    Record how the naive and blocked stages scale with threads.

    The naive and aug_spmv stages run with one vector and the blocked stage
    with ``R`` vectors over ``threads_list`` (powers of two up to numba's
    pool size if omitted). Absolute rates depend on the host, so nothing
    here fails; the comparison is logged and returned.

    Returns
    -------
    :obj:`TrendReport`
    """
    if threads_list is None:
        top = defaultThreads()
        threads_list = sorted({2**k for k in range(top.bit_length()) if 2**k <= top}
            | {top})
    threads_list = sorted(threads_list)
    if isinstance(matrix, Domain):
        matrix = prepareMatrix(matrix, R)
    results = results if results is not None else BenchResultSet()
    sweep([Stage.NAIVE, Stage.AUG_SPMV], [1], threads_list, matrix, M=M, reps=reps,
        seed=seed, results=results)
    sweep(Stage.AUG_SPMMV, [R], threads_list, matrix, M=M, reps=reps, seed=seed,
        results=results)
    scaling = calcScaling(results)

    def row(stage, R, threads):
        sel = scaling[(scaling['stage'] == stage.value) & (scaling['R'] == R) &
            (scaling['threads'] == threads)]
        return sel.iloc[0]

    lo, hi = threads_list[0], threads_list[-1]
    naive, blocked = row(Stage.NAIVE, 1, hi), row(Stage.AUG_SPMMV, R, hi)
    report = TrendReport(scaling, naive_gflops=float(naive['gflops']),
        blocked_gflops=float(blocked['gflops']),
        naive_speedup=float(naive['speedup']),
        blocked_speedup=float(blocked['speedup']),
        serial_ratio=float(row(Stage.AUG_SPMMV, R, lo)['gflops'] /
            row(Stage.AUG_SPMV, 1, lo)['gflops']))
    logger.info(f'{hi} threads: naive {report.naive_gflops:.3f} Gflop/s, '
        f'aug_spmmv R={R} {report.blocked_gflops:.3f} Gflop/s '
        f'(decoupled: {report.decoupled})')
    logger.info(f'speedup {lo}->{hi} threads: naive {report.naive_speedup:.2f}, '
        f'aug_spmmv {report.blocked_speedup:.2f} (saturating: {report.saturating})')
    if not report.decoupled:
        logger.warning('Blocked stage is not faster than the naive stage on this host.')
    return report
