'''Sparse kernels of the KPM-DOS solver and their traffic accounting.

All sparse kernels run through one fused sweep per layout,

    w <- alpha*(H - shift*1)*v + beta*w

optionally accumulating <v|v> and <w_new|v> per column on the fly. Plain
SpM(M)V uses alpha=1, shift=0, beta=0; the augmented kernels use alpha=2a,
shift=b, beta=-1 (or alpha=a, beta=0 for the initial step). Work is split
statically over workers by :meth:`.core.sparsemat.SparseMatrix.partition`;
each worker keeps its own partial dot products which are summed in worker
order, so a fixed worker count gives bitwise-reproducible results.

While a :func:`counting` context is active every kernel charges its minimum
data traffic and flops to the active :obj:`TrafficCounters`.
'''

import logging
logger = logging.getLogger('kpmperf')

from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass, field
import math

import numba as nb
from numba import prange
import numpy as np

from .conventions import Layout, CACHE_LINE, F_ADD, F_MUL
from .errors import ShapeError
from .sparsemat import BlockVector, columnDot, columnNrm2
from . import llcsim


@nb.njit(parallel=True, cache=True)
def _crsSweep(row_ptrs, cols, vals, v, w, bounds, alpha, shift, beta, dots,
        even, odd):
    R = v.shape[1]
    for k in prange(bounds.size - 1):
        tmp = np.zeros(R, dtype=np.complex128)
        for i in range(bounds[k], bounds[k + 1]):
            for r in range(R):
                tmp[r] = -shift * v[i, r] if shift != 0 else 0j
            for p in range(row_ptrs[i], row_ptrs[i + 1]):
                a = vals[p]
                c = cols[p]
                for r in range(R):
                    tmp[r] += a * v[c, r]
            for r in range(R):
                if beta == 0:
                    y = alpha * tmp[r]
                else:
                    y = alpha * tmp[r] + beta * w[i, r]
                w[i, r] = y
                if dots:
                    vi = v[i, r]
                    even[k, r] += vi.real * vi.real + vi.imag * vi.imag
                    odd[k, r] += y.conjugate() * vi


@nb.njit(parallel=True, cache=True)
def _sellSweep(chunk_ptrs, chunk_lengths, row_perm, C, cols, vals, v, w, bounds,
        alpha, shift, beta, dots, even, odd):
    R = v.shape[1]
    for k in prange(bounds.size - 1):
        tmp = np.zeros((C, R), dtype=np.complex128)
        for ch in range(bounds[k], bounds[k + 1]):
            base = ch * C
            for c in range(C):
                i = row_perm[base + c]
                for r in range(R):
                    tmp[c, r] = -shift * v[i, r] if (i >= 0 and shift != 0) else 0j
            off = chunk_ptrs[ch]
            for j in range(chunk_lengths[ch]):
                for c in range(C):
                    p = off + j * C + c
                    a = vals[p]
                    col = cols[p]
                    for r in range(R):
                        tmp[c, r] += a * v[col, r]
            for c in range(C):
                i = row_perm[base + c]
                if i < 0:
                    continue
                for r in range(R):
                    if beta == 0:
                        y = alpha * tmp[c, r]
                    else:
                        y = alpha * tmp[c, r] + beta * w[i, r]
                    w[i, r] = y
                    if dots:
                        vi = v[i, r]
                        even[k, r] += vi.real * vi.real + vi.imag * vi.imag
                        odd[k, r] += y.conjugate() * vi


@dataclass(eq=False)
class TrafficCounters:
    """
    Logical data traffic and flops of the kernels run inside a
    :func:`counting` context.

    Byte counters follow the perfect-cache model: every matrix element and
    every vector element is charged once per algorithmic touch. When
    ``llc_size`` is set, re-reads of input-vector lines evicted from an LRU
    cache of that size are charged separately in ``bytes_input_excess``.
SELL padding elements are streamed but carry no work; their bytes go to
``bytes_matrix_padding`` and, like the excess, only into ``measured_bytes``.
    Flop counters are already weighted by the flops per complex add and
    multiply.
    """

    bytes_matrix_values: int = 0
    bytes_matrix_indices: int = 0
    bytes_vector_reads: int = 0
    bytes_vector_writes: int = 0
    flops_add: int = 0
    flops_mul: int = 0
    bytes_input_excess: int = 0
    bytes_matrix_padding: int = 0
    llc_size: int = None
    line_size: int = CACHE_LINE
    calls: Counter = field(default_factory=Counter)
    result: object = field(default=None, repr=False, compare=False)

    @property
    def total_bytes(self):
        """Perfect-cache traffic."""
        return self.bytes_matrix_values + self.bytes_matrix_indices + \
            self.bytes_vector_reads + self.bytes_vector_writes

    @property
    def measured_bytes(self):
        """Traffic including simulated input-vector re-reads and SELL padding."""
        return self.total_bytes + self.bytes_input_excess + self.bytes_matrix_padding

    @property
    def total_flops(self):
        return self.flops_add + self.flops_mul

    @property
    def omega(self):
        """Traffic inflation measured/perfect-cache, 1 if nothing was counted."""
        return self.measured_bytes / self.total_bytes if self.total_bytes else 1.0

    def charge(self, kernel, values=0, indices=0, reads=0, writes=0, add=0, mul=0,
            padding=0):
        self.calls[kernel] += 1
        self.bytes_matrix_padding += int(padding)
        self.bytes_matrix_values += int(values)
        self.bytes_matrix_indices += int(indices)
        self.bytes_vector_reads += int(reads)
        self.bytes_vector_writes += int(writes)
        self.flops_add += int(add)
        self.flops_mul += int(mul)

    def chargeGather(self, matrix, width):
        if self.llc_size is not None:
            self.bytes_input_excess += llcsim.calcExcessBytes(matrix, width,
                self.llc_size, self.line_size)

    def toDict(self):
        """Flat record for CSV/JSON output."""
        return {'bytes_matrix_values': self.bytes_matrix_values,
                'bytes_matrix_indices': self.bytes_matrix_indices,
                'bytes_vector_reads': self.bytes_vector_reads,
                'bytes_vector_writes': self.bytes_vector_writes,
                'bytes_input_excess': self.bytes_input_excess,
                'bytes_matrix_padding': self.bytes_matrix_padding,
                'total_bytes': self.total_bytes,
                'measured_bytes': self.measured_bytes,
                'flops_add': self.flops_add, 'flops_mul': self.flops_mul,
                'total_flops': self.total_flops, 'omega': self.omega,
                'calls': dict(self.calls)}


_active_counters = []


@contextmanager
def counting(llc_size=None, line_size=CACHE_LINE):
    """
    Count traffic and flops of every kernel called in the ``with`` block.

    Contexts nest; each active context receives every charge.

    Parameters
    ----------
    llc_size : :obj:`int`, optional
        Simulated last-level cache size in bytes. ``None`` counts with a
        perfect cache only.
    line_size : :obj:`int`, optional
        Cache line size in bytes.

    Yields
    ------
    :obj:`TrafficCounters`
    """
    counters = TrafficCounters(llc_size=llc_size, line_size=line_size)
    _active_counters.append(counters)
    try:
        yield counters
    finally:
        _active_counters.remove(counters)


def runCounted(call, *args, llc_size=None, line_size=CACHE_LINE, **kwargs):
    """
    Run ``call(*args, **kwargs)`` inside a :func:`counting` context.

    Returns
    -------
    :obj:`TrafficCounters`
        Counters of the call; the call's return value is in ``.result``.
    """
    with counting(llc_size=llc_size, line_size=line_size) as counters:
        counters.result = call(*args, **kwargs)
    return counters


def _charge(kernel, **amounts):
    for counters in _active_counters:
        counters.charge(kernel, **amounts)


def _matrixBytes(matrix):
    # nonzeros at full cost, padding apart
    elem = matrix.values.itemsize + matrix.col_indices.itemsize
    return dict(values=matrix.nnz * matrix.values.itemsize,
        indices=matrix.nnz * matrix.col_indices.itemsize,
        padding=(matrix.nstored - matrix.nnz) * elem)


def _chargeGather(matrix, width):
    for counters in _active_counters:
        counters.chargeGather(matrix, width)


def reduceWorkers(partial):
    """Sum per-worker partials over axis -2, strictly in worker order."""
    total = np.zeros(partial.shape[:-2] + partial.shape[-1:], dtype=partial.dtype)
    for k in range(partial.shape[-2]):
        total += partial[..., k, :]
    return total


@dataclass
class AugmentedResult:
    """
    Dot products of one augmented sweep.

    ``partial_even[k, r]`` and ``partial_odd[k, r]`` are worker k's shares
    of <v|v> and <w_new|v> for column r.
    """

    partial_even: np.ndarray
    partial_odd: np.ndarray

    @property
    def eta_even(self):
        """<v|v> per column."""
        return reduceWorkers(self.partial_even)

    @property
    def eta_odd(self):
        """<w_new|v> per column."""
        return reduceWorkers(self.partial_odd)

    @property
    def nworkers(self):
        return self.partial_even.shape[0]

    @property
    def width(self):
        return self.partial_even.shape[1]


def defaultThreads():
    return nb.get_num_threads()


@contextmanager
def _numbaThreads(n):
    available = nb.config.NUMBA_NUM_THREADS
    if n > available:
        logger.warning(f'{n} threads requested, numba pool has {available}; '
            f'running {n} partitions on {available} threads.')
    previous = nb.get_num_threads()
    nb.set_num_threads(min(n, available))
    try:
        yield
    finally:
        nb.set_num_threads(previous)


def _asBlock(x, name):
    if isinstance(x, BlockVector):
        return x
    raise TypeError(f'{name} must be a BlockVector, got {type(x).__name__}.')


def _checkOperands(matrix, v, w):
    if matrix.nrows != matrix.ncols:
        raise ShapeError(f'Kernels need a square matrix, got {matrix.shape}.')
    if v.nrows != matrix.ncols:
        raise ShapeError(f'Input vector has {v.nrows} rows, matrix has '
            f'{matrix.ncols} columns.')
    if w.shape != v.shape:
        raise ShapeError(f'Output shape {w.shape} differs from input shape {v.shape}.')
    if np.shares_memory(v.values, w.values):
        raise ValueError('Input and output block vectors must not alias.')


def _sweep(matrix, v, w, alpha, shift, beta, dots, threads, weights):
    nworkers = threads or defaultThreads()
    bounds = matrix.partition(nworkers, weights)
    even = np.zeros((nworkers, v.width), dtype=np.float64)
    odd = np.zeros((nworkers, v.width), dtype=np.complex128)
    with _numbaThreads(nworkers):
        if matrix.layout == Layout.CRS:
            _crsSweep(matrix.row_ptrs, matrix.col_indices, matrix.values,
                v.values, w.values, bounds, float(alpha), float(shift),
                float(beta), bool(dots), even, odd)
        else:
            _sellSweep(matrix.chunk_ptrs, matrix.chunk_lengths, matrix.row_perm,
                matrix.chunk_height, matrix.col_indices, matrix.values,
                v.values, w.values, bounds, float(alpha), float(shift),
                float(beta), bool(dots), even, odd)
    return AugmentedResult(even, odd)


def _spmmvKernel(kernel, matrix, x, y, threads, weights):
    x = _asBlock(x, 'x')
    if y is None:
        y = BlockVector.zeros(matrix.nrows, x.width)
    y = _asBlock(y, 'y')
    _checkOperands(matrix, x, y)
    _sweep(matrix, x, y, 1.0, 0.0, 0.0, False, threads, weights)
    R = x.width
    _charge(kernel, **_matrixBytes(matrix),
        reads=x.nbytes, writes=y.nbytes, add=matrix.nnz * R * F_ADD,
        mul=matrix.nnz * R * F_MUL)
    _chargeGather(matrix, R)
    return y


def spmv(matrix, x, y=None, threads=None, weights=None):
    """
    Sparse matrix times vector, y = H*x.

    Parameters
    ----------
    matrix : :obj:`.core.sparsemat.SparseMatrix`
        Square matrix in either layout.
    x : :obj:`.core.sparsemat.BlockVector`
        Input vector of width 1.
    y : :obj:`.core.sparsemat.BlockVector`, optional
        Output vector, overwritten. Allocated if omitted.
    threads : :obj:`int`, optional
        Number of workers; numba's current thread count if omitted.
    weights : array_like, optional
        Relative work share per worker.

    Returns
    -------
    :obj:`.core.sparsemat.BlockVector`
        ``y``.
    """
    if _asBlock(x, 'x').width != 1:
        raise ShapeError(f'spmv takes a single vector, got width {x.width}; use spmmv.')
    return _spmmvKernel('spmv', matrix, x, y, threads, weights)


def spmmv(matrix, X, Y=None, threads=None, weights=None):
    """Sparse matrix times block vector, Y = H*X, in one matrix sweep."""
    return _spmmvKernel('spmmv', matrix, X, Y, threads, weights)


def _augmented(kernel, matrix, a, b, v, w, first, dots, threads, weights):
    v = _asBlock(v, 'v')
    w = _asBlock(w, 'w')
    _checkOperands(matrix, v, w)
    if first:
        alpha, beta = a, 0.0
    else:
        alpha, beta = 2 * a, -1.0
    result = _sweep(matrix, v, w, alpha, b, beta, dots, threads, weights)

    N, R, nnz = matrix.nrows, v.width, matrix.nnz
    # shift/scale/axpy part: two axpy and one scal per row and column
    add = nnz * F_ADD + 2 * N * F_ADD
    mul = nnz * F_MUL + 2 * N * F_MUL + N * F_MUL
    if dots:
        add += math.ceil(F_ADD / 2) * N + N * F_ADD
        mul += math.ceil(F_MUL / 2) * N + N * F_MUL
    _charge(kernel, **_matrixBytes(matrix),
        reads=v.nbytes + w.nbytes, writes=w.nbytes, add=add * R, mul=mul * R)
    _chargeGather(matrix, R)
    return result


def augSpmv(matrix, a, b, v, w, first=False, dots=True, threads=None, weights=None):
    """
    Augmented SpMV, w <- 2a(H - b)v - w with <v|v> and <w|v> in the same sweep.

    Parameters
    ----------
    matrix : :obj:`.core.sparsemat.SparseMatrix`
        Unscaled matrix H.
    a, b : :obj:`float`
        Scale and shift of H~ = a(H - b).
    v : :obj:`.core.sparsemat.BlockVector`
        Current vector, width 1.
    w : :obj:`.core.sparsemat.BlockVector`
        Previous vector on entry, next vector on exit.
    first : :obj:`bool`, optional
        Initial step: w <- a(H - b)v, the old content of w is ignored.
    dots : :obj:`bool`, optional
        Compute the dot products.

    Returns
    -------
    :obj:`AugmentedResult`
        ``eta_even`` = <v|v>, ``eta_odd`` = <w_new|v>.
    """
    if _asBlock(v, 'v').width != 1:
        raise ShapeError(f'augSpmv takes a single vector, got width {v.width}; '
            f'use augSpmmv.')
    return _augmented('aug_spmv', matrix, a, b, v, w, first, dots, threads, weights)


def augSpmmv(matrix, a, b, V, W, first=False, dots=True, threads=None, weights=None):
    """
    Augmented SpMMV: :func:`augSpmv` applied to all R columns of the block
    vectors in a single matrix sweep.
    """
    return _augmented('aug_spmmv', matrix, a, b, V, W, first, dots, threads, weights)


def axpy(y, x, alpha):
    """y <- y + alpha*x, column-wise for block vectors."""
    if x.shape != y.shape:
        raise ShapeError(f'axpy shape mismatch: {x.shape} vs {y.shape}.')
    y.values += alpha * x.values
    n = y.values.size
    _charge('axpy', reads=x.nbytes + y.nbytes, writes=y.nbytes,
        add=n * F_ADD, mul=n * F_MUL)
    return y


def scal(x, alpha):
    """x <- alpha*x."""
    x.values *= alpha
    n = x.values.size
    _charge('scal', reads=x.nbytes, writes=x.nbytes, mul=n * F_MUL)
    return x


def nrm2(x):
    """<x|x> per column."""
    n = x.values.size
    _charge('nrm2', reads=x.nbytes, add=n * math.ceil(F_ADD / 2),
        mul=n * math.ceil(F_MUL / 2))
    return columnNrm2(x)


def dot(x, y):
    """<x|y> per column."""
    result = columnDot(x, y)
    n = x.values.size
    _charge('dot', reads=x.nbytes + y.nbytes, add=n * F_ADD, mul=n * F_MUL)
    return result
