'''Last-level cache simulation for the SpM(M)V input vector.

Only the gather stream of the input block vector is simulated: matrix data
and the output vector stream through the cache once and are charged exactly
by the perfect-cache counters. The cache is fully associative with LRU
replacement over lines of ``line_size`` bytes.
'''

import logging
logger = logging.getLogger('kpmperf')

import weakref

import numba as nb
import numpy as np

from .conventions import CACHE_LINE

# per-matrix memo; entries go away with their matrix
_excess_cache = weakref.WeakKeyDictionary()


@nb.njit(cache=True)
def _simulateGather(cols, row_bytes, line_size, capacity, nlines):
    prev = np.full(nlines, -1, dtype=np.int64)
    nxt = np.full(nlines, -1, dtype=np.int64)
    cached = np.zeros(nlines, dtype=np.bool_)
    head = -1
    tail = -1
    count = 0
    misses = 0
    for k in range(cols.size):
        start = np.int64(cols[k]) * row_bytes
        first = start // line_size
        last = (start + row_bytes - 1) // line_size
        for line in range(first, last + 1):
            if cached[line]:
                if line != head:
                    # unlink, then move to the MRU end
                    p = prev[line]
                    n = nxt[line]
                    nxt[p] = n
                    if n != -1:
                        prev[n] = p
                    else:
                        tail = p
                    prev[line] = -1
                    nxt[line] = head
                    prev[head] = line
                    head = line
                continue
            misses += 1
            if count == capacity:
                old = tail
                tail = prev[old]
                if tail != -1:
                    nxt[tail] = -1
                else:
                    head = -1
                prev[old] = -1
                nxt[old] = -1
                cached[old] = False
                count -= 1
            cached[line] = True
            prev[line] = -1
            nxt[line] = head
            if head != -1:
                prev[head] = line
            else:
                tail = line
            head = line
            count += 1
    return misses


def simulateInputTraffic(matrix, width, llc_size, line_size=CACHE_LINE):
    """
    Bytes of the input block vector loaded from memory during one sweep.

    Parameters
    ----------
    matrix : :obj:`.core.sparsemat.SparseMatrix`
        Matrix whose stored column indices are gathered in storage order
        (row by row for CRS, column by column inside each chunk for SELL).
    width : :obj:`int`
        Block vector width R; one gather touches ``R*16`` contiguous bytes.
    llc_size : :obj:`int`
        Cache capacity in bytes.
    line_size : :obj:`int`, optional
        Cache line size in bytes.

    Returns
    -------
    :obj:`int`
        Number of missed lines times ``line_size``.
    """
    if llc_size < line_size:
        raise ValueError(f'Cache of {llc_size} bytes holds no {line_size}-byte line.')
    row_bytes = width * matrix.values.itemsize
    nlines = -(-matrix.ncols * row_bytes // line_size)
    misses = _simulateGather(matrix.col_indices, np.int64(row_bytes),
        np.int64(line_size), np.int64(llc_size // line_size), np.int64(nlines))
    return int(misses) * line_size


def calcExcessBytes(matrix, width, llc_size, line_size=CACHE_LINE):
    """
    Input-vector bytes re-read because of evictions, never negative.

    Memoized per matrix, width and cache geometry.
    """
    memo = _excess_cache.setdefault(matrix, {})
    key = (int(width), int(llc_size), int(line_size))
    if key not in memo:
        loaded = simulateInputTraffic(matrix, width, llc_size, line_size)
        row_bytes = width * matrix.values.itemsize
        vector_bytes = -(-matrix.ncols * row_bytes // line_size) * line_size
        memo[key] = max(0, loaded - vector_bytes)
        logger.debug(f'LLC {llc_size} B, R={width}: {loaded} B loaded for a '
            f'{vector_bytes} B input vector')
    return memo[key]


def clearCache():
    _excess_cache.clear()
