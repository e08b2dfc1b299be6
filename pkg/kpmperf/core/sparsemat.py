'''Sparse matrix storage.

The :obj:`SparseMatrix` class holds a square complex matrix either in
compressed row storage (CRS) or in the chunked SELL-C-sigma layout, and the
:obj:`BlockVector` class holds R vectors interleaved row-major so that element
(i, r) lives at offset i*R + r. Conversion, random start vectors, column-wise
dot products and the row partitioning used by the parallel kernels are in this
file as well.
'''

import logging
logger = logging.getLogger('kpmperf')

from pathlib import Path
import numpy as np
import scipy.io
import scipy.sparse as sp

from .item import DataItem, Saveable, Loadable
from .conventions import Layout, INDEX_MAX
from .errors import ShapeError, SizingError


VALUE_DTYPE = np.complex128
INDEX_DTYPE = np.int32
POINTER_DTYPE = np.int64


class SparseMatrix(DataItem, Saveable, Loadable):
    """
    Sparse complex matrix in CRS or SELL-C-sigma layout.

    In SELL layout the rows are sorted by length (descending) inside windows
    of ``sigma`` rows, grouped into chunks of ``chunk_height`` rows and each
    chunk is stored column by column, padded to the length of its longest row
    with zero values. ``row_perm[s]`` gives the original row stored at sorted
    position ``s`` (-1 for the filler rows of the last chunk).
    """

    TYPE_NAME = "SparseMatrix"
    LOAD_FILE_EXTENTIONS = ['mtx', 'npz']
    SAVE_FILE_EXTENTIONS = ['mtx', 'npz']

    def __init__(self, nrows, ncols, values, col_indices, row_ptrs=None,
        layout=Layout.CRS, chunk_height=1, sigma=1, chunk_ptrs=None,
        chunk_lengths=None, row_perm=None, row_lengths=None, name=None,
        meta=None):
        """
        Parameters
        ----------
        nrows, ncols : :obj:`int`
            Matrix dimensions.
        values : array_like
            Stored values (complex, 16 bytes each).
        col_indices : array_like
            Column index of each stored value (32-bit).
        row_ptrs : array_like, optional
            CRS row pointers, length ``nrows+1``. Required for CRS.
        layout : :obj:`.core.conventions.Layout`
            Storage layout.
        chunk_height, sigma : :obj:`int`
            SELL parameters C and sigma.
        chunk_ptrs, chunk_lengths, row_perm, row_lengths : array_like, optional
            SELL chunk descriptors. ``row_lengths`` holds the true length of
            each row in sorted order.
        """
        DataItem.__init__(self, name=name, meta=meta)
        if nrows < 0 or ncols < 0:
            raise ValueError('Matrix dimensions must be non-negative.')
        if max(nrows, ncols) - 1 > INDEX_MAX:
            raise SizingError(f'Matrix dimension {max(nrows, ncols)} exceeds '
                f'the 32-bit index range ({INDEX_MAX + 1}).')
        self.nrows = int(nrows)
        self.ncols = int(ncols)
        self.layout = Layout(layout)
        self.values = np.ascontiguousarray(values, dtype=VALUE_DTYPE)
        self.col_indices = np.ascontiguousarray(col_indices, dtype=INDEX_DTYPE)
        self.chunk_height = int(chunk_height)
        self.sigma = int(sigma)
        self._partitions = {}
        if self.layout == Layout.CRS:
            if row_ptrs is None:
                raise ValueError('CRS matrix requires row pointers.')
            self.row_ptrs = np.ascontiguousarray(row_ptrs, dtype=POINTER_DTYPE)
            self.chunk_ptrs = self.chunk_lengths = None
            self.row_perm = self.row_lengths = None
        else:
            if any(a is None for a in (chunk_ptrs, chunk_lengths, row_perm, row_lengths)):
                raise ValueError('SELL matrix requires chunk descriptors.')
            self.row_ptrs = None
            self.chunk_ptrs = np.ascontiguousarray(chunk_ptrs, dtype=POINTER_DTYPE)
            self.chunk_lengths = np.ascontiguousarray(chunk_lengths, dtype=INDEX_DTYPE)
            self.row_perm = np.ascontiguousarray(row_perm, dtype=INDEX_DTYPE)
            self.row_lengths = np.ascontiguousarray(row_lengths, dtype=INDEX_DTYPE)
        self._validate()

    def _validate(self):
        if self.values.shape != self.col_indices.shape:
            raise ShapeError('Values and column indices differ in length.')
        if self.values.size and (self.col_indices.min() < 0 or
                self.col_indices.max() >= self.ncols):
            raise ValueError('Column index out of range.')
        if self.layout == Layout.CRS:
            if self.row_ptrs.shape != (self.nrows + 1,):
                raise ShapeError(f'Expected {self.nrows + 1} row pointers, '
                    f'got {self.row_ptrs.size}.')
            if self.row_ptrs[0] != 0 or self.row_ptrs[-1] != self.values.size:
                raise ValueError('Row pointers do not cover the stored values.')
            if np.any(np.diff(self.row_ptrs) < 0):
                raise ValueError('Row pointers must be nondecreasing.')
        else:
            C = self.chunk_height
            nchunks = self.chunk_lengths.size
            if self.row_perm.size != nchunks * C or self.row_lengths.size != nchunks * C:
                raise ShapeError('SELL row permutation does not match chunk count.')
            if self.chunk_ptrs.shape != (nchunks + 1,) or \
                    self.chunk_ptrs[-1] != self.values.size:
                raise ValueError('Chunk pointers do not cover the stored values.')
            if np.any(np.diff(self.chunk_ptrs) != C * self.chunk_lengths.astype(np.int64)):
                raise ValueError('Chunk pointers inconsistent with chunk lengths.')

    def __repr__(self):
        fmt = 'CRS' if self.layout == Layout.CRS else \
            f'SELL-{self.chunk_height}-{self.sigma}'
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz}, {fmt})"

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def nnz(self):
        """Number of stored matrix entries, padding excluded."""
        if self.layout == Layout.CRS:
            return int(self.values.size)
        return int(self.row_lengths.sum(dtype=np.int64))

    @property
    def nstored(self):
        """Number of stored elements, padding included."""
        return int(self.values.size)

    @property
    def nnzPerRow(self):
        """Average number of entries per row, N_nzr."""
        return self.nnz / self.nrows if self.nrows else 0.0

    @property
    def paddingFraction(self):
        """Fraction of stored elements that are SELL padding."""
        if self.nstored == 0:
            return 0.0
        return (self.nstored - self.nnz) / self.nstored

    @property
    def nchunks(self):
        return 0 if self.layout == Layout.CRS else int(self.chunk_lengths.size)

    @property
    def storageBytes(self):
        """
        Bytes held by each component of the storage scheme.

        Returns
        -------
        :obj:`dict`
            ``values``, ``indices``, ``pointers`` (row pointers or chunk
            descriptors) and ``total``.
        """
        if self.layout == Layout.CRS:
            pointers = self.row_ptrs.nbytes
        else:
            pointers = self.chunk_ptrs.nbytes + self.chunk_lengths.nbytes + \
                self.row_perm.nbytes + self.row_lengths.nbytes
        sizes = {'values': self.values.nbytes,
                 'indices': self.col_indices.nbytes,
                 'pointers': pointers}
        sizes['total'] = sum(sizes.values())
        return sizes

    def rowLengths(self):
        """Number of entries in each row, in original row order."""
        if self.layout == Layout.CRS:
            return np.diff(self.row_ptrs)
        lengths = np.zeros(self.nrows, dtype=np.int64)
        real = self.row_perm >= 0
        lengths[self.row_perm[real]] = self.row_lengths[real]
        return lengths

    def partition(self, nworkers, weights=None):
        """
        Static work partition for the parallel kernels.

        Rows (CRS) or chunks (SELL) are split into ``nworkers`` contiguous
        ranges carrying equal shares of stored elements, or shares
        proportional to ``weights``. Results are cached per matrix.

        Returns
        -------
        :obj:`numpy.ndarray`
            Bounds array of length ``nworkers+1``.
        """
        key = (int(nworkers), None if weights is None else tuple(float(w) for w in weights))
        if key not in self._partitions:
            offsets = self.row_ptrs if self.layout == Layout.CRS else self.chunk_ptrs
            self._partitions[key] = partitionWork(offsets, nworkers, weights)
            logger.debug(f'Partition for {key[0]} workers: {self._partitions[key].tolist()}')
        return self._partitions[key]

    def toScipy(self):
        """Return the matrix as a :obj:`scipy.sparse.csr_matrix`."""
        crs = self if self.layout == Layout.CRS else sellToCrs(self)
        return sp.csr_matrix((crs.values, crs.col_indices, crs.row_ptrs),
            shape=self.shape)

    def toDense(self):
        return self.toScipy().toarray()

    def diagonal(self):
        return self.toScipy().diagonal()

    def isHermitian(self):
        """Exact check that every stored (i,j,v) has a partner (j,i,conj(v))."""
        if self.nrows != self.ncols:
            return False
        A = self.toScipy()
        return (A != A.conj().T).nnz == 0

    @classmethod
    def fromScipy(cls, A, name=None, meta=None):
        """
        Build a CRS matrix from any scipy sparse matrix or dense array.

        Duplicates are summed and column indices sorted; explicit zeros are
        kept.
        """
        A = sp.csr_matrix(A, dtype=VALUE_DTYPE)
        A.sum_duplicates()
        A.sort_indices()
        return cls(A.shape[0], A.shape[1], A.data, A.indices, A.indptr,
            name=name, meta=meta)

    @classmethod
    def identity(cls, n, scale=1.0):
        return cls.fromScipy(sp.identity(n, dtype=VALUE_DTYPE, format='csr') * scale)

    def saveToPath(self, path):
        """
        Save matrix to a Matrix Market (``.mtx``) or numpy (``.npz``) file.

        Matrix Market output is the complex general form with 1-based indices.
        The ``.npz`` form stores the layout arrays as they are.
        """
        path, ext = self._checkSaveSuffix(path)
        if ext == 'mtx':
            scipy.io.mmwrite(str(path), self.toScipy(), field='complex',
                symmetry='general', comment=self.name or '')
        else:
            arrays = {'shape': np.array(self.shape, dtype=np.int64),
                      'layout': np.array(self.layout.value),
                      'sell': np.array([self.chunk_height, self.sigma], dtype=np.int64),
                      'values': self.values, 'col_indices': self.col_indices}
            if self.layout == Layout.CRS:
                arrays['row_ptrs'] = self.row_ptrs
            else:
                arrays.update(chunk_ptrs=self.chunk_ptrs,
                    chunk_lengths=self.chunk_lengths, row_perm=self.row_perm,
                    row_lengths=self.row_lengths)
            np.savez(path, **arrays)
        logger.info(f'Saved {self!r} to {path}')

    @classmethod
    def loadFromPath(cls, path):
        """
        Load matrix from a ``.mtx`` or ``.npz`` file.

        Returns
        -------
        :obj:`SparseMatrix`
            Matrix in the layout it was stored in (CRS for Matrix Market).
        """
        path, ext = cls._checkLoadSuffix(path)
        if ext == 'mtx':
            m = cls.fromScipy(scipy.io.mmread(str(path)), name=path.stem)
        else:
            with np.load(path) as f:
                nrows, ncols = (int(v) for v in f['shape'])
                layout = Layout(str(f['layout']))
                C, sigma = (int(v) for v in f['sell'])
                if layout == Layout.CRS:
                    m = cls(nrows, ncols, f['values'], f['col_indices'],
                        f['row_ptrs'], name=path.stem)
                else:
                    m = cls(nrows, ncols, f['values'], f['col_indices'],
                        layout=layout, chunk_height=C, sigma=sigma,
                        chunk_ptrs=f['chunk_ptrs'],
                        chunk_lengths=f['chunk_lengths'],
                        row_perm=f['row_perm'], row_lengths=f['row_lengths'],
                        name=path.stem)
        m.meta['fpath'] = path
        return m


def crsToSell(matrix, C, sigma=1):
    """
    Convert a CRS matrix to SELL-C-sigma.

    Parameters
    ----------
    matrix : :obj:`SparseMatrix`
        CRS matrix.
    C : :obj:`int`
        Chunk height, at least 1.
    sigma : :obj:`int`
        Sorting scope. Must be 1 or a multiple of C.

    Returns
    -------
    :obj:`SparseMatrix`
        Equivalent SELL matrix; ``meta['padding']`` holds the padding fraction.
    """
    if matrix.layout != Layout.CRS:
        raise ValueError('crsToSell expects a CRS matrix.')
    if C < 1:
        raise ValueError('Chunk height C must be at least 1.')
    if sigma < 1 or (sigma != 1 and sigma % C != 0):
        raise ValueError(f'sigma must be 1 or a multiple of C={C}, got {sigma}.')
    n = matrix.nrows
    nchunks = -(-n // C)
    npadded = nchunks * C
    lengths = np.diff(matrix.row_ptrs)

    # Sort rows by descending length inside each sigma window; stable, so
    # equal lengths keep their original order.
    perm = np.arange(n, dtype=np.int64)
    if sigma > 1:
        for start in range(0, n, sigma):
            window = slice(start, min(start + sigma, n))
            order = np.argsort(-lengths[window], kind='stable')
            perm[window] = perm[window][order]
    row_perm = np.full(npadded, -1, dtype=np.int64)
    row_perm[:n] = perm
    sorted_lengths = np.zeros(npadded, dtype=np.int64)
    sorted_lengths[:n] = lengths[perm]

    chunk_lengths = sorted_lengths.reshape(nchunks, C).max(axis=1) if nchunks else \
        np.zeros(0, dtype=np.int64)
    chunk_ptrs = np.zeros(nchunks + 1, dtype=np.int64)
    np.cumsum(C * chunk_lengths, out=chunk_ptrs[1:])
    total = int(chunk_ptrs[-1])

    # Slot (chunk k, column j, lane c) lives at chunk_ptrs[k] + j*C + c.
    # Padding gets value 0 and the first column of its row (0 if empty).
    first_col = np.zeros(npadded, dtype=np.int64)
    nonempty = sorted_lengths > 0
    first_col[nonempty] = matrix.col_indices[matrix.row_ptrs[row_perm[nonempty]]]
    slot_chunk = np.repeat(np.arange(nchunks), C * chunk_lengths)
    slot_lane = (np.arange(total) - chunk_ptrs[slot_chunk]) % C
    cols = first_col[slot_chunk * C + slot_lane]
    vals = np.zeros(total, dtype=VALUE_DTYPE)

    sorted_rows = np.repeat(np.arange(npadded), sorted_lengths)
    row_start = np.repeat(np.cumsum(sorted_lengths) - sorted_lengths, sorted_lengths)
    j = np.arange(sorted_rows.size) - row_start
    src = matrix.row_ptrs[row_perm[sorted_rows]] + j
    dest = chunk_ptrs[sorted_rows // C] + j * C + sorted_rows % C
    vals[dest] = matrix.values[src]
    cols[dest] = matrix.col_indices[src]

    sell = SparseMatrix(n, matrix.ncols, vals, cols, layout=Layout.SELL,
        chunk_height=C, sigma=sigma, chunk_ptrs=chunk_ptrs,
        chunk_lengths=chunk_lengths, row_perm=row_perm,
        row_lengths=sorted_lengths, name=matrix.name, meta=matrix.meta)
    sell.meta['padding'] = sell.paddingFraction
    logger.debug(f'Converted to {sell!r}, padding {sell.paddingFraction:.3%}')
    return sell


def sellToCrs(matrix):
    """Convert a SELL-C-sigma matrix back to CRS, dropping padding."""
    if matrix.layout == Layout.CRS:
        return matrix
    C = matrix.chunk_height
    real = matrix.row_perm >= 0
    sorted_rows = np.flatnonzero(real)
    orig = matrix.row_perm[real].astype(np.int64)
    lengths = matrix.row_lengths[real].astype(np.int64)
    row_ptrs = np.zeros(matrix.nrows + 1, dtype=np.int64)
    row_ptrs[1:][orig] = lengths
    np.cumsum(row_ptrs, out=row_ptrs)

    rows_rep = np.repeat(sorted_rows, lengths)
    orig_rep = np.repeat(orig, lengths)
    j = np.arange(rows_rep.size) - np.repeat(np.cumsum(lengths) - lengths, lengths)
    src = matrix.chunk_ptrs[rows_rep // C] + j * C + rows_rep % C
    dest = row_ptrs[orig_rep] + j
    vals = np.empty(rows_rep.size, dtype=VALUE_DTYPE)
    cols = np.empty(rows_rep.size, dtype=INDEX_DTYPE)
    vals[dest] = matrix.values[src]
    cols[dest] = matrix.col_indices[src]
    meta = dict(matrix.meta)
    meta.pop('padding', None)
    return SparseMatrix(matrix.nrows, matrix.ncols, vals, cols, row_ptrs,
        name=matrix.name, meta=meta)


def convertLayout(matrix, layout, C=32, sigma=1):
    """Return ``matrix`` in the requested layout (no copy if it matches)."""
    layout = Layout(layout)
    if layout == Layout.CRS:
        return sellToCrs(matrix)
    if matrix.layout == Layout.SELL and matrix.chunk_height == C and matrix.sigma == sigma:
        return matrix
    return crsToSell(sellToCrs(matrix), C, sigma)


def partitionWork(offsets, nworkers, weights=None):
    """
    Split items with cumulative work ``offsets`` into contiguous worker ranges.

    Parameters
    ----------
    offsets : array_like
        Nondecreasing cumulative work, length ``nitems+1`` (row pointers or
        chunk pointers).
    nworkers : :obj:`int`
        Number of workers.
    weights : array_like, optional
        Relative speed of each worker; worker k gets a share of the work
        proportional to ``weights[k]``.

    Returns
    -------
    :obj:`numpy.ndarray`
        int64 bounds of length ``nworkers+1``; worker k owns items
        ``bounds[k]:bounds[k+1]``.
    """
    if nworkers < 1:
        raise ValueError('Need at least one worker.')
    offsets = np.asarray(offsets, dtype=np.int64)
    nitems = offsets.size - 1
    if weights is None:
        weights = np.ones(nworkers)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (nworkers,):
        raise ValueError(f'Expected {nworkers} weights, got {weights.size}.')
    if np.any(weights < 0) or weights.sum() <= 0:
        raise ValueError('Weights must be non-negative with a positive sum.')
    shares = np.cumsum(weights)[:-1] / weights.sum()
    if offsets[-1] > 0:
        cuts = np.searchsorted(offsets, shares * offsets[-1], side='left')
    else:
        cuts = np.rint(shares * nitems).astype(np.int64)
    bounds = np.concatenate(([0], np.clip(cuts, 0, nitems), [nitems])).astype(np.int64)
    return np.maximum.accumulate(bounds)


class BlockVector(DataItem, Saveable, Loadable):
    """
    R complex vectors of length n stored interleaved (row-major).

    ``values`` is a C-contiguous ``(n, R)`` array, so element (i, r) sits at
    flat offset ``i*R + r``. A width-1 block is a plain vector.
    """

    TYPE_NAME = "BlockVector"
    LOAD_FILE_EXTENTIONS = ['bvec']
    SAVE_FILE_EXTENTIONS = ['bvec']
    _DTYPE_FIELD = 16

    def __init__(self, values, name=None, meta=None):
        DataItem.__init__(self, name=name, meta=meta)
        values = np.asarray(values)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ShapeError(f'Block vector must be 1D or 2D, got {values.ndim}D.')
        self.values = np.ascontiguousarray(values, dtype=VALUE_DTYPE)

    def __repr__(self):
        return f"BlockVector(n={self.nrows}, R={self.width})"

    @property
    def nrows(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    @property
    def nbytes(self):
        return self.values.nbytes

    def column(self, r):
        """Copy of column ``r`` as a 1D array."""
        return self.values[:, r].copy()

    def copy(self):
        return BlockVector(self.values.copy(), name=self.name, meta=self.meta)

    @classmethod
    def zeros(cls, n, R=1):
        return cls(np.zeros((n, R), dtype=VALUE_DTYPE))

    @classmethod
    def fromColumns(cls, columns):
        """Assemble a block from equally long 1D vectors (or width-1 blocks)."""
        cols = [c.values[:, 0] if isinstance(c, BlockVector) else np.asarray(c)
            for c in columns]
        return cls(np.stack(cols, axis=1))

    def saveToPath(self, path):
        """
        Raw binary dump: n and R as little-endian int64, the element type name
        padded to 16 bytes, then the values in row-major order.
        """
        path, _ = self._checkSaveSuffix(path)
        header = np.array([self.nrows, self.width], dtype='<i8').tobytes()
        dtype = self.values.dtype.name.encode('ascii').ljust(self._DTYPE_FIELD, b'\0')
        with open(path, 'wb') as f:
            f.write(header)
            f.write(dtype)
            f.write(self.values.astype(self.values.dtype.newbyteorder('<')).tobytes())

    @classmethod
    def loadFromPath(cls, path):
        path, _ = cls._checkLoadSuffix(path)
        raw = Path(path).read_bytes()
        n, R = (int(v) for v in np.frombuffer(raw[:16], dtype='<i8'))
        dtype = np.dtype(raw[16:16 + cls._DTYPE_FIELD].rstrip(b'\0').decode('ascii'))
        data = np.frombuffer(raw[16 + cls._DTYPE_FIELD:], dtype=dtype.newbyteorder('<'))
        if data.size != n * R:
            raise ShapeError(f'Block vector file holds {data.size} elements, '
                f'header says {n}x{R}.')
        return cls(data.reshape(n, R), name=path.stem)


def _asArray(x):
    return x.values if isinstance(x, BlockVector) else np.atleast_2d(np.asarray(x).T).T


def randomBlockVector(n, R, seed, offset=0):
    """
    Block of random unit-modulus vectors.

    Each entry is exp(2*pi*i*u) with u uniform in [0, 1). Column ``r`` is
    drawn from the ``offset+r``-th child of ``SeedSequence(seed)`` with a
    Philox counter-based generator, so a column does not depend on the block
    width and column r of a width-R block equals the single column obtained
    with ``R=1, offset=r``.

    Parameters
    ----------
    n : :obj:`int`
        Vector length.
    R : :obj:`int`
        Number of columns.
    seed : :obj:`int`
        Root seed, recorded in ``meta['seed']``.
    offset : :obj:`int`, optional
        Index of the first column in the seed stream.

    Returns
    -------
    :obj:`BlockVector`
    """
    if n < 1 or R < 1:
        raise ValueError('Random block vectors need n >= 1 and R >= 1.')
    if offset < 0:
        raise ValueError('Column offset must be non-negative.')
    children = np.random.SeedSequence(seed).spawn(offset + R)[offset:]
    values = np.empty((n, R), dtype=VALUE_DTYPE)
    for r, child in enumerate(children):
        phase = np.random.Generator(np.random.Philox(child)).random(n)
        values[:, r] = np.exp(2j * np.pi * phase)
    return BlockVector(values, name=f'rand(seed={seed})',
        meta={'seed': seed, 'offset': offset, 'rng': 'Philox'})


def columnDot(x, y):
    """
    Column-wise dot products, result[r] = sum_i conj(x[i,r]) * y[i,r].

    Parameters
    ----------
    x, y : :obj:`BlockVector` or array_like
        Blocks of equal shape.

    Returns
    -------
    :obj:`numpy.ndarray`
        Complex array of length R.
    """
    xv, yv = _asArray(x), _asArray(y)
    if xv.shape != yv.shape:
        raise ShapeError(f'Shape mismatch in columnDot: {xv.shape} vs {yv.shape}.')
    return np.sum(np.conj(xv) * yv, axis=0)


def columnNrm2(x):
    """Squared 2-norm of each column, <x|x>, as a real array."""
    xv = _asArray(x)
    return np.sum(xv.real * xv.real + xv.imag * xv.imag, axis=0)
