import numpy as np
import pytest

from kpmperf.core.conventions import Layout
from kpmperf.core.errors import ShapeError
from kpmperf.core.sparsemat import (SparseMatrix, BlockVector, crsToSell, sellToCrs,
    convertLayout, partitionWork, randomBlockVector, columnDot, columnNrm2)


@pytest.mark.parametrize('C,sigma', [(1, 1), (2, 1), (4, 4), (4, 16), (8, 32), (32, 64)])
def test_sell_round_trip(irregular, C, sigma):
    sell = crsToSell(irregular, C, sigma)
    assert sell.layout == Layout.SELL
    assert sell.nnz == irregular.nnz
    back = sellToCrs(sell)
    np.testing.assert_array_equal(back.row_ptrs, irregular.row_ptrs)
    np.testing.assert_array_equal(back.col_indices, irregular.col_indices)
    np.testing.assert_array_equal(back.values, irregular.values)


def test_sell_layout_details(irregular):
    sell = crsToSell(irregular, 4, 8)
    lengths = irregular.rowLengths()
    # every chunk is as long as its longest row
    for k in range(sell.nchunks):
        rows = sell.row_perm[4 * k:4 * k + 4]
        real = rows[rows >= 0]
        assert sell.chunk_lengths[k] == lengths[real].max(initial=0)
    # rows are sorted by descending length inside each window of 8
    sorted_lengths = sell.row_lengths[:irregular.nrows]
    for start in range(0, irregular.nrows, 8):
        window = sorted_lengths[start:start + 8]
        assert np.all(np.diff(window) <= 0)
    np.testing.assert_array_equal(sell.rowLengths(), lengths)
    assert np.count_nonzero(sell.values) == irregular.nnz
    assert sell.meta['padding'] == pytest.approx(sell.paddingFraction)


def test_sell_without_sorting_pads_more(irregular):
    unsorted = crsToSell(irregular, 8, 1)
    sorted_ = crsToSell(irregular, 8, 32)
    assert sorted_.paddingFraction <= unsorted.paddingFraction
    assert unsorted.nstored >= unsorted.nnz


def test_sell_regular_matrix_has_no_padding(small_H):
    # x/y-periodic lattice: rows of a chunk of 32 share their length
    sell = crsToSell(small_H, 32, 1)
    assert sell.paddingFraction == 0.0


def test_sell_parameter_validation(irregular):
    with pytest.raises(ValueError):
        crsToSell(irregular, 0)
    with pytest.raises(ValueError):
        crsToSell(irregular, 4, 6)
    with pytest.raises(ValueError):
        crsToSell(crsToSell(irregular, 4), 4)


def test_convert_layout(irregular):
    sell = convertLayout(irregular, Layout.SELL, 4, 4)
    assert convertLayout(sell, Layout.SELL, 4, 4) is sell
    other = convertLayout(sell, 'sell', 8, 8)
    assert other.chunk_height == 8
    assert convertLayout(sell, 'crs').layout == Layout.CRS


def test_storage_bytes(small_H):
    sizes = small_H.storageBytes
    assert sizes['values'] == 16 * small_H.nnz
    assert sizes['indices'] == 4 * small_H.nnz
    assert sizes['pointers'] == 8 * (small_H.nrows + 1)
    assert sizes['total'] == sizes['values'] + sizes['indices'] + sizes['pointers']


def test_to_scipy_and_dense(irregular):
    np.testing.assert_array_equal(crsToSell(irregular, 4, 8).toDense(),
        irregular.toDense())
    assert irregular.isHermitian()


def test_matrix_validation():
    with pytest.raises(ValueError):
        SparseMatrix(2, 2, [1.0], [3], [0, 1, 1])
    with pytest.raises(ShapeError):
        SparseMatrix(2, 2, [1.0, 2.0], [0], [0, 1, 2])
    with pytest.raises(ValueError):
        SparseMatrix(2, 2, [1.0], [0])


@pytest.mark.parametrize('ext', ['mtx', 'npz'])
def test_file_round_trip(tmp_path, irregular, ext):
    path = tmp_path / f'A.{ext}'
    irregular.saveToPath(path)
    loaded = SparseMatrix.loadFromPath(path)
    assert (abs(loaded.toScipy() - irregular.toScipy())).max() == 0
    assert loaded.meta['fpath'] == path


def test_npz_keeps_sell(tmp_path, irregular):
    sell = crsToSell(irregular, 4, 8)
    sell.saveToPath(tmp_path / 'A.npz')
    loaded = SparseMatrix.loadFromPath(tmp_path / 'A.npz')
    assert loaded.layout == Layout.SELL
    np.testing.assert_array_equal(loaded.row_perm, sell.row_perm)


def test_bad_suffix(tmp_path, irregular):
    with pytest.raises(ValueError):
        irregular.saveToPath(tmp_path / 'A.txt')


def test_partition_equal_shares():
    offsets = np.arange(0, 101, 10)
    bounds = partitionWork(offsets, 2)
    np.testing.assert_array_equal(bounds, [0, 5, 10])


def test_partition_weights():
    offsets = np.arange(0, 121, 1)
    bounds = partitionWork(offsets, 3, weights=[1, 1, 2])
    np.testing.assert_array_equal(bounds, [0, 30, 60, 120])


def test_partition_more_workers_than_items():
    bounds = partitionWork([0, 3, 6], 4)
    assert bounds[0] == 0 and bounds[-1] == 2
    assert np.all(np.diff(bounds) >= 0)


def test_partition_validation():
    with pytest.raises(ValueError):
        partitionWork([0, 1], 0)
    with pytest.raises(ValueError):
        partitionWork([0, 1], 2, weights=[1])
    with pytest.raises(ValueError):
        partitionWork([0, 1], 2, weights=[0, 0])


def test_random_vectors_unit_modulus():
    X = randomBlockVector(1000, 3, seed=11)
    np.testing.assert_allclose(np.abs(X.values), 1.0, rtol=0, atol=1e-15)
    assert X.meta['seed'] == 11


def test_random_vectors_reproducible_and_width_independent():
    X = randomBlockVector(500, 4, seed=5)
    np.testing.assert_array_equal(X.values, randomBlockVector(500, 4, seed=5).values)
    for r in range(4):
        single = randomBlockVector(500, 1, seed=5, offset=r)
        np.testing.assert_array_equal(single.values[:, 0], X.values[:, r])
    assert not np.array_equal(X.values, randomBlockVector(500, 4, seed=6).values)


def test_random_vectors_phase_mean():
    X = randomBlockVector(200000, 1, seed=1)
    assert abs(X.values.mean()) < 0.01


def test_random_vector_validation():
    with pytest.raises(ValueError):
        randomBlockVector(0, 1, 0)
    with pytest.raises(ValueError):
        randomBlockVector(10, 1, 0, offset=-1)


def test_column_dot():
    x = BlockVector(np.array([[1, 1j], [2, 0]]))
    y = BlockVector(np.array([[1j, 1j], [1, 3]]))
    np.testing.assert_array_equal(columnDot(x, y), [2 + 1j, 1])
    np.testing.assert_array_equal(columnNrm2(x), [5.0, 1.0])
    assert columnNrm2(x).dtype == np.float64
    with pytest.raises(ShapeError):
        columnDot(x, BlockVector.zeros(3, 2))


def test_block_vector_layout():
    cols = [np.arange(3) + 0j, 10 + np.arange(3) + 0j]
    X = BlockVector.fromColumns(cols)
    assert X.values.flags['C_CONTIGUOUS']
    # element (i, r) at flat offset i*R + r
    assert X.values.ravel()[1 * 2 + 1] == 11
    np.testing.assert_array_equal(X.column(1), cols[1])


def test_block_vector_file(tmp_path):
    X = randomBlockVector(17, 3, seed=2)
    X.saveToPath(tmp_path / 'x.bvec')
    raw = (tmp_path / 'x.bvec').read_bytes()
    assert len(raw) == 16 + 16 + 17 * 3 * 16
    assert np.frombuffer(raw[:16], dtype='<i8').tolist() == [17, 3]
    np.testing.assert_array_equal(BlockVector.loadFromPath(tmp_path / 'x.bvec').values,
        X.values)


def test_column_dot_matches_extended_precision():
    x = randomBlockVector(100_000, 3, seed=1).values
    y = randomBlockVector(100_000, 3, seed=2).values
    terms = np.conj(x).astype(np.clongdouble) * y.astype(np.clongdouble)
    exact = np.sum(terms, axis=0)
    scale = np.sum(np.abs(terms), axis=0)
    assert np.all(np.abs(columnDot(x, y) - exact) / scale < 1e-13)
    norms = np.sum(np.abs(x.astype(np.clongdouble))**2, axis=0)
    assert np.all(np.abs(columnNrm2(x) - norms) / norms < 1e-13)
