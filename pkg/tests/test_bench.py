import importlib

import numpy as np
import pandas as pd
import pytest

from kpmperf.core.conventions import Stage
from kpmperf.core.errors import SizingError, VerificationError
from kpmperf.core.lattice import Domain, buildHamiltonian
from kpmperf.model.perfmodel import ProblemSpec, calcFlops, calcVKPM, calcCodeBalance
from kpmperf.bench import (SWEEP_COLUMNS, BenchResultSet, benchKernel, sweep,
    simulateOmega, checkMemory, SUITES, verify, calcScaling, checkTrend)
from kpmperf.bench.verify import CheckResult, resultsTable


@pytest.mark.parametrize('stage', list(Stage))
def test_bench_kernel(tiny_H, stage):
    res = benchKernel(stage, tiny_H, R=2, M=10, threads=2, reps=3, seed=1)
    problem = ProblemSpec.fromMatrix(tiny_H, 2, 10)
    assert res.stage == stage.value
    assert res.flops == calcFlops(problem)
    assert res.bytes == calcVKPM(stage, problem)
    assert len(res.times) == 3
    assert res.time_s == pytest.approx(float(np.median(res.times)))
    assert res.gflops == pytest.approx(res.flops / res.time_s / 1e9)
    assert res.omega == 1.0


def test_bench_kernel_from_domain():
    res = benchKernel('aug_spmmv', Domain(3, 3, 3), R=1, M=4, threads=1)
    assert res.N == 108 and res.threads == 1


def test_bench_kernel_needs_three_reps(tiny_H):
    with pytest.raises(ValueError):
        benchKernel('naive', tiny_H, reps=2)


def test_check_memory():
    with pytest.raises(SizingError):
        checkMemory(2**40, 13 * 2**40, 32)
    assert checkMemory(100, 1300, 1) > 0


def test_sweep_rows_and_header(tmp_path, tiny_H):
    seen = []
    results = BenchResultSet()
    results.itemadded.connect(seen.append)
    sweep(['aug_spmv', 'aug_spmmv'], [1, 2], [1, 2], tiny_H, M=4, reps=3,
        with_bmin=True, results=results)
    assert len(seen) == len(results) == 8
    # nesting order stage x R x threads
    assert [(r.stage, r.R, r.threads) for r in seen][:3] == \
        [('aug_spmv', 1, 1), ('aug_spmv', 1, 2), ('aug_spmv', 2, 1)]

    path = tmp_path / 'sweep.csv'
    results.saveToPath(path)
    header = path.read_text().splitlines()[0]
    assert header == ','.join(SWEEP_COLUMNS + ['b_min'])
    df = pd.read_csv(path)
    for _, row in df.iterrows():
        expected = calcCodeBalance(ProblemSpec.fromMatrix(tiny_H, int(row['R']), 4),
            stage=row['stage']).B_min
        assert row['b_min'] == pytest.approx(expected)


def test_sweep_without_bmin_has_fixed_header(tmp_path, tiny_H):
    results = sweep('aug_spmmv', [1], [1], tiny_H, M=4)
    path = tmp_path / 'sweep.csv'
    results.saveToPath(path)
    assert path.read_text().splitlines()[0] == \
        'kernel,stage,N,nnz,R,M,threads,time_s,gflops,bw_gbs,omega'


def test_sweep_gnuplot(tmp_path, tiny_H):
    results = sweep('naive', [1], [1], tiny_H, M=4)
    path = tmp_path / 'sweep.dat'
    results.saveToPath(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith('#') and lines[1] == '# ' + ' '.join(SWEEP_COLUMNS)
    assert len(lines[2].split()) == len(SWEEP_COLUMNS)


def test_result_set_selection(tiny_H):
    results = sweep('aug_spmmv', [1, 2], [1], tiny_H, M=4)
    first = next(iter(results))
    changes = []
    results.selectionchanged.connect(lambda item, sel: changes.append(sel))
    results.setSelection(first, False)
    assert changes == [False]
    assert len(results.toDataFrame()) == 1


def test_sweep_with_llc_reports_omega(small_H):
    results = sweep('aug_spmmv', [1, 8], [1], small_H, M=2, llc_size=16 * 1024)
    omegas = results.toDataFrame()['omega'].tolist()
    assert all(o >= 1.0 for o in omegas)
    assert omegas[1] >= omegas[0]


def test_simulate_omega(small_H):
    assert simulateOmega(small_H, 4, 64 * 2**20) == 1.0
    assert simulateOmega(small_H, 4, 8 * 1024) > 1.0


@pytest.mark.parametrize('suite', SUITES)
def test_verify_suite_passes(suite):
    results = verify([suite], seed=0, threads=2)
    assert results
    failed = [str(r) for r in results if not r.passed]
    assert not failed


def test_verify_unknown_suite():
    with pytest.raises(ValueError):
        verify(['speed'])


def test_check_result_table():
    rows = [CheckResult('traffic', 'a', True, 0.0, 0.0),
            CheckResult('traffic', 'b', False, 2.0, 0.0)]
    df = resultsTable(rows)
    assert df['passed'].tolist() == [True, False]
    assert str(rows[1]).startswith('[FAIL] traffic/b')


def test_verify_raises_on_failure(monkeypatch):
    verify_module = importlib.import_module('kpmperf.bench.verify')

    def failing(results, seed=0, threads=None):
        results.append(CheckResult('formats', 'broken', False, 1.0, 0.0))

    monkeypatch.setitem(verify_module._RUNNERS, 'formats', failing)
    with pytest.raises(VerificationError):
        verify(['formats'], raise_on_failure=True)


@pytest.mark.slow
def test_large_lattice_traffic():
    # 1.6e6 rows
    H = buildHamiltonian(Domain(100, 100, 40))
    assert H.nrows == 1_600_000
    res = benchKernel('aug_spmmv', H, R=4, M=4, reps=3)
    assert res.bytes == calcVKPM('aug_spmmv', ProblemSpec.fromMatrix(H, 4, 4))


@pytest.mark.slow
def test_large_lattice_omega():
    H = buildHamiltonian(Domain(100, 100, 40))
    omegas = [simulateOmega(H, R, 25 * 2**20) for R in (1, 4, 16, 32)]
    assert all(b >= a for a, b in zip(omegas, omegas[1:]))
    assert omegas[0] == 1.0
    # the gathered block vectors no longer fit at R=32
    assert omegas[-1] > 1


def test_calc_scaling():
    df = pd.DataFrame({'stage': ['naive'] * 3 + ['aug_spmmv'] * 2,
        'R': [1, 1, 1, 8, 8], 'threads': [4, 1, 2, 1, 2],
        'gflops': [3.0, 1.0, 2.0, 2.0, 5.0], 'bytes': 0})
    scaling = calcScaling(df)
    assert list(scaling.columns) == ['stage', 'R', 'threads', 'gflops', 'speedup']
    naive = scaling[scaling['stage'] == 'naive']
    assert naive['threads'].tolist() == [1, 2, 4]
    assert naive['speedup'].tolist() == [1.0, 2.0, 3.0]
    assert scaling[scaling['stage'] == 'aug_spmmv']['speedup'].tolist() == [1.0, 2.5]


def test_check_trend_report(tiny_H):
    report = checkTrend(tiny_H, [2, 1], R=4, M=4)
    scaling = report.scaling
    assert len(scaling) == 6
    assert set(zip(scaling['stage'], scaling['R'])) == {('naive', 1), ('aug_spmv', 1),
        ('aug_spmmv', 4)}
    assert (scaling[scaling['threads'] == 1]['speedup'] == 1.0).all()
    assert np.isfinite([report.naive_gflops, report.blocked_gflops,
        report.naive_speedup, report.blocked_speedup, report.serial_ratio]).all()
    assert isinstance(report.decoupled, bool)
    assert isinstance(report.saturating, bool)


@pytest.mark.slow
def test_trend_on_lattice(record_property):
    report = checkTrend(Domain(40, 40, 20), R=8, M=20)
    assert report.scaling['threads'].min() == 1
    record_property('decoupled', report.decoupled)
    record_property('saturating', report.saturating)
    record_property('serial_ratio', report.serial_ratio)
