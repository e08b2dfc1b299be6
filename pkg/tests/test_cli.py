import pandas as pd
import pytest

from kpmperf.cli import main
from kpmperf.core.conventions import Layout
from kpmperf.core.sparsemat import SparseMatrix
from kpmperf.bench.harness import SWEEP_COLUMNS


def test_gen_writes_matrix(tmp_path):
    out = tmp_path / 'H.mtx'
    assert main(['gen', '--domain', '3,3,3', '--out', str(out)]) == 0
    H = SparseMatrix.loadFromPath(out)
    assert H.nrows == 4 * 27


def test_gen_periodic_sell(tmp_path):
    out = tmp_path / 'H.npz'
    assert main(['gen', '--nx', '3', '--ny', '3', '--nz', '3', '--periodic', '1,1,1',
        '--format', 'sell:4:8', '--out', str(out)]) == 0
    H = SparseMatrix.loadFromPath(out)
    assert H.layout == Layout.SELL
    assert H.nnz == 13 * H.nrows


def test_gen_needs_extents():
    assert main(['gen', '--nx', '3']) == 2


def test_dos_from_generated_lattice(tmp_path):
    out = tmp_path / 'dos.csv'
    moments = tmp_path / 'mu.csv'
    assert main(['dos', '--gen', '3,3,3', '--M', '20', '--R', '2', '--threads', '1',
        '--out', str(out), '--moments', str(moments)]) == 0
    df = pd.read_csv(out)
    assert list(df.columns) == ['E', 'rho']
    assert len(df) == 40
    assert len(pd.read_csv(moments)) == 20


def test_dos_from_matrix_file_to_stdout(tmp_path, capsys):
    path = tmp_path / 'H.mtx'
    main(['gen', '--domain', '2,2,2', '--out', str(path)])
    capsys.readouterr()
    assert main(['dos', '--matrix', str(path), '--M', '10', '--R', '1',
        '--stage', 'naive', '--points', '16', '--sampling', 'uniform']) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == 'E,rho'
    assert len(lines) == 17


def test_dos_needs_matrix_source():
    assert main(['dos']) == 2


def test_dos_rejects_odd_moments():
    assert main(['dos', '--gen', '2,2,2', '--M', '9']) == 2


def test_bench_csv(tmp_path):
    out = tmp_path / 'bench.csv'
    assert main(['bench', '--gen', '3,3,3', '--stage', 'aug_spmv,aug_spmmv',
        '--R', '1,2', '--M', '4', '--threads', '1', '--b-min', '--out', str(out)]) == 0
    df = pd.read_csv(out)
    assert list(df.columns) == SWEEP_COLUMNS + ['b_min']
    assert len(df) == 4
    assert set(df['stage']) == {'aug_spmv', 'aug_spmmv'}


def test_bench_gnuplot(tmp_path):
    out = tmp_path / 'bench.dat'
    assert main(['bench', '--gen', '2,2,2', '--stage', '2', '--M', '4',
        '--threads', '1', '--out', str(out)]) == 0
    assert out.read_text().splitlines()[1] == '# ' + ' '.join(SWEEP_COLUMNS)


def test_model_sweep(tmp_path):
    out = tmp_path / 'model.csv'
    assert main(['model', '--R', '1..4', '--out', str(out)]) == 0
    df = pd.read_csv(out)
    assert df['R'].tolist() == [1, 2, 3, 4]
    assert df['B_min'].is_monotonic_decreasing
    assert (df['bottleneck'] == 'memory').all()


def test_model_simulated_omega(tmp_path):
    out = tmp_path / 'model.csv'
    assert main(['model', '--gen', '4,4,4', '--R', '1,2', '--simulate-omega',
        '--out', str(out)]) == 0
    # 256 rows fit easily into a 25 MiB cache
    assert pd.read_csv(out)['omega'].tolist() == [1.0, 1.0]


def test_model_simulated_omega_needs_matrix():
    assert main(['model', '--R', '1', '--simulate-omega']) == 2


def test_model_compare(capsys):
    assert main(['model', '--compare']) == 0
    out = capsys.readouterr().out
    assert 'aug_spmmv*' in out and 'cost_ratio' in out.splitlines()[0]


def test_model_unknown_profile():
    assert main(['model', '--profile', 'nehalem', '--R', '1']) == 2


def test_model_config_file(tmp_path):
    config = tmp_path / 'machines.ini'
    config.write_text('[Desk]\nb = 20\nP_peak = 300\nllc_size = 8\n')
    out = tmp_path / 'model.csv'
    assert main(['model', '--config', str(config), '--profile', 'desk', '--R', '1',
        '--out', str(out)]) == 0
    df = pd.read_csv(out)
    assert df['P_mem'].item() == pytest.approx(20 / df['B'].item())


def test_verify_formats(capsys):
    assert main(['verify', '--suite', 'formats', '--threads', '2']) == 0
    assert 'checks passed' in capsys.readouterr().out


def test_bad_format_option():
    assert main(['gen', '--domain', '2,2,2', '--format', 'ell']) == 2


def test_bench_trend(tmp_path):
    out = tmp_path / 'trend.csv'
    assert main(['bench', '--gen', '3,3,3', '--trend', '--M', '4', '--sweep-threads', '1,2',
        '--out', str(out)]) == 0
    df = pd.read_csv(out)
    assert list(df.columns) == ['stage', 'R', 'threads', 'gflops', 'speedup']
    assert set(df['R']) == {1, 8}
    assert len(df) == 6
