"""Command line front end: ``kpmperf gen|dos|bench|model|verify``.

Exit status is 0 on success, 1 if a verification check fails and 2 for
usage errors.
"""

import logging
logger = logging.getLogger('kpmperf')

import argparse
import sys

from .core.conventions import Stage, Damping, Sampling, Layout
from .core.errors import KpmError, VerificationError
from .core.lattice import Domain, buildHamiltonian, estimateBounds
from .core.sparsemat import SparseMatrix, convertLayout
from .core.solver import KpmConfig, MomentSeries, calcMoments, reconstructDos
from .core.kernels import defaultThreads
from .model.perfmodel import (MACHINES, ArithmeticSpec, ProblemSpec,
    REFERENCE_PROBLEM, REFERENCE_RATES, getMachine, loadModelConfig,
    calcBalanceSweep, compareResources, calcLLCDomain)
from .bench.harness import BenchResultSet, benchKernel, sweep, simulateOmega, \
    prepareMatrix, checkTrend
from .bench.verify import SUITES, verify
from .utils.utils import parseIntList, parseFloatList, parseFormat, parseDomain, \
    parsePotential, parseByteSize, writeGnuplot


def _commonParser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=0, help='root RNG seed')
    common.add_argument('--threads', type=int, default=None,
        help='kernel worker count (default: numba pool size)')
    common.add_argument('--weights', type=parseFloatList, default=None,
        help='relative work share per worker, e.g. 1,1,2')
    common.add_argument('--format', type=parseFormat, default=parseFormat('crs'),
        dest='storage', metavar='crs|sell:C:sigma', help='matrix storage format')
    common.add_argument('--out', default=None, help='output file (default: stdout)')
    common.add_argument('-v', '--verbose', action='store_true')
    common.add_argument('-q', '--quiet', action='store_true')
    return common


def _addMatrixSource(p, required=True):
    group = p.add_mutually_exclusive_group(required=required)
    group.add_argument('--matrix', help='Matrix Market (.mtx) or .npz matrix')
    group.add_argument('--gen', type=parseDomain, metavar='NX,NY,NZ',
        help='generate the lattice Hamiltonian of this domain')
    p.add_argument('--potential', type=parsePotential, default=parsePotential('zero'),
        help='zero, uniform:v or superlattice:sx,sy,sz:depth:dot')


def buildParser():
    common = _commonParser()
    parser = argparse.ArgumentParser(prog='kpmperf',
        description='KPM density of states solver and performance model.')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('gen', parents=[common], help='generate a Hamiltonian')
    p.add_argument('--domain', type=parseDomain, metavar='NX,NY,NZ')
    p.add_argument('--nx', type=int)
    p.add_argument('--ny', type=int)
    p.add_argument('--nz', type=int)
    p.add_argument('--potential', type=parsePotential, default=parsePotential('zero'))
    p.add_argument('--periodic', default='1,1,0', metavar='PX,PY,PZ',
        help='boundary condition per axis, 1 periodic 0 open')
    p.set_defaults(func=cmdGen)

    p = sub.add_parser('dos', parents=[common], help='compute the density of states')
    _addMatrixSource(p)
    p.add_argument('--M', type=int, default=200, help='number of moments')
    p.add_argument('--R', type=int, default=8, help='number of random vectors')
    p.add_argument('--stage', default=Stage.AUG_SPMMV.value,
        help='naive, aug_spmv or aug_spmmv (or 0/1/2)')
    p.add_argument('--points', type=int, default=None,
        help='number of energy points (default 2M)')
    p.add_argument('--damping', choices=[d.value for d in Damping],
        default=Damping.JACKSON.value)
    p.add_argument('--sampling', choices=[s.value for s in Sampling],
        default=Sampling.CHEBYSHEV.value)
    p.add_argument('--reduce-at-end', action='store_true')
    p.add_argument('--moments', default=None, help='also save the moments (.csv/.npz)')
    p.set_defaults(func=cmdDos)

    p = sub.add_parser('bench', parents=[common], help='time solver stages')
    _addMatrixSource(p)
    p.add_argument('--stage', default='naive,aug_spmv,aug_spmmv')
    p.add_argument('--R', type=parseIntList, default=[1])
    p.add_argument('--sweep-threads', type=parseIntList, default=None)
    p.add_argument('--M', type=int, default=100)
    p.add_argument('--reps', type=int, default=3)
    p.add_argument('--llc-size', type=parseByteSize, default=None,
        help='simulated LLC size for omega, e.g. 25MiB')
    p.add_argument('--b-min', action='store_true', help='add the model code balance')
    p.add_argument('--trend', action='store_true',
        help='thread scaling of the naive and blocked stages (blocked R = max of --R, at least 8)')
    p.set_defaults(func=cmdBench)

    p = sub.add_parser('model', parents=[common], help='code balance and roofline')
    _addMatrixSource(p, required=False)
    p.add_argument('--profile', default='IVB', help=f'one of {sorted(MACHINES)}')
    p.add_argument('--config', default=None, help='INI file with machine profiles')
    p.add_argument('--R', type=parseIntList, default=parseIntList('1..32'))
    p.add_argument('--N', type=int, default=None)
    p.add_argument('--nnzr', type=float, default=13.0)
    p.add_argument('--M', type=int, default=REFERENCE_PROBLEM.M)
    p.add_argument('--omega', type=float, default=1.0)
    p.add_argument('--simulate-omega', action='store_true',
        help='omega per R from an LRU simulation of the profile LLC')
    p.add_argument('--measure-llc', action='store_true',
        help='benchmark an LLC-sized problem per R for P_llc')
    p.add_argument('--reps', type=int, default=3)
    p.add_argument('--compare', action='store_true',
        help='compute cost of the reference run for each solver variant')
    p.set_defaults(func=cmdModel)

    p = sub.add_parser('verify', parents=[common], help='run verification suites')
    p.add_argument('--suite', action='append', choices=SUITES, default=None)
    p.set_defaults(func=cmdVerify)
    return parser


def _emit(df, out, float_format=None):
    if out is None:
        df.to_csv(sys.stdout, index=False, float_format=float_format)
    elif str(out).endswith('.dat'):
        writeGnuplot(df, out)
    else:
        df.to_csv(out, index=False, float_format=float_format)


def _loadMatrix(args):
    if args.matrix:
        matrix = SparseMatrix.loadFromPath(args.matrix)
    else:
        R = getattr(args, 'R', 1)
        matrix = prepareMatrix(Domain(*args.gen, potential=args.potential),
            max(R) if isinstance(R, list) else R)
    layout, C, sigma = args.storage
    if layout == Layout.SELL:
        matrix = convertLayout(matrix, layout, C, sigma)
    return matrix


def cmdGen(args):
    if args.domain is not None:
        extents = args.domain
    elif None not in (args.nx, args.ny, args.nz):
        extents = (args.nx, args.ny, args.nz)
    else:
        raise ValueError('Give --domain NX,NY,NZ or all of --nx, --ny, --nz.')
    flags = parseIntList(args.periodic)
    if len(flags) != 3:
        raise ValueError(f'Need three periodicity flags, got "{args.periodic}".')
    domain = Domain(*extents, potential=args.potential,
        periodic=tuple(bool(f) for f in flags))
    H = buildHamiltonian(domain)
    layout, C, sigma = args.storage
    if layout == Layout.SELL:
        H = convertLayout(H, layout, C, sigma)
    out = args.out or f'H_{domain}.mtx'
    H.saveToPath(out)
    logger.info(f'Wrote {H!r} to {out}')
    return 0


def cmdDos(args):
    matrix = _loadMatrix(args)
    bounds = estimateBounds(matrix)
    config = KpmConfig(M=args.M, R=args.R, seed=args.seed, stage=args.stage,
        bounds=bounds, threads=args.threads, weights=args.weights,
        reduce_at_end=args.reduce_at_end)
    series = calcMoments(matrix, config)
    if args.moments:
        series.saveToPath(args.moments)
    curve = reconstructDos(series.mu, bounds, npoints=args.points,
        damping=Damping(args.damping), nrows=matrix.nrows,
        sampling=Sampling(args.sampling))
    if args.out:
        curve.saveToPath(args.out)
    else:
        _emit(curve.toDataFrame(), None, float_format='%.17g')
    return 0


def cmdBench(args):
    matrix = _loadMatrix(args)
    if args.trend:
        report = checkTrend(matrix, args.sweep_threads, R=max(max(args.R), 8),
            M=args.M, reps=args.reps, seed=args.seed)
        _emit(report.scaling, args.out)
        return 0
    stages = [Stage.parse(s) for s in args.stage.split(',')]
    threads = args.sweep_threads or [args.threads or defaultThreads()]
    results = BenchResultSet()
    results.itemadded.connect(lambda r: logger.info(f'{r.stage} R={r.R} '
        f'threads={r.threads}: {r.time_s:.4f} s, {r.gflops:.3f} Gflop/s, '
        f'{r.bw_gbs:.2f} GB/s, omega={r.omega:.3f}'))
    sweep(stages, args.R, threads, matrix, M=args.M, reps=args.reps, seed=args.seed,
        weights=args.weights, llc_size=args.llc_size, with_bmin=args.b_min,
        results=results)
    if args.out:
        results.saveToPath(args.out)
    else:
        _emit(results.toDataFrame(), None)
    return 0


def cmdModel(args):
    arith, machines = (loadModelConfig(args.config) if args.config
        else (ArithmeticSpec(), MACHINES))
    machine = getMachine(args.profile, machines)
    matrix = None
    if args.matrix or args.gen:
        matrix = _loadMatrix(args)
        problem = ProblemSpec.fromMatrix(matrix, M=args.M)
    elif args.N is not None:
        problem = ProblemSpec(args.N, int(round(args.nnzr * args.N)), M=args.M)
    else:
        problem = ProblemSpec(REFERENCE_PROBLEM.N,
            int(round(args.nnzr * REFERENCE_PROBLEM.N)), M=args.M)

    if args.compare:
        _emit(compareResources(problem.withR(REFERENCE_PROBLEM.R), REFERENCE_RATES,
            arith), args.out)
        return 0

    omega = args.omega
    if args.simulate_omega:
        if matrix is None:
            raise ValueError('--simulate-omega needs --gen or --matrix.')
        omega = {R: simulateOmega(matrix, R, machine.llcBytes, seed=args.seed)
                 for R in args.R}
    P_llc = None
    if args.measure_llc:
        P_llc = {}
        for R in args.R:
            domain = calcLLCDomain(machine, R, arith=arith)
            res = benchKernel(Stage.AUG_SPMMV, domain, R=R, M=args.M,
                threads=args.threads, reps=args.reps, seed=args.seed,
                weights=args.weights)
            P_llc[R] = res.gflops
    df = calcBalanceSweep(problem, args.R, machine, arith, omega, P_llc)
    _emit(df, args.out)
    return 0


def cmdVerify(args):
    results = verify(args.suite, seed=args.seed, threads=args.threads)
    failed = [r for r in results if not r.passed]
    for r in results:
        print(r)
    print(f'{len(results) - len(failed)} of {len(results)} checks passed')
    return 1 if failed else 0


def main(argv=None):
    parser = buildParser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code
    if args.verbose:
        logger.setLevel(logging.DEBUG)
    elif args.quiet:
        logger.setLevel(logging.WARNING)
    try:
        return args.func(args)
    except VerificationError as e:
        logger.error(str(e))
        return 1
    except (ValueError, KpmError, OSError) as e:
        logger.error(str(e))
        return 2


if __name__ == '__main__':
    sys.exit(main())
