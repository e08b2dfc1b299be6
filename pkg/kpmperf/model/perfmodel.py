'''Analytical performance model of the KPM-DOS solver.

Minimum traffic and flops per kernel call, the solver's minimum traffic for
each stage, code balance, and roofline predictions (plain and with a
measured last-level-cache ceiling).

Units: bytes and flops are plain counts, bandwidths GB/s (1e9 bytes/s),
performance Gflop/s, cache sizes MiB.
'''

import logging
logger = logging.getLogger('kpmperf')

import configparser
from dataclasses import dataclass, field, replace
import math
from pathlib import Path

import numpy as np
import pandas as pd

from ..core.conventions import Stage, Bottleneck, ORBITALS
from ..core.lattice import Domain


@dataclass(frozen=True)
class ArithmeticSpec:
    """Bytes per value and index, flops per complex add and multiply."""

    S_d: int = 16
    S_i: int = 4
    F_a: int = 2
    F_m: int = 6

    def __post_init__(self):
        if min(self.S_d, self.S_i, self.F_a, self.F_m) <= 0:
            raise ValueError('Arithmetic sizes and flop weights must be positive.')

    @property
    def rowFlops(self):
        """Flops per row and vector of the fused vector operations."""
        return math.ceil(7 * self.F_a / 2) + math.ceil(9 * self.F_m / 2)


@dataclass(frozen=True)
class ProblemSpec:
    """
    Matrix and solver size.

    Attributes
    ----------
    N : :obj:`int`
        Matrix dimension.
    N_nz : :obj:`int`
        Stored nonzeros.
    R : :obj:`int`
        Random vectors.
    M : :obj:`int`
        Moments, even.
    """

    N: int
    N_nz: int
    R: int = 1
    M: int = 2

    def __post_init__(self):
        if self.N < 1 or self.N_nz < 0 or self.R < 1:
            raise ValueError(f'Invalid problem size {self}.')
        if self.M < 2 or self.M % 2:
            raise ValueError(f'M must be even and >= 2, got {self.M}.')

    @property
    def N_nzr(self):
        return self.N_nz / self.N

    @classmethod
    def fromMatrix(cls, matrix, R=1, M=2):
        return cls(matrix.nrows, matrix.nnz, R, M)

    @classmethod
    def fromDomain(cls, domain, R=1, M=2, nzr=13):
        """Size of a generated lattice matrix with ``nzr`` entries per row."""
        N = domain.N if isinstance(domain, Domain) else ORBITALS * int(np.prod(domain))
        return cls(N, int(round(nzr * N)), R, M)

    def withR(self, R):
        return replace(self, R=R)


@dataclass(frozen=True)
class MachineProfile:
    """
    Node properties entering the roofline model.

    ``P_llc`` is the measured performance of the kernel with its working set
    inside the LLC; ``None`` until measured.
    """

    name: str
    b: float
    P_peak: float
    llc_size: float
    P_llc: float = None
    clock: float = None
    simd: int = None
    cores: int = None

    def __post_init__(self):
        if not (self.b > 0 and self.P_peak > 0):
            raise ValueError(f'Machine {self.name}: b and P_peak must be positive.')
        if self.P_llc is not None and not self.P_llc > 0:
            raise ValueError(f'Machine {self.name}: P_llc must be positive.')

    @property
    def llcBytes(self):
        return int(self.llc_size * 2**20)

    @property
    def machineBalance(self):
        """Bytes per flop the machine sustains at peak."""
        return self.b / self.P_peak


MACHINES = {
    'IVB': MachineProfile('IVB', b=50, P_peak=176, llc_size=25, clock=2200,
        simd=32, cores=10),
    'SNB': MachineProfile('SNB', b=48, P_peak=166.4, llc_size=20, clock=2600,
        simd=32, cores=8),
    'K20m': MachineProfile('K20m', b=150, P_peak=1174, llc_size=1.25, clock=706,
        simd=512, cores=13),
    'K20X': MachineProfile('K20X', b=170, P_peak=1311, llc_size=1.5, clock=732,
        simd=512, cores=14),
}


def getMachine(name, machines=None):
    """Look up a profile by name, ignoring case."""
    machines = MACHINES if machines is None else machines
    for key, profile in machines.items():
        if key.lower() == str(name).lower():
            return profile
    raise ValueError(f'Unknown machine "{name}". Known: {sorted(machines)}.')


def loadModelConfig(path):
    """
    Read arithmetic and machine profiles from an INI file.

    An optional ``[arithmetic]`` section sets ``S_d``, ``S_i``, ``F_a``,
    ``F_m``; every other section is a machine with keys ``b``, ``P_peak``,
    ``llc_size`` and optionally ``P_llc``, ``clock``, ``simd``, ``cores``.
    Machines extend or replace the built-in profiles.

    Returns
    -------
    :obj:`tuple`
        (:obj:`ArithmeticSpec`, :obj:`dict` of :obj:`MachineProfile`)
    """
    path = Path(path)
    parser = configparser.ConfigParser()
    parser.optionxform = str
    if not parser.read(path):
        raise ValueError(f'Cannot read model config {path}.')
    arith = ArithmeticSpec()
    machines = dict(MACHINES)
    for section in parser.sections():
        s = parser[section]
        try:
            if section.lower() == 'arithmetic':
                arith = ArithmeticSpec(**{k: s.getint(k) for k in s})
                continue
            ints = {'simd', 'cores'}
            values = {k: (s.getint(k) if k in ints else s.getfloat(k)) for k in s}
            machines[section] = MachineProfile(section, **values)
        except TypeError as e:
            raise ValueError(f'Bad key in section [{section}] of {path}: {e}') from None
    logger.info(f'Loaded model config {path}: {len(machines)} machines')
    return arith, machines


@dataclass(frozen=True)
class KernelCost:
    """Minimum bytes and flops of one call, and calls per solve."""

    function: str
    bytes: int
    flops: int
    calls: int

    @property
    def total_bytes(self):
        return self.bytes * self.calls

    @property
    def total_flops(self):
        return self.flops * self.calls


FUNCTIONS = ('spmv', 'axpy', 'scal', 'nrm2', 'dot', 'aug_spmv', 'aug_spmmv')

STAGE_FUNCTIONS = {
    Stage.NAIVE: ('spmv', 'axpy', 'scal', 'nrm2', 'dot'),
    Stage.AUG_SPMV: ('aug_spmv',),
    Stage.AUG_SPMMV: ('aug_spmmv',),
}


def calcKernelCost(function, problem, arith=ArithmeticSpec()):
    """
    Minimum traffic and flops of one kernel call and its call count in a
    full solve.

    Parameters
    ----------
    function : :obj:`str`
        One of ``spmv``, ``axpy``, ``scal``, ``nrm2``, ``dot``, ``aug_spmv``,
        ``aug_spmmv``.
    problem : :obj:`ProblemSpec`
    arith : :obj:`ArithmeticSpec`, optional

    Returns
    -------
    :obj:`KernelCost`
    """
    N, nnz, R, M = problem.N, problem.N_nz, problem.R, problem.M
    Sd, Si, Fa, Fm = arith.S_d, arith.S_i, arith.F_a, arith.F_m
    matrix = nnz * (Sd + Si)
    sweeps = R * M // 2
    table = {
        'spmv': (matrix + 2 * N * Sd, nnz * (Fa + Fm), sweeps),
        'axpy': (3 * N * Sd, N * (Fa + Fm), 2 * sweeps),
        'scal': (2 * N * Sd, N * Fm, sweeps),
        'nrm2': (N * Sd, N * (math.ceil(Fa / 2) + math.ceil(Fm / 2)), sweeps),
        'dot': (2 * N * Sd, N * (Fa + Fm), sweeps),
        'aug_spmv': (matrix + 3 * N * Sd, nnz * (Fa + Fm) + N * arith.rowFlops, sweeps),
        'aug_spmmv': (matrix + 3 * R * N * Sd,
            R * (nnz * (Fa + Fm) + N * arith.rowFlops), M // 2),
    }
    if function not in table:
        raise ValueError(f'Unknown function "{function}". Use one of {list(FUNCTIONS)}.')
    return KernelCost(function, *table[function])


def calcCostTable(problem, arith=ArithmeticSpec()):
    """All kernel costs as a DataFrame."""
    rows = [calcKernelCost(f, problem, arith) for f in FUNCTIONS]
    return pd.DataFrame({'function': [c.function for c in rows],
        'bytes': [c.bytes for c in rows], 'flops': [c.flops for c in rows],
        'calls': [c.calls for c in rows],
        'total_bytes': [c.total_bytes for c in rows],
        'total_flops': [c.total_flops for c in rows]})


def calcVKPM(stage, problem, arith=ArithmeticSpec()):
    """
    Minimum data traffic of a complete solve in bytes.

    naive: RM/2[N_nz(S_d+S_i) + 13NS_d], aug_spmv: RM/2[N_nz(S_d+S_i) + 3NS_d],
    aug_spmmv: M/2[N_nz(S_d+S_i) + 3RNS_d].
    """
    stage = Stage.parse(stage)
    return sum(calcKernelCost(f, problem, arith).total_bytes
        for f in STAGE_FUNCTIONS[stage])


def calcFlops(problem, arith=ArithmeticSpec()):
    """Flops of a complete solve, the same for every stage."""
    return calcKernelCost('aug_spmmv', problem, arith).total_flops


def calcBalanceLimit(N_nzr, arith=ArithmeticSpec()):
    """Code balance of the blocked solver for R -> infinity."""
    return 3 * arith.S_d / (N_nzr * (arith.F_a + arith.F_m) + arith.rowFlops)


@dataclass(frozen=True)
class BalanceReport:
    """
    Code balance of a solve.

    Attributes
    ----------
    V_min : :obj:`int`
        Minimum traffic of ``stage`` in bytes.
    flops : :obj:`int`
        Flops of the solve.
    B_min : :obj:`float`
        V_min/flops.
    omega : :obj:`float`
        Traffic inflation factor, at least 1.
    B : :obj:`float`
        omega*B_min.
    breakdown : :obj:`dict`
        Minimum traffic of every stage.
    """

    stage: Stage
    V_min: int
    flops: int
    B_min: float
    omega: float
    B: float
    breakdown: dict = field(default_factory=dict)


def calcCodeBalance(problem, arith=ArithmeticSpec(), omega=1.0, stage=Stage.AUG_SPMMV):
    """
    Minimum and effective code balance.

    For the blocked solver B_min = [N_nzr/R*(S_d+S_i) + 3S_d] /
    [N_nzr(F_a+F_m) + ceil(7F_a/2) + ceil(9F_m/2)].

    Returns
    -------
    :obj:`BalanceReport`
    """
    if omega < 1:
        raise ValueError(f'omega must be >= 1, got {omega}.')
    stage = Stage.parse(stage)
    breakdown = {s.value: calcVKPM(s, problem, arith) for s in Stage}
    V = breakdown[stage.value]
    flops = calcFlops(problem, arith)
    B_min = V / flops if flops else math.inf
    return BalanceReport(stage, V, flops, B_min, float(omega), omega * B_min, breakdown)


@dataclass(frozen=True)
class RooflinePrediction:
    """
    Roofline bounds in Gflop/s.

    ``P_custom`` is min(P_mem, P_llc), ``None`` without a measured P_llc.
    """

    P_mem: float
    P_star: float
    P_custom: float
    bottleneck: Bottleneck

    @property
    def bound(self):
        """The tightest available bound."""
        return self.P_star if self.P_custom is None else min(self.P_star, self.P_custom)


def calcRoofline(balance, machine):
    """
    Roofline prediction for a code balance on a machine.

    Parameters
    ----------
    balance : :obj:`BalanceReport` or :obj:`float`
        Code balance B in bytes/flop.
    machine : :obj:`MachineProfile`

    Returns
    -------
    :obj:`RooflinePrediction`
        P_mem = b/B, P* = min(P_peak, P_mem), and the bottleneck with the
        lowest ceiling (memory, LLC or core; ties go to memory).
    """
    B = balance.B if isinstance(balance, BalanceReport) else float(balance)
    P_mem = machine.b / B if B > 0 else math.inf
    P_star = min(machine.P_peak, P_mem)
    ceilings = [(Bottleneck.MEMORY, P_mem)]
    P_custom = None
    if machine.P_llc is not None:
        P_custom = min(P_mem, machine.P_llc)
        ceilings.append((Bottleneck.LLC, machine.P_llc))
    ceilings.append((Bottleneck.CORE, machine.P_peak))
    bottleneck = min(ceilings, key=lambda c: c[1])[0]
    return RooflinePrediction(P_mem, P_star, P_custom, bottleneck)


def _valueForR(value, R, default):
    if callable(value):
        return value(R)
    if isinstance(value, dict):
        return value.get(R, default)
    return default if value is None else value


def calcBalanceSweep(problem, Rs, machine=None, arith=ArithmeticSpec(), omega=1.0,
    P_llc=None):
    """
    Code balance and roofline bounds of the blocked solver for every R.

    Parameters
    ----------
    omega : :obj:`float`, :obj:`dict` or callable
        Constant inflation, a mapping R -> omega, or a function of R.
    P_llc : :obj:`float`, :obj:`dict` or callable, optional
        Measured LLC ceiling per R, overriding the machine's ``P_llc``.

    Returns
    -------
    :obj:`pandas.DataFrame`
        Columns R, B_min, omega, B and, with a machine, P_mem, P_star,
        P_custom, bottleneck.
    """
    rows = []
    for R in Rs:
        report = calcCodeBalance(problem.withR(R), arith, _valueForR(omega, R, 1.0))
        row = {'R': R, 'B_min': report.B_min, 'omega': report.omega, 'B': report.B}
        if machine is not None:
            llc = _valueForR(P_llc, R, machine.P_llc)
            pred = calcRoofline(report, replace(machine, P_llc=llc))
            row.update(P_mem=pred.P_mem, P_star=pred.P_star, P_custom=pred.P_custom,
                bottleneck=pred.bottleneck.value)
        rows.append(row)
    return pd.DataFrame(rows)


@dataclass(frozen=True)
class StageRate:
    """Sustained rate of one solver variant, in Gflop/s on ``nodes`` nodes."""

    label: str
    gflops: float
    nodes: int = 1

    def __post_init__(self):
        if not (self.gflops > 0 and self.nodes >= 1):
            raise ValueError(f'Rate of {self.label} must be positive.')


'''Largest published run: 6400x6400x40 sites, R=32, M=2000.'''
REFERENCE_PROBLEM = ProblemSpec.fromDomain((6400, 6400, 40), R=32, M=2000)

REFERENCE_RATES = (
    StageRate('aug_spmv', 14.9e3, 288),
    StageRate('aug_spmmv*', 107e3, 1024),
    StageRate('aug_spmmv', 116e3, 1024),
)


def compareResources(problem, rates, arith=ArithmeticSpec(), reference=None):
    """
    Compute cost of solving ``problem`` with each solver variant.

    Parameters
    ----------
    problem : :obj:`ProblemSpec`
    rates : iterable of :obj:`StageRate`
    reference : :obj:`str`, optional
        Label of the row other costs are compared to; the last row if omitted.

    Returns
    -------
    :obj:`pandas.DataFrame`
        Columns label, tflops, nodes, hours, node_hours and cost_ratio
        (node hours relative to the reference row).
    """
    rates = list(rates)
    if not rates:
        raise ValueError('Need at least one rate.')
    flops = calcFlops(problem, arith)
    hours = np.array([flops / (r.gflops * 1e9) / 3600 for r in rates])
    nodes = np.array([r.nodes for r in rates])
    df = pd.DataFrame({'label': [r.label for r in rates],
        'tflops': [r.gflops / 1e3 for r in rates], 'nodes': nodes,
        'hours': hours, 'node_hours': hours * nodes})
    labels = list(df['label'])
    ref = labels.index(reference) if reference is not None else len(rates) - 1
    df['cost_ratio'] = df['node_hours'] / df['node_hours'].iloc[ref]
    return df


def calcLLCDomain(machine, R, fill=0.5, nzr=13, arith=ArithmeticSpec()):
    """
    Cubic lattice whose working set fits into ``fill`` of the machine's LLC.

    The working set is the CRS matrix (values, indices, row pointers) plus
    the two block vectors of width R.
    """
    if not 0 < fill <= 1:
        raise ValueError(f'fill must be in (0, 1], got {fill}.')
    per_row = nzr * (arith.S_d + arith.S_i) + 8 + 2 * R * arith.S_d
    sites = fill * machine.llcBytes / (ORBITALS * per_row)
    n = max(2, int(np.floor(np.cbrt(sites))))
    domain = Domain(n, n, n)
    logger.info(f'LLC-sized domain for {machine.name}, R={R}: {domain} '
        f'({domain.N * per_row / 2**20:.2f} MiB working set)')
    return domain
