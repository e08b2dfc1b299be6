'''Conventions.
Shorthands, constants and enums used throughout kpmperf.
'''

import enum

'''Lattice axes. Site index is x + nx*(y + ny*z).'''
X = 0
Y = 1
Z = 2

'''Orbital/spin components per lattice site.'''
ORBITALS = 4

'''Largest row/column index representable by the 32-bit local index type.'''
INDEX_MAX = 2**31 - 1

'''Cache line size in bytes used by the LLC simulator.'''
CACHE_LINE = 64

'''Flops per complex addition and multiplication.'''
F_ADD = 2
F_MUL = 6


class Layout(enum.Enum):
    """Sparse matrix storage layout."""
    CRS = 'crs'
    SELL = 'sell'


class Stage(enum.Enum):
    """Optimization stage of the KPM-DOS solver."""
    NAIVE = 'naive'
    AUG_SPMV = 'aug_spmv'
    AUG_SPMMV = 'aug_spmmv'

    @classmethod
    def parse(cls, value):
        """Accept a :obj:`Stage`, its value, or the stage number 0/1/2."""
        if isinstance(value, cls):
            return value
        aliases = {'0': cls.NAIVE, '1': cls.AUG_SPMV, '2': cls.AUG_SPMMV,
                   'stage0': cls.NAIVE, 'stage1': cls.AUG_SPMV,
                   'stage2': cls.AUG_SPMMV}
        key = str(value).lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f'Unknown stage "{value}". Use one of '
                f'{[s.value for s in cls]} or 0/1/2.') from None

    @property
    def kernel(self):
        """Name of the sweep kernel the stage is built around."""
        return {Stage.NAIVE: 'spmv', Stage.AUG_SPMV: 'aug_spmv',
                Stage.AUG_SPMMV: 'aug_spmmv'}[self]


class Damping(enum.Enum):
    """Kernel applied to Chebyshev moments before reconstruction."""
    NONE = 'none'
    JACKSON = 'jackson'


class Sampling(enum.Enum):
    """Abscissae used when reconstructing a DOS curve."""
    CHEBYSHEV = 'chebyshev'
    UNIFORM = 'uniform'


class Bottleneck(enum.Enum):
    MEMORY = 'memory'
    LLC = 'LLC'
    CORE = 'core'
