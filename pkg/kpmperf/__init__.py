__version__ = "0.1.0"
__author__ = 'pyKPMPerf developers'
__credits__ = 'Kernel Polynomial Method performance engineering toolkit'

import sys
assert sys.version_info >= (3, 8)

import logging
logger = logging.getLogger('kpmperf')
logger.setLevel(logging.INFO)
fh = logging.StreamHandler()
fh_formatter = logging.Formatter('%(asctime)s %(levelname)s %(lineno)d:%(filename)s(%(process)d) - %(message)s')
fh.setFormatter(fh_formatter)
logger.addHandler(fh)

import importlib as _importlib

submodules = [
        'core',
        'model',
        'bench',
        'utils',
        'cli',
    ]

# Load core along with top-level name
from .core import *

# Load submodules on-demand
def __getattr__(subname):
    if subname in submodules:
        return _importlib.import_module(f'{__name__}.{subname}')
    raise AttributeError(f"Module '{__name__}' has no attribute '{subname}'")
