"""Utility functions.

Parsing of the small command-line mini-languages (integer ranges, storage
formats, lattice extents, potentials, byte sizes) and gnuplot-ready output.
"""

import logging
logger = logging.getLogger('kpmperf')

import os
import re

import numpy as np

from ..core.conventions import Layout
from ..core.lattice import PotentialSpec


_RANGE = re.compile(r'^\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*$')
_SIZE = re.compile(r'^\s*([0-9.]+)\s*([kmgt]?)(i?b?)\s*$', re.IGNORECASE)


def parseIntList(text):
    """Parse ``"1..32"``, ``"1,2,4,8"`` or a mix like ``"1,4..6"``.

    Ranges are inclusive.

    Returns
    -------
    :obj:`list`
        Integers in the order given.
    """
    values = []
    for part in str(text).split(','):
        if not part.strip():
            continue
        match = _RANGE.match(part)
        if match:
            lo, hi = int(match.group(1)), int(match.group(2))
            if hi < lo:
                raise ValueError(f'Empty range "{part.strip()}".')
            values.extend(range(lo, hi + 1))
        else:
            try:
                values.append(int(part))
            except ValueError:
                raise ValueError(f'Not an integer or range: "{part.strip()}".') from None
    if not values:
        raise ValueError(f'No integers in "{text}".')
    return values


def parseFloatList(text):
    """Parse comma separated floats, e.g. per-thread weights ``"1,1,0.5"``."""
    try:
        return [float(p) for p in str(text).split(',') if p.strip()]
    except ValueError:
        raise ValueError(f'Not a list of numbers: "{text}".') from None


def parseFormat(text):
    """Parse a storage format ``crs``, ``sell:C`` or ``sell:C:sigma``.

    Returns
    -------
    :obj:`tuple`
        (:obj:`.core.conventions.Layout`, C, sigma); C = sigma = 1 for CRS.
    """
    parts = str(text).lower().split(':')
    if parts[0] == Layout.CRS.value and len(parts) == 1:
        return Layout.CRS, 1, 1
    if parts[0] == Layout.SELL.value and len(parts) in (2, 3):
        try:
            C = int(parts[1])
            sigma = int(parts[2]) if len(parts) == 3 else 1
        except ValueError:
            raise ValueError(f'Bad SELL parameters in "{text}".') from None
        return Layout.SELL, C, sigma
    raise ValueError(f'Unknown format "{text}". Use crs or sell:C:sigma.')


def parseDomain(text):
    """Parse lattice extents ``"nx,ny,nz"``."""
    ext = parseIntList(text)
    if len(ext) != 3:
        raise ValueError(f'Need three lattice extents, got "{text}".')
    return tuple(ext)


def parsePotential(text):
    """Parse ``zero``, ``uniform:v`` or ``superlattice:sx,sy,sz:depth:dot``."""
    parts = str(text).split(':')
    kind = parts[0].lower()
    try:
        if kind == 'zero' and len(parts) == 1:
            return PotentialSpec.zero()
        if kind == 'uniform' and len(parts) == 2:
            return PotentialSpec.uniform(float(parts[1]))
        if kind == 'superlattice' and len(parts) == 4:
            return PotentialSpec.superlattice(parseDomain(parts[1]),
                float(parts[2]), int(parts[3]))
    except ValueError as e:
        raise ValueError(f'Bad potential "{text}": {e}') from None
    raise ValueError(f'Unknown potential "{text}". Use zero, uniform:v or '
        f'superlattice:sx,sy,sz:depth:dot.')


def parseByteSize(text):
    """Parse ``"25MiB"``, ``"20M"``, ``"1.25MiB"`` or plain bytes; binary units."""
    match = _SIZE.match(str(text))
    if not match:
        raise ValueError(f'Not a byte size: "{text}".')
    scale = 1024 ** ' kmgt'.index(match.group(2).lower() or ' ')
    return int(round(float(match.group(1)) * scale))


def availableMemory():
    """Physical memory in bytes, or None where sysconf cannot tell."""
    try:
        return os.sysconf('SC_PAGE_SIZE') * os.sysconf('SC_PHYS_PAGES')
    except (ValueError, OSError, AttributeError):
        return None


def writeGnuplot(df, path, title=None):
    """Write a DataFrame as whitespace separated columns with a ``#`` header.

    Parameters
    ----------
    df : :obj:`pandas.DataFrame`
        Table to write.
    path : :obj:`pathlib.Path`, :obj:`str`
        Output ``.dat`` file.
    title : :obj:`str`, optional
        Extra comment line above the column header.
    """
    with open(path, 'w') as f:
        if title:
            f.write(f'# {title}\n')
        f.write('# ' + ' '.join(str(c) for c in df.columns) + '\n')
        df.to_csv(f, sep=' ', header=False, index=False, float_format='%.10g')


def relativeError(a, b):
    """Max relative deviation of b from a, scaled by the largest |a|."""
    a = np.asarray(a)
    b = np.asarray(b)
    scale = np.max(np.abs(a)) if a.size else 0.0
    return float(np.max(np.abs(a - b)) / scale) if scale else float(np.max(np.abs(b), initial=0))
