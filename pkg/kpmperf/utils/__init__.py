from .utils import (
    parseIntList,
    parseFloatList,
    parseFormat,
    parseDomain,
    parsePotential,
    parseByteSize,
    availableMemory,
    writeGnuplot,
    relativeError,
)
