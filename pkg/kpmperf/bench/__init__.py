from .harness import (
    SWEEP_COLUMNS,
    BenchResult,
    BenchResultSet,
    benchKernel,
    sweep,
    simulateOmega,
    checkMemory,
    calcScaling,
    TrendReport,
    checkTrend,
)

from .verify import (
    SUITES,
    CheckResult,
    verify,
)
