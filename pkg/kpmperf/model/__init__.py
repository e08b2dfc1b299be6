from .perfmodel import (
    ArithmeticSpec,
    ProblemSpec,
    MachineProfile,
    MACHINES,
    getMachine,
    loadModelConfig,
    KernelCost,
    calcKernelCost,
    calcCostTable,
    calcVKPM,
    calcFlops,
    calcBalanceLimit,
    BalanceReport,
    calcCodeBalance,
    RooflinePrediction,
    calcRoofline,
    calcBalanceSweep,
    StageRate,
    REFERENCE_PROBLEM,
    REFERENCE_RATES,
    compareResources,
    calcLLCDomain,
)
