from .conventions import (
    Layout,
    Stage,
    Damping,
    Sampling,
    Bottleneck,
)

from .errors import (
    KpmError,
    SizingError,
    ShapeError,
    VerificationError,
)

from .sparsemat import (
    SparseMatrix,
    BlockVector,
    crsToSell,
    sellToCrs,
    convertLayout,
    randomBlockVector,
    columnDot,
    columnNrm2,
    partitionWork,
)

from .lattice import (
    Domain,
    PotentialSpec,
    GammaSet,
    SpectralBounds,
    buildHamiltonian,
    estimateBounds,
    applyShiftScale,
    isHermitian,
)

from .kernels import (
    AugmentedResult,
    TrafficCounters,
    spmv,
    spmmv,
    augSpmv,
    augSpmmv,
    axpy,
    scal,
    nrm2,
    dot,
    counting,
    runCounted,
)

from .solver import (
    KpmConfig,
    MomentSeries,
    DosCurve,
    kpmNaive,
    kpmStage1,
    kpmStage2,
    calcMoments,
    averageMoments,
    jacksonKernel,
    reconstructDos,
    calcIntegratedDos,
)
