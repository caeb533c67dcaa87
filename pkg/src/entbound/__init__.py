"""Upper bounds on distance-based entanglement measures.

A conditional-gradient iteration over a convex class of separable states:
an extreme-point oracle proposes the best pure product state for the current
linear functional, a bracketed line search blends it into the iterate, and
the resulting distance is a certified upper bound on the class-restricted
measure (squared Bures metric or relative entropy).
"""

__version__ = "0.1.0"

from .qmatrix import (
    DensityMatrix,
    EigenSolverError,
    InvariantViolation,
    MeasureKind,
    bures_squared,
    distance,
    fidelity,
    hs_inner,
    partial_transpose,
    relative_entropy,
)
from .extremal import (
    OracleConfig,
    PartitionClass,
    ProductState,
    best_extreme_point,
    best_product_state,
    enumerate_bipartitions,
    haar_vector,
)
from .states import (
    ChessboardParams,
    chessboard,
    ghz,
    horodecki,
    mix_white_noise,
    random_product_state,
    sample_chessboard_params,
    w_state,
)
from .gilbert import (
    GilbertConfig,
    GilbertRun,
    IntegrityError,
    RunStatus,
    SolverError,
    find_min_on_segment,
    gilbert_run,
    upper_bound_certificate,
)

__all__ = [
    "DensityMatrix",
    "EigenSolverError",
    "InvariantViolation",
    "MeasureKind",
    "bures_squared",
    "distance",
    "fidelity",
    "hs_inner",
    "partial_transpose",
    "relative_entropy",
    "OracleConfig",
    "PartitionClass",
    "ProductState",
    "best_extreme_point",
    "best_product_state",
    "enumerate_bipartitions",
    "haar_vector",
    "ChessboardParams",
    "chessboard",
    "ghz",
    "horodecki",
    "mix_white_noise",
    "random_product_state",
    "sample_chessboard_params",
    "w_state",
    "GilbertConfig",
    "GilbertRun",
    "IntegrityError",
    "RunStatus",
    "SolverError",
    "find_min_on_segment",
    "gilbert_run",
    "upper_bound_certificate",
    "__version__",
]
