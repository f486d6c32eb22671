from .problems import gen_gaussian, load_bundle, save_bundle
from .solvers import (
    CyclicRow,
    GaussianRow,
    GreedyRow,
    PartialResidual,
    RandomRow,
    Residual,
    make_strategy,
    run,
    shsk_step,
)
from .types import (
    ConvergenceHistory,
    Problem,
    RowMatrix,
    SolverState,
    StopCriteria,
    StopReason,
)
from .version import __version__
