"""Reservoir computing with random and optimized per-node readout time-shifts."""

from .dynamics import (
    TASKS,
    ChaoticSystem,
    SystemKind,
    TaskDefinition,
    TimeSeries,
    autocorrelation_timescale,
    get_task,
    hindmarsh_rose,
    integrate,
    lorenz,
    lorenz96,
    system_rhs,
    task_signals,
)
from .errors import (
    BufferExceededError,
    ConfigurationError,
    DivergenceError,
    NumericalError,
    ShiftresError,
    TimescaleUndefinedError,
    UndefinedErrorMetric,
)
from .harness import (
    ExperimentConfig,
    SweepResult,
    emit,
    load_config,
    run,
    run_alpha_sweep,
    run_epsilon_sweep,
    run_gamma_sweep,
    run_shift_comparison,
)
from .readout import (
    ErrorReport,
    ReadoutMatrix,
    ReadoutModel,
    build_matrix,
    memory_capacity,
    nrmse,
    ridge_fit,
)
from .reservoir import ReservoirConfig, ReservoirTrajectory, build_adjacency, drive
from .timeshift import (
    ShiftVector,
    evaluate,
    evaluate_optimized,
    optimize_shifts,
    sample_random_shifts,
)

__version__ = "0.1.0"
