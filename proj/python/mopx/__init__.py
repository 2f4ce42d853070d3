"""Fixed-budget multi-objective prompt selection (C++ core)."""

from ._mopx import (
    ConfigError,
    DomainError,
    Error,
    EstimationError,
    InstanceError,
    MetricError,
    NumericalError,
    UnsupportedDimensionError,
    constrained_gaps,
    hardness,
    hv_recovery,
    hypervolume,
    make_schedule,
    pareto_front,
    pareto_gaps,
    pca,
    run_algorithm,
    run_experiment,
    soft_reward,
    solve_g_optimal,
    theorem_bound,
)

__all__ = [name for name in dir() if not name.startswith("_")]
