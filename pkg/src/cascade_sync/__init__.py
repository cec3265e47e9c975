"""Simulation and verification lab for cascade rollback synchronization.

N processors advance integer local times on independent Poisson clocks;
processor j occasionally messages j+1, and a receiver ahead of the
payload rolls back, possibly cascading down the chain.  The package
provides the exact embedded-chain kernel, a ground-truth event
simulator with message logs, fast speed estimation, the explicit
three-processor Lyapunov gauge with exact drift verification, drift
criteria checkers, and a monotone coupling harness, all behind a
reproducible batch CLI.
"""

from ._accel import USING_NUMBA
from .model import (
    CascadeParams,
    GroupPartition,
    decompose_groups,
    level_function,
    normalize_rates,
    rescale,
    validate_params,
    with_barriers,
)
from .kernel import (
    Transition,
    TransitionList,
    enumerate_transitions,
    relative_transitions,
    rollback_outcomes,
    sample_step,
    split_transitions,
    table_relative_transitions,
)
from .event_sim import EventSimReport, SimState, apply_message, run_event_sim
from .chain_sim import OccupationStats, SpeedReport, estimate_speeds, \
    occupation_stats
from .lyapunov import (
    Contour,
    DriftReport,
    Region,
    auto_tune_delta,
    build_contour,
    classify_region,
    drift_report,
    grad_phi,
    outer_normal,
    phi,
)
from .stability import (
    CouplingReport,
    DriftCheckResult,
    coupled_run,
    find_transient_delta,
    foster_check,
    mean_jump,
    transience_check,
)

__version__ = "0.1.0"

__all__ = [
    "USING_NUMBA",
    "CascadeParams",
    "GroupPartition",
    "decompose_groups",
    "level_function",
    "normalize_rates",
    "rescale",
    "validate_params",
    "with_barriers",
    "Transition",
    "TransitionList",
    "enumerate_transitions",
    "relative_transitions",
    "rollback_outcomes",
    "sample_step",
    "split_transitions",
    "table_relative_transitions",
    "EventSimReport",
    "SimState",
    "apply_message",
    "run_event_sim",
    "OccupationStats",
    "SpeedReport",
    "estimate_speeds",
    "occupation_stats",
    "Contour",
    "DriftReport",
    "Region",
    "auto_tune_delta",
    "build_contour",
    "classify_region",
    "drift_report",
    "grad_phi",
    "outer_normal",
    "phi",
    "CouplingReport",
    "DriftCheckResult",
    "coupled_run",
    "find_transient_delta",
    "foster_check",
    "mean_jump",
    "transience_check",
    "__version__",
]
