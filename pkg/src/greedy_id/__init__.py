"""Greedy design of identification controls for linear and bilinear quantum models."""
from .greedy import (
    FittingError,
    FittingSolution,
    GreedyResult,
    gr_run,
    solve_discriminatory,
    solve_fitting,
    solve_initialization,
    w_hat_from_controls,
)
from .lin_system import (
    AdmissibleSet,
    Control,
    LinearSystem,
    TimeGrid,
    accumulate_w,
    gamma_matrix,
    gamma_vector,
    numerical_rank,
    propagate_linear,
    w_matrix,
)
from .observability import ObservabilityReport, analyze, build_observability_basis, max_identifiable
from .ogr import OgrConfig, ogr_run
from .online import IdentificationResult, Measurements, certify_block_structure, identify, simulate_measurements

__version__ = "0.1.0"

__all__ = [
    "AdmissibleSet", "Control", "FittingError", "FittingSolution", "GreedyResult", "IdentificationResult",
    "LinearSystem", "Measurements", "ObservabilityReport", "OgrConfig", "TimeGrid", "accumulate_w",
    "analyze", "build_observability_basis", "certify_block_structure", "gamma_matrix", "gamma_vector",
    "gr_run", "identify", "max_identifiable", "numerical_rank", "ogr_run", "propagate_linear",
    "simulate_measurements", "solve_discriminatory", "solve_fitting", "solve_initialization",
    "w_hat_from_controls", "w_matrix",
]
