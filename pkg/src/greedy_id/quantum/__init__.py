"""Bilinear Schroedinger model: propagation, monotone maximization, fitting, GR/OGR."""
from .algorithms import DEFAULT_TOLERANCE, QuantumGreedyConfig, gr_quantum_run, ogr_quantum_run
from .fitting import FitResult, fit_multistart, identify_quantum, simulate_quantum_measurements
from .monotonic import MonotonicConfig, MonotonicResult, default_initial_control, monotonic_maximize
from .system import (
    QuantumSystem,
    phi,
    phi_and_alpha_gradient,
    phi_and_control_gradient,
    phi_batch,
    propagate_schrodinger,
)

__all__ = [
    "DEFAULT_TOLERANCE", "FitResult", "MonotonicConfig", "MonotonicResult", "QuantumGreedyConfig",
    "QuantumSystem", "default_initial_control", "fit_multistart", "gr_quantum_run", "identify_quantum",
    "monotonic_maximize", "ogr_quantum_run", "phi", "phi_and_alpha_gradient", "phi_and_control_gradient",
    "phi_batch", "propagate_schrodinger", "simulate_quantum_measurements",
]
