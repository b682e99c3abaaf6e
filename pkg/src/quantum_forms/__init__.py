"""Numerical workbench for equivalent formulations of one-dimensional quantum evolution.

Schroedinger solvers (linear, logarithmic, complex-diffusion), the Madelung
fluid picture, the dual real diffusion pair, information diagnostics,
Bohmian and Nelson path ensembles and Cantorian dimension arithmetic.
"""

__version__ = "0.1.0"

from .errors import (AllMasked, ConfigError, DegenerateInterval, DriftUnsupported,
                     InsufficientSnapshots, MomentOverflow, NoConvergence, NodeContamination,
                     NodeTrap, NonFinite, Overflow, QuantumFormsError, StabilityViolation)
from .field_core import (Grid, NodeMask, RealField, WaveField, fd_derivative, node_mask,
                         quadrature, spectral_derivative, unwrap_phase)
from .solvers import PotentialSpec, SolverParams, Trajectory, evolve

__all__ = [
    "AllMasked", "ConfigError", "DegenerateInterval", "DriftUnsupported", "InsufficientSnapshots",
    "MomentOverflow", "NoConvergence", "NodeContamination", "NodeTrap", "NonFinite", "Overflow",
    "QuantumFormsError", "StabilityViolation", "Grid", "NodeMask", "RealField", "WaveField",
    "fd_derivative", "node_mask", "quadrature", "spectral_derivative", "unwrap_phase",
    "PotentialSpec", "SolverParams", "Trajectory", "evolve",
]
