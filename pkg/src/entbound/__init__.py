"""Certified lower bounds on ground-state and ramp entanglement in Ising models."""
from .kernels import BACKEND
from .model import SpinModel, algebraic_couplings, ground_state, model_from_config
from .states import DensityOperator, StateVector, log_negativity
from .witness import BellReference, bell_overlap, optimize_w1, witness_bound

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BellReference",
    "DensityOperator",
    "SpinModel",
    "StateVector",
    "algebraic_couplings",
    "bell_overlap",
    "ground_state",
    "log_negativity",
    "model_from_config",
    "optimize_w1",
    "witness_bound",
]
