"""Relativistic Cucker-Smale flocking with bonding force, in flat space and on manifolds."""
from .dynamics import ConstantKernel, CuckerSmaleKernel, ModelParams, SystemState
from .geometry import Euclidean, Hyperbolic, Sphere
from .integrate import StepperConfig, Trajectory, simulate

__all__ = [
    "ConstantKernel", "CuckerSmaleKernel", "ModelParams", "SystemState",
    "Euclidean", "Hyperbolic", "Sphere", "StepperConfig", "Trajectory", "simulate",
]
__version__ = "0.1.0"
