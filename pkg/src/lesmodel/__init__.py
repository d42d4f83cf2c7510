"""Gaussian-filtered Burgers models with Taylor-expansion subgrid closures."""

from .analytic import AnalyticSolutionSpec, ForcingSpec, preset
from .closures import ModelParams, closure_1d, closure_3d, effective_viscosity
from .fields import FieldHistory, ScalarField, SpaceTimeGrid, TensorField3
from .filtering import FilterSpec, SmoothFunction, filter_bruteforce, gaussian_kernel
from .solvers import SolverConfig, Trajectory, run

__all__ = [
    "AnalyticSolutionSpec",
    "FieldHistory",
    "FilterSpec",
    "ForcingSpec",
    "ModelParams",
    "ScalarField",
    "SmoothFunction",
    "SolverConfig",
    "SpaceTimeGrid",
    "TensorField3",
    "Trajectory",
    "closure_1d",
    "closure_3d",
    "effective_viscosity",
    "filter_bruteforce",
    "gaussian_kernel",
    "preset",
    "run",
]
