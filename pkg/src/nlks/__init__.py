"""Pseudospectral ETD-RK4 solver and diagnostics for the nonlocal 2D Kuramoto-Sivashinsky equation.

    eta_t + eta eta_x + (beta-1) eta_xx - eta_yy - delta Lambda^3 eta + epsilon Delta^2 eta = 0

on the 2*pi-periodic square.  Submodules: ``spectral`` (grid, transforms,
operators), ``etdrk4`` (time stepping), ``simulation`` (setup and runs),
``diagnostics``, ``oracle`` (slow references for tests) and ``io``.
"""
from .etdrk4 import BlowUpError, ConfigurationError, StepperConfig, build_tableau, integrate, step
from .kernels import BACKEND
from .params import PhysicalParams, ScaledParams, rescale
from .simulation import RunConfig, standard_initial_condition, run
from .spectral import (
    GridField,
    GridSpec,
    SpectrumField,
    WaveVector,
    forward_transform,
    inverse_transform,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BlowUpError",
    "ConfigurationError",
    "GridField",
    "GridSpec",
    "PhysicalParams",
    "RunConfig",
    "ScaledParams",
    "SpectrumField",
    "StepperConfig",
    "WaveVector",
    "build_tableau",
    "forward_transform",
    "integrate",
    "inverse_transform",
    "standard_initial_condition",
    "rescale",
    "run",
    "step",
]
