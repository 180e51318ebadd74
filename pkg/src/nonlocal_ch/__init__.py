"""Fourier-spectral solver for the nonlocal Cahn-Hilliard equation with a
doubly stabilized, linear, second-order time stepping scheme."""

from .energetics import EnergyParams, EnergyRecord, EnergyRecorder, energy, estimate_m0, mass, modified_energy
from .errors import ConfigError, DivergenceError, DomainError, ModelError, ShapeError
from .integrators import SchemeParams, Stepper, StepperState, run
from .kernel import Kernel, build_kernel, gamma0, verify_conditions
from .spectral_grid import Grid, SpectralField, fft_forward, fft_inverse, make_grid

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DivergenceError",
    "DomainError",
    "EnergyParams",
    "EnergyRecord",
    "EnergyRecorder",
    "Grid",
    "Kernel",
    "ModelError",
    "SchemeParams",
    "ShapeError",
    "SpectralField",
    "Stepper",
    "StepperState",
    "build_kernel",
    "energy",
    "estimate_m0",
    "fft_forward",
    "fft_inverse",
    "gamma0",
    "make_grid",
    "mass",
    "modified_energy",
    "run",
    "verify_conditions",
]
