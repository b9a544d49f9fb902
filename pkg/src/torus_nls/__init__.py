"""Pseudospectral simulator and numerical-verification lab for the
energy-critical cubic NLS on rectangular 4D tori."""

__version__ = "0.1.0"

from .geometry import DyadicShell, Mode, TorusGeometry, dispersion, frequency, shell_of
from .field import (
    CutoffProfile,
    PhysicalField,
    SpectralField,
    forward_transform,
    inverse_transform,
)
from .evolution import EvolutionParams, TrajectoryRecord, evolve, free_propagate

__all__ = [
    "__version__",
    "TorusGeometry",
    "Mode",
    "DyadicShell",
    "frequency",
    "dispersion",
    "shell_of",
    "PhysicalField",
    "SpectralField",
    "CutoffProfile",
    "forward_transform",
    "inverse_transform",
    "EvolutionParams",
    "TrajectoryRecord",
    "evolve",
    "free_propagate",
]
