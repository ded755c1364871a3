"""Pseudospectral laboratory for the low Mach number scaled Navier-Stokes equations.

The subpackages follow the layers of the library: :mod:`lowmach.spectral`
(grids, fields and Fourier multipliers), :mod:`lowmach.norms` (Sobolev and
composite norms), :mod:`lowmach.gas` (coefficient sets and their
validation), :mod:`lowmach.models` (right-hand sides), :mod:`lowmach.integrate`
(stiff-aware time stepping), :mod:`lowmach.experiments` (drivers) and
:mod:`lowmach.cli` (configuration and command line).
"""

__version__ = "0.1.0"

from .gas import CoefficientSet, MaterialLaw, perfect_gas, validate_assumptions
from .integrate import BlowUpError, StepperConfig, build_split, choose_dt, integrate, step
from .norms import CompositeNormAccumulator, ParamTriple, initial_norm, sobolev_norm, weighted_norm
from .spectral import SpectralField, SpectralGrid, make_grid, random_band_limited_field
from .state import LimitState, PrimitiveState, StateU, SymmetrizedState, WaveState

__all__ = [
    "BlowUpError",
    "CoefficientSet",
    "CompositeNormAccumulator",
    "LimitState",
    "MaterialLaw",
    "ParamTriple",
    "PrimitiveState",
    "SpectralField",
    "SpectralGrid",
    "StateU",
    "StepperConfig",
    "SymmetrizedState",
    "WaveState",
    "build_split",
    "choose_dt",
    "initial_norm",
    "integrate",
    "make_grid",
    "perfect_gas",
    "random_band_limited_field",
    "sobolev_norm",
    "step",
    "validate_assumptions",
    "weighted_norm",
]
