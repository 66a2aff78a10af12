"""Boundary-layer profiles and their stability for a tubulin/microtubule transport model.

Submodules:

- ``model``: parameters, endstates and coefficient matrices
- ``classical``: two-state constant-speed baseline formulas
- ``spectral``: constant-state spectra, dispersion and decay-rate counting
- ``profile``: steady profiles by collocation
- ``evans``: Evans function and winding numbers
- ``evolution``: time integration of the full system
- ``singular``: small-d outer/inner approximation
"""
from .errors import (DomainSizeError, MTEvansError, NongenericEndstateError, PhysicalityError,
                     RegimeError, SolverError, SplittingError, StepSizeError, TrivialOnlyError)
from .model import (BoundaryCondition, Endstate, ModelParams, endstate_from_c,
                    endstate_from_total_density, fig3_params, physicality, typical_params)

__version__ = "0.1.0"

__all__ = [
    "BoundaryCondition",
    "Endstate",
    "ModelParams",
    "endstate_from_c",
    "endstate_from_total_density",
    "fig3_params",
    "typical_params",
    "physicality",
    "MTEvansError",
    "PhysicalityError",
    "NongenericEndstateError",
    "SolverError",
    "DomainSizeError",
    "SplittingError",
    "RegimeError",
    "StepSizeError",
    "TrivialOnlyError",
]
