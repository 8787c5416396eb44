"""Thermodynamic formalism and multifractal analysis for conformal GDMS on the line."""
from .errors import (AdmissibilityError, BudgetError, ConvergenceError, DomainError, MfaError,
                     ParameterError, StructureError, UnknownVerdict)
from .gdms import (EdgeMap, SystemSpec, TailModel, VertexPiece, affine_cantor, builtin_system,
                   cf_digits, cf_full, cf_no_one, custom_system, diagnostics)
from .potentials import PotentialFamily, normalize
from .pressure import PressureEstimate, pressure_bracket, pressure_collocation
from .thermo import Thermo, hausdorff_dimension, solve_temperature
from .spectrum import SpectrumCurve, export_curve, spectrum_curve
from .measures import concentration_test, cylinder_weights, local_dimension

__all__ = [
    "AdmissibilityError", "BudgetError", "ConvergenceError", "DomainError", "MfaError",
    "ParameterError", "StructureError", "UnknownVerdict",
    "EdgeMap", "SystemSpec", "TailModel", "VertexPiece", "affine_cantor", "builtin_system",
    "cf_digits", "cf_full", "cf_no_one", "custom_system", "diagnostics",
    "PotentialFamily", "normalize",
    "PressureEstimate", "pressure_bracket", "pressure_collocation",
    "Thermo", "hausdorff_dimension", "solve_temperature",
    "SpectrumCurve", "export_curve", "spectrum_curve",
    "concentration_test", "cylinder_weights", "local_dimension",
]
