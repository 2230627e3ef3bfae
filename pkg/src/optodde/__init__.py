"""Detection efficiency budgets and differential detection efficiency maps
for optical measurements of mechanical motion."""

__version__ = "0.1.0"

from .detection import (DdeProfile, DetectionBudget, OptimizationResult, budget, dde_by_exclusion,
                        dde_map, ideal_dde, ideal_information, noise, scan_1d, sensitivity)
from .errors import (ConfigError, ConvergenceError, DegenerateWeightingError, DimensionError,
                     DomainError, LimitInvalidError, NumericalError, OptoddeError,
                     PreconditionError, TruncationError, UnsupportedModeError)
from .fields import FieldPair, MembraneConfig, OpticalParams
from .quadrature import CartesianGrid2D, Grid1D, SolidAngleGrid, integrate, refine_until
from .weights import Region, WeightFunction

__all__ = [
    "__version__", "DdeProfile", "DetectionBudget", "OptimizationResult", "budget",
    "dde_by_exclusion", "dde_map", "ideal_dde", "ideal_information", "noise", "scan_1d",
    "sensitivity", "ConfigError", "ConvergenceError", "DegenerateWeightingError",
    "DimensionError", "DomainError", "LimitInvalidError", "NumericalError", "OptoddeError",
    "PreconditionError", "TruncationError", "UnsupportedModeError", "FieldPair",
    "MembraneConfig", "OpticalParams", "CartesianGrid2D", "Grid1D", "SolidAngleGrid",
    "integrate", "refine_until", "Region", "WeightFunction",
]
