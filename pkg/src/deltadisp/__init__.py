"""Point interactions in R^3: the Gamma matrix and its poles, the perturbed
resolvent, explicit single-center propagators, weighted and Lorentz norms,
Pitt's inequality and dispersive decay fits."""

__version__ = "0.1.0"

from .config import INERT, Field3D, InteractionConfig, RadialFunction, RadialGrid, WeightSpec
from .errors import ConfigError, ConvergenceError, DeltaDispError, DomainError, ResolutionError, SingularPointError

__all__ = [
    "INERT", "Field3D", "InteractionConfig", "RadialFunction", "RadialGrid", "WeightSpec",
    "ConfigError", "ConvergenceError", "DeltaDispError", "DomainError", "ResolutionError",
    "SingularPointError", "__version__",
]
