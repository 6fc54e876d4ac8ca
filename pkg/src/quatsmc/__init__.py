"""Integral sliding-mode control on quaternion state spaces driven by a quasi-Lie
bracket: bracket constants, cochain checks, defect bounds, LMI certificates,
controller synthesis and simulation."""
from . import bracket, cohomo, gosl, lyap, quat, realrep, sim, synth
from .errors import (AbortError, ConfigError, DimensionError, DivergenceError, DomainError,
                     InfeasibleError, PreconditionError, QuatSMCError, SingularityError)

__version__ = "0.1.0"

__all__ = [
    "bracket", "cohomo", "gosl", "lyap", "quat", "realrep", "sim", "synth",
    "AbortError", "ConfigError", "DimensionError", "DivergenceError", "DomainError",
    "InfeasibleError", "PreconditionError", "QuatSMCError", "SingularityError",
]
