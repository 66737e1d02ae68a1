"""Generalized Kowalevski top in two constant fields: dynamics, critical
subsystems, separating coordinates and separated-variable solutions."""

from .complex_chart import ComplexState, from_complex, to_complex
from .critical_set import SubsystemNConstants, SubsystemOConstants
from .errors import (AdmissibilityError, BranchError, DegenerateError, DomainError, GKTopError, InputError,
                     RealityViolation, StepUnderflowError)
from .integrator import IntegrationConfig, integrate_adaptive
from .rigid_core import BodyParams, IntegralValues, PhaseState, general_integrals
from .sov_n import SeparatedStateN, integrate_separated_n, reconstruct_n
from .sov_o import SeparatedStateO, integrate_separated_o, reconstruct_o

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError", "BodyParams", "BranchError", "ComplexState", "DegenerateError", "DomainError",
    "GKTopError", "InputError", "IntegralValues", "IntegrationConfig", "PhaseState", "RealityViolation",
    "SeparatedStateN", "SeparatedStateO", "StepUnderflowError", "SubsystemNConstants", "SubsystemOConstants",
    "from_complex", "general_integrals", "integrate_adaptive", "integrate_separated_n", "integrate_separated_o",
    "reconstruct_n", "reconstruct_o", "to_complex",
]
