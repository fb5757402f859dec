"""Algebraic approximations of polyhedral correlation functions and their form factors."""

from .approximator import (
    CldSpec,
    EndpointExpansion,
    IntervalExpansions,
    MatchingPolynomialMismatch,
    PiecewiseCf,
    SpecError,
    approximate_cf,
    scale_spec,
    solve_matching_polynomial,
)
from .io import SpecFormatError, load_cld_spec, save_cld_spec
from .scattering import asymptotic_order, intensity, intensity_difference, porod_curve

__all__ = [
    "CldSpec", "EndpointExpansion", "IntervalExpansions", "MatchingPolynomialMismatch",
    "PiecewiseCf", "SpecError", "SpecFormatError", "approximate_cf", "asymptotic_order",
    "intensity", "intensity_difference", "load_cld_spec", "porod_curve", "save_cld_spec",
    "scale_spec", "solve_matching_polynomial",
]
