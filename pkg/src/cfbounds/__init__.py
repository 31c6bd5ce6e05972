"""Bounds on stationary moments of polynomial SDEs from characteristic-function constraints."""

from .bounds import (
    BochnerProgram,
    MomentBounds,
    MomentInterval,
    all_moment_bounds,
    estimate_cf,
    lift_moments,
    moment_bounds,
    refine,
)
from .collocation import FrequencyGrid
from .model import (
    CompensatedGamma,
    NoLevy,
    PolynomialSde,
    VarianceGamma,
    logistic,
    ornstein_uhlenbeck,
    vg_cubic,
)

__all__ = [
    "BochnerProgram",
    "CompensatedGamma",
    "FrequencyGrid",
    "MomentBounds",
    "MomentInterval",
    "NoLevy",
    "PolynomialSde",
    "VarianceGamma",
    "all_moment_bounds",
    "estimate_cf",
    "lift_moments",
    "logistic",
    "moment_bounds",
    "ornstein_uhlenbeck",
    "refine",
    "vg_cubic",
]
