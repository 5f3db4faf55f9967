"""Exact moments of Brownian-excursion power integrals, and limit laws of
polynomial q-functional equations via the method of moments."""

from .amplitudes import (
    RecursionParams,
    dyck_limit_moments,
    dyck_params,
    excursion_amplitudes,
    excursion_moments,
    general_amplitudes,
    limit_moments,
)
from .critical import critical_data, model_limit_moments, scaling_constants
from .exact import HalfInt, Surd
from .models import binary, dyck, motzkin
from .qfe import QFunctionalEquation, solve_jets, validate

__all__ = [
    "HalfInt",
    "QFunctionalEquation",
    "RecursionParams",
    "Surd",
    "binary",
    "critical_data",
    "dyck",
    "dyck_limit_moments",
    "dyck_params",
    "excursion_amplitudes",
    "excursion_moments",
    "general_amplitudes",
    "limit_moments",
    "model_limit_moments",
    "motzkin",
    "scaling_constants",
    "solve_jets",
    "validate",
]
