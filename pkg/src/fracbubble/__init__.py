"""Flat-model numerics for fractional bubbles, their extensions, interactions and energies."""
from .core import (Bubble, BudgetExhausted, ConstantSet, FracError, FracParams, NearHalfError,
                   QuadResult, compute_constants, make_params)

__version__ = "0.1.0"

__all__ = ["Bubble", "BudgetExhausted", "ConstantSet", "FracError", "FracParams",
           "NearHalfError", "QuadResult", "compute_constants", "make_params", "__version__"]
