"""Exact and Monte Carlo tools for the integrable eight-vertex model."""

from .params import (ConstraintError, DegenerateError, EdgeAddress, KernelParams,
                     ModelError, Weights, binomial, derive_params, multinomial)
from .exact import boundary_bound, c8, c8_special, kdn_c

__all__ = [
    "ConstraintError", "DegenerateError", "EdgeAddress", "KernelParams",
    "ModelError", "Weights", "binomial", "derive_params", "multinomial",
    "boundary_bound", "c8", "c8_special", "kdn_c",
]
