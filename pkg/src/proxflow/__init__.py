"""
proxflow: continuous-time proximal gradient dynamics for composite problems
``F = f + g`` together with empirical certificates of their descent and rate
properties.
"""

from .dynamics import FlowConfig, Trajectory, integrate, prox_grad_vector_field
from .numerics import DomainError, NumericalError
from .problems import CompositeProblem, SmoothTerm
from .prox_ops import (make_blockwise, make_box_indicator, make_l1, make_nuclear,
                       make_zero)

__version__ = "0.1.0"

__all__ = [
    "CompositeProblem", "DomainError", "FlowConfig", "NumericalError", "SmoothTerm",
    "Trajectory", "integrate", "make_blockwise", "make_box_indicator", "make_l1",
    "make_nuclear", "make_zero", "prox_grad_vector_field",
]
