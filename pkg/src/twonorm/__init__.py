"""Finite-truncation laboratory for operator groups preserving two norms.

The pair H1_0(Omega) inside L2(Omega) is modeled through the Dirichlet
eigenbasis; see :mod:`twonorm.core` for the conventions.
"""

from .domains import DomainKind, DomainSpec, basis_gamma, laplace_spectrum
from .core import (
    HVector,
    TwoNormOperator,
    in_group,
    in_lie_algebra,
    is_symmetrizable,
    l2_representation,
    solution_operator,
)

__version__ = "0.1.0"

__all__ = [
    "DomainKind",
    "DomainSpec",
    "basis_gamma",
    "laplace_spectrum",
    "HVector",
    "TwoNormOperator",
    "in_group",
    "in_lie_algebra",
    "is_symmetrizable",
    "l2_representation",
    "solution_operator",
]
