"""Analysis toolkit for multi-antenna two-tier Poisson cellular networks.

Computes per-tier average user rates (an exact integral form and a tight
approximation), optimizes the number of scheduled users per tier for area
spectral efficiency (ASE), maps where small-cell range expansion helps or
hurts the network-wide ASE, and cross-validates every analytic result
against a seeded Monte Carlo point-process simulator.
"""

__version__ = "0.1.0"

from .numerics import (
    BadBracket,
    BracketSpec,
    DomainError,
    NonConvergence,
    QuadratureSpec,
    bisect,
    integrate_lower_to_inf,
    integrate_zero_to_inf,
)

__all__ = [
    "__version__",
    "BadBracket",
    "BracketSpec",
    "DomainError",
    "NonConvergence",
    "QuadratureSpec",
    "bisect",
    "integrate_lower_to_inf",
    "integrate_zero_to_inf",
]
