"""Weighted radial variational problems on the Poincare ball: best constants, ground states, integral identities."""

from .errors import (
    ConvergenceError,
    HypCKNError,
    PohozaevError,
    ShootingError,
    TailError,
    TailWarning,
    ValidationError,
)
from .geometry import Params, ckn_weights, critical_exponent, ensure_valid, hardy_constant, validate
from .quadrature import Grading, RadialFn, RadialGrid, build_grid, integrate_weighted
from .solver import SolveOptions, SolveResult, shoot_dirichlet, solve_ground_state
from .pohozaev import BallDomain, concentrating_quotients, pohozaev_report

__version__ = "0.1.0"

__all__ = [
    "BallDomain", "ConvergenceError", "Grading", "HypCKNError", "Params", "PohozaevError", "RadialFn",
    "RadialGrid", "ShootingError", "SolveOptions", "SolveResult", "TailError", "TailWarning",
    "ValidationError", "build_grid", "ckn_weights", "concentrating_quotients", "critical_exponent",
    "ensure_valid", "hardy_constant", "integrate_weighted", "pohozaev_report", "shoot_dirichlet",
    "solve_ground_state", "validate",
]
