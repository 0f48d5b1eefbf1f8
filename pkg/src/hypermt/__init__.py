"""Radial solutions of the Moser-Trudinger equation on the hyperbolic disk.

Submodules: hyperbolic_geometry, bubble_profiles, radial_solver,
functionals, asymptotics_lab, cli.
"""
from __future__ import annotations

from .errors import (AmbiguityError, BracketError, DegeneracyError, DomainError, HyperMTError,
                     NumericalError, QualityError, RangeError)
from .radial_solver import RadialSolution, ShootingConfig, shoot_lambda, solve_for_lambda

__version__ = "0.1.0"

__all__ = [
    "AmbiguityError", "BracketError", "DegeneracyError", "DomainError", "HyperMTError",
    "NumericalError", "QualityError", "RangeError", "RadialSolution", "ShootingConfig",
    "shoot_lambda", "solve_for_lambda", "__version__",
]
