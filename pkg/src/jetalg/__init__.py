"""Symbolic differential algebra on jet spaces.

Expressions in jet variables and free parameters, total derivatives,
evolution equations and their symmetries, pseudodifferential recursion
operators, differential substitutions between equations, a catalog of named
fixtures, and named verification checks.
"""

from __future__ import annotations

from .catalog import fixture, get_equation, get_map, get_operator, get_symmetry, list_catalog
from .checks import CheckConfig, run_check, run_suite
from .diffalg import (
    DifferentialOperator, EvolutionEquation, bracket, conserved_density_residual, euler_operator,
    frechet, solve_linear_ansatz, symmetry_residual, total_x_derivative,
)
from .errors import JetAlgError
from .expr import X, Const, Param, canonicalize, diff, jet, substitute
from .oracle import Verdict, zero_test
from .parser import make_context, parse
from .psdo import PseudoDiffOperator, apply_psdo, integrate_total, w_recursion
from .transform import ImplicitRelation, Substitution, point_pushforward, pushforward_residual

__version__ = "0.1.0"

__all__ = [
    "fixture", "get_equation", "get_map", "get_operator", "get_symmetry", "list_catalog",
    "CheckConfig", "run_check", "run_suite",
    "DifferentialOperator", "EvolutionEquation", "bracket", "conserved_density_residual",
    "euler_operator", "frechet", "solve_linear_ansatz", "symmetry_residual", "total_x_derivative",
    "JetAlgError", "X", "Const", "Param", "canonicalize", "diff", "jet", "substitute",
    "Verdict", "zero_test", "make_context", "parse",
    "PseudoDiffOperator", "apply_psdo", "integrate_total", "w_recursion",
    "ImplicitRelation", "Substitution", "point_pushforward", "pushforward_residual",
]
