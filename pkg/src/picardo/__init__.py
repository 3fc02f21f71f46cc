"""Orthogonal ICA: Picard-O (preconditioned L-BFGS) and symmetric FastICA."""

from .estimators import PicardO, SymmetricFastICA
from .fastica import fastica_solve, fixed_point_residual
from .linalg import whiten
from .picard_o import SolveResult, SolverConfig, solve

__all__ = [
    "PicardO",
    "SymmetricFastICA",
    "SolveResult",
    "SolverConfig",
    "fastica_solve",
    "fixed_point_residual",
    "solve",
    "whiten",
]

__version__ = "0.1.0"
