"""Shared numerical kernels: ODE integration, root finding, eigenvalues."""

from .eig import eig2x2, eigenvalues
from .integrate import IntegratorConfig, Trajectory, integrate
from .rootfind import RootResult, find_root

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "integrate",
    "RootResult",
    "find_root",
    "eigenvalues",
    "eig2x2",
]
