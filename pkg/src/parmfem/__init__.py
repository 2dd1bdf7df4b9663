"""Unstable manifolds of reaction-diffusion equilibria by the parameterization method.

Finite element discretizations (P1 Lagrange and C1 Argyris) of Fisher,
Fisher-Ricker and fourth-order Fisher-Kolmogorov type models, Newton solves
for equilibria, shift-invert eigendata, order-by-order Taylor coefficients of
one- and two-dimensional unstable manifolds and a-posteriori defect measures.
"""
__version__ = "0.1.0"

from .argyris import ArgyrisSpace
from .diagnostics import DefectReport, conjugacy_defect, invariance_defect, theta_grid
from .equilibrium import newton_solve, seeded_equilibrium, unstable_eigendata
from .geometry import DomainKind, DomainSpec, Mesh, generate_domain, load_mesh, refine_uniform, save_mesh
from .lagrange import FieldCoeffs, P1Space
from .manifold import compute_manifold, tune_scaling
from .models import FKS, Fisher, FisherRicker, make_model
from .ode_demo import ode_manifold
from .taylor import Parameterization

__all__ = [
    "ArgyrisSpace",
    "DefectReport",
    "DomainKind",
    "DomainSpec",
    "FKS",
    "FieldCoeffs",
    "Fisher",
    "FisherRicker",
    "Mesh",
    "P1Space",
    "Parameterization",
    "compute_manifold",
    "conjugacy_defect",
    "generate_domain",
    "invariance_defect",
    "load_mesh",
    "make_model",
    "newton_solve",
    "ode_manifold",
    "refine_uniform",
    "save_mesh",
    "seeded_equilibrium",
    "theta_grid",
    "tune_scaling",
    "unstable_eigendata",
]
