"""Numerics for sigma_k curvature: symmetric functions, Schouten tensors,
Delaunay-type radial solutions, Pohozaev invariants and Kazdan-Warner checks."""

from __future__ import annotations

__version__ = "0.1.0"

from .delaunay import OdeParams, Trajectory, hamiltonian, orbit, period
from .errors import (
    CapacityError,
    DomainError,
    NumericError,
    RangeError,
    SigmaKError,
    SingularityError,
    ValidationError,
)
from .geometry import Background, Chart, ConformalJet, sigma_k_curvature
from .gridfield import GridField
from .kazdanwarner import CkField, DivergenceReport, annulus_balance, divergence_identity_residual
from .pohozaev import DkResult, compute_dk, dk_closed_form, dk_quadrature
from .symfun import elem_sym, h_tensors, newton_transform, sigma_matrix

__all__ = [
    "Background",
    "CapacityError",
    "Chart",
    "CkField",
    "ConformalJet",
    "DivergenceReport",
    "DkResult",
    "DomainError",
    "GridField",
    "NumericError",
    "OdeParams",
    "RangeError",
    "SigmaKError",
    "SingularityError",
    "Trajectory",
    "ValidationError",
    "annulus_balance",
    "compute_dk",
    "divergence_identity_residual",
    "dk_closed_form",
    "dk_quadrature",
    "elem_sym",
    "h_tensors",
    "hamiltonian",
    "newton_transform",
    "orbit",
    "period",
    "sigma_k_curvature",
    "sigma_matrix",
]
