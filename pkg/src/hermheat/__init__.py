"""Hermite-operator heat semigroups, exponential Orlicz norms and the
semilinear heat equation ``u_t + H^beta u = f(u)`` at desk scale."""

__version__ = "0.1.0"

from .hermite import PhysicalField, SpectralField, forward_transform, inverse_transform, project
from .orlicz import NormUnbounded, YoungFunction, exp_lp_norm, lq_norm, luxemburg_norm
from .propagator import apply_semigroup, mehler_apply
from .solver import NonlinearitySpec, SolverConfig, run

__all__ = [
    "NonlinearitySpec",
    "NormUnbounded",
    "PhysicalField",
    "SolverConfig",
    "SpectralField",
    "YoungFunction",
    "apply_semigroup",
    "exp_lp_norm",
    "forward_transform",
    "inverse_transform",
    "lq_norm",
    "luxemburg_norm",
    "mehler_apply",
    "project",
    "run",
]
