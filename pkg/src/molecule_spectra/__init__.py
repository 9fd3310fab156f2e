"""Finite-element spectral laboratory for a two-particle molecule on the
half-line with Poisson-distributed singular interactions."""

from .assembly import AssembledForms, SigmaProfile, assemble_hamiltonian
from .eigensolve import SolverError, SpectralResult, inertia, rayleigh_quotient, solve_lowest
from .estimators import DiscreteSpectrumClassifier, GroundStateEstimator
from .experiments import (
    EMPTY,
    NONEMPTY,
    UNDECIDED,
    classify_discrete,
    convergence_study,
    estimate_gamma,
    ground_state,
    mc_probability,
    threshold,
    verify_destruction_config,
)
from .geometry import StripMesh, StripSpec, build_polygon_mesh, build_strip_mesh, snap_atoms
from .randomness import AtomConfiguration, derive_stream, sample_configuration
from .separable_robin import mu_hat3, mu_square, mu_triangle_dirichlet_limit, robin_root

__all__ = [
    "AssembledForms",
    "SigmaProfile",
    "assemble_hamiltonian",
    "SolverError",
    "SpectralResult",
    "inertia",
    "rayleigh_quotient",
    "solve_lowest",
    "DiscreteSpectrumClassifier",
    "GroundStateEstimator",
    "EMPTY",
    "NONEMPTY",
    "UNDECIDED",
    "classify_discrete",
    "convergence_study",
    "estimate_gamma",
    "ground_state",
    "mc_probability",
    "threshold",
    "verify_destruction_config",
    "StripMesh",
    "StripSpec",
    "build_polygon_mesh",
    "build_strip_mesh",
    "snap_atoms",
    "AtomConfiguration",
    "derive_stream",
    "sample_configuration",
    "mu_hat3",
    "mu_square",
    "mu_triangle_dirichlet_limit",
    "robin_root",
]

__version__ = "0.1.0"
