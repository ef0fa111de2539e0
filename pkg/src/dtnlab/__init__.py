"""Dirichlet-to-Neumann operators, their semigroups and product approximants.

Main entry points
-----------------
geometry      domains, boundary grids, interior balls
conductivity  matrix-valued conductivity fields
harmonic_lift gamma-harmonic extension of boundary data
dtn_operator  DtN matrix assembly, spectra, Weyl fits
semigroup     exp(-t L), trace norms, the Lax semigroup
approximant   product approximants and convergence diagnostics
transport     membrane flux through an annulus
"""

__version__ = "0.1.0"

from .approximant import (
    ApproximantFamily,
    chernoff_product,
    convergence_report,
    semigroup_defect,
    telescopic_check,
    v_step,
    w_factor,
)
from .conductivity import (
    ConductivityField,
    anisotropic_demo,
    const_diag,
    identity,
    pullback_point,
    radial_scalar,
    scalar_field,
    validate_ellipticity,
)
from .dtn_operator import DtNMatrix, DtNSpectrum, assemble_dtn, localization_profile, spectrum, weyl_fit
from .errors import (
    AssemblyInconsistency,
    ConfigError,
    DtnError,
    HypothesisViolation,
    InvalidDomainError,
    NoInteriorBallError,
    OutOfDomainError,
    ResolutionError,
    ResourceError,
    SolverDivergence,
    UnsupportedConfiguration,
)
from .geometry import Annulus, BoundaryGrid, Circle, InteriorBall, Sphere, StarShaped2D, discretize_boundary, interior_ball
from .harmonic_lift import BoundaryFunction, HarmonicField, evaluate_interior, lift, trace
from .semigroup import SemigroupOperator, evolve, lax_apply, trace_norm
from .transport import TransportParams, annulus_dtn, local_flux, membrane_solve, total_flux
