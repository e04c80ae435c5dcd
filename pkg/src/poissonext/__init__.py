"""Poisson-type extension operators on the unit ball, the weighted
isoperimetric functional, and a subcritical variational solver for the
associated boundary integral equation."""

from .params import ProblemParams
from .geometry import antipode, conformal_weight, mobius_f, mobius_f_inverse, stereographic
from .kernels import (
    KernelConstants,
    kernel_ball,
    kernel_ball_sphere_mass,
    kernel_halfspace,
    normalization_constant,
)
from .quadrature import (
    BallQuadrature,
    SphereQuadrature,
    ball_volume,
    build_ball_quadrature,
    build_sphere_quadrature,
    integrate_ball,
    integrate_boundary,
    surface_area,
)
from .halfspace import HalfspaceGrid, build_halfspace_grid, halfspace_tail_bound
from .operators import (
    BoundaryFunction,
    ExtensionField,
    ExtensionOperator,
    adjoint_ball,
    build_extension_operator,
    conformal_pullback_check,
    extend_at_points,
    extend_ball,
    extend_halfspace,
    interpolate_boundary,
    weighted_harmonic_residual,
)
from .functionals import (
    SharpConstant,
    WeightFunction,
    boundary_norm,
    bulk_norm,
    existence_condition,
    isoperimetric_ratio,
    lambda_threshold,
    richardson_estimate,
    sharp_constant,
)
from .solver import (
    ContinuationReport,
    SolverState,
    SubcriticalProblem,
    continuation,
    default_schedule,
    el_residual,
    fixed_point_step,
    maximize_subcritical,
    normalize_constraint,
    symmetrize_antipodal,
)
from .diagnostics import (
    BubbleParams,
    RescaleParams,
    blow_up_rescale,
    bubble,
    bubble_extension_halfspace,
    concentration_report,
    half_mass_radius,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
