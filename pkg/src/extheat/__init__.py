"""Numerical laboratory for the heat equation outside a spherical hole.

Radial solvers for the exterior-domain heat flow under Dirichlet, Robin or
Neumann conditions at the hole, free-space references, asymptotic-profile
computations, decay-rate experiments and the annuli construction that makes
a bounded solution chase a prescribed value sequence at a probe point.
"""

__version__ = "0.1.0"

from .backends import backend_name
from .core import (
    ConfigurationError,
    DecaySeries,
    DomainSpec,
    NumericalError,
    RadialField,
    RadialGrid,
    SearchError,
    ThetaBC,
    ball_volume,
    field_from_function,
    fit_decay_exponent,
    indicator_shell,
    lp_norm,
    make_radial_grid,
    omega_mass,
    unit_sphere_area,
    weak_lp_quasinorm,
)
from .freespace import (
    RingKernelTable,
    ball_masses,
    freespace_eval_radial,
    freespace_evolve_radial,
    gaussian_ball_mass,
    gaussian_kernel,
    ring_kernel,
    ring_kernel_quadrature,
    ring_kernel_table,
    smoothing_exponent_check,
)
from .profiles import (
    ProfileResult,
    closed_form_coefficient,
    closed_form_profile,
    elliptic_profile,
    export_profile_csv,
    parabolic_profile,
    profile_bounds_check,
    profile_value,
)
from .solver import (
    EvolutionTrace,
    MonotonicityReport,
    ShellKernelComparison,
    SolverParams,
    discrete_selfadjointness_check,
    dump_checkpoints_csv,
    dump_run_manifest,
    evolve,
    evolve_series,
    grid_reference,
    lp_lq_smoothing_check,
    shell_kernel_comparison,
    theta_monotonicity_check,
)

__all__ = [name for name in dir() if not name.startswith("_")]
