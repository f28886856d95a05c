"""The asymptotic spatial profile: the bounded harmonic function on the
exterior domain with the theta boundary condition at the hole and value 1
at infinity.

Three routes are implemented and cross-checked: the closed radial form
1 - C*/r^{N-2}, the truncated-domain harmonic solve with unit outer data
(extrapolated in 1/R^{N-2}), and the long-time limit of the evolution of
the constant 1.
"""

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import backends
from .core import (
    ConfigurationError,
    RadialField,
    RadialGrid,
    ThetaBC,
    _segment_moments,
    field_from_function,
)
from .freespace import ball_masses
from .solver import SolverParams, evolve_series


def profile_value(r, dim, hole_radius, theta: ThetaBC):
    """Closed-form profile at radius r (vectorised).

    Neumann gives the constant 1 in every dimension; for theta < 1 the
    profile vanishes identically when N <= 2 and otherwise equals
    1 - C* r^{2-N} with C* fixed by the boundary condition at the hole.
    """
    r = np.asarray(r, dtype=float)
    if theta.is_neumann:
        out = np.ones_like(r)
    elif dim <= 2:
        out = np.zeros_like(r)
    else:
        cstar = closed_form_coefficient(dim, hole_radius, theta)
        out = 1.0 - cstar * r ** (2.0 - dim)
    return float(out) if out.ndim == 0 else out


def closed_form_coefficient(dim, hole_radius, theta: ThetaBC):
    """C* in Phi(r) = 1 - C* r^{2-N}, from -s Phi'(a) ... = 0 at the hole.

    The outward normal points toward the origin, so the condition is
    s * (-Phi'(a)) + c * Phi(a) = 0, giving
    C* = c a^{N-2} / (c + s (N-2)/a).
    """
    if theta.is_neumann:
        return 0.0
    if dim < 3:
        raise ConfigurationError("closed-form coefficient requires N >= 3 (or theta = 1)")
    a = hole_radius
    return theta.c * a ** (dim - 2) / (theta.c + theta.s * (dim - 2) / a)


@dataclass
class ProfileResult:
    theta: ThetaBC
    dim: int
    samples: RadialField
    method: str
    closed_form_coeff: float = math.nan
    bound_constant: float = math.nan
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = self.samples.values
        if np.any(vals < -1e-9) or np.any(vals > 1.0 + 1e-9):
            raise ConfigurationError("profile values must lie in [0, 1]")


def closed_form_profile(grid: RadialGrid, theta: ThetaBC) -> ProfileResult:
    if theta.is_neumann:
        coeff = 0.0
    elif grid.dim < 3:
        coeff = math.nan  # profile vanishes; no deficit coefficient
    else:
        coeff = closed_form_coefficient(grid.dim, grid.spec.hole_radius, theta)
    samples = field_from_function(
        grid, lambda r: profile_value(r, grid.dim, grid.spec.hole_radius, theta)
    )
    return ProfileResult(
        theta=theta, dim=grid.dim, samples=samples, method="closed_form",
        closed_form_coeff=coeff,
    )


def _subgrid(grid: RadialGrid, last_index):
    nodes = grid.nodes[: last_index + 1]
    spec = replace(grid.spec, outer_radius=float(nodes[-1]), n_cells=last_index)
    a_mom, b_mom = _segment_moments(nodes, grid.dim)
    weights = np.zeros(nodes.size)
    weights[:-1] += a_mom
    weights[1:] += b_mom
    return RadialGrid(spec=spec, nodes=nodes, weights=weights)


def _harmonic_solve(grid: RadialGrid, theta: ThetaBC, last_index):
    """Discrete harmonic field on nodes[0..last_index] with value 1 at the end."""
    nodes = grid.nodes[: last_index + 1]
    h = np.diff(nodes)
    cf = grid.face_coefficients()[:last_index]
    flux = cf / h
    n = nodes.size
    sl, sd, su = np.zeros(n), np.zeros(n), np.zeros(n)
    sd[:-1] += flux
    su[:-1] -= flux
    sd[1:] += flux
    sl[1:] -= flux
    rhs = np.zeros(n)
    if theta.is_dirichlet:
        sd[0], su[0], rhs[0] = 1.0, 0.0, 0.0
    elif not theta.is_neumann:
        from .core import unit_sphere_area

        a = grid.spec.hole_radius
        sd[0] += unit_sphere_area(grid.dim) * a ** (grid.dim - 1) * theta.robin_coefficient()
    sd[-1], sl[-1], rhs[-1] = 1.0, 0.0, 1.0
    phi = backends.solve_tridiag(sl, sd, su, rhs)
    if not np.all(np.isfinite(phi)):
        raise ConfigurationError("harmonic solve produced non-finite values")
    return np.clip(phi, 0.0, 1.0)


def elliptic_profile(grid: RadialGrid, theta: ThetaBC, r_sequence) -> ProfileResult:
    """Truncated-domain harmonic solves at increasing radii, extrapolated.

    Each radius snaps to the nearest grid node.  For N >= 3 the two largest
    radii are extrapolated in 1/R^{N-2}; the per-radius solutions and the
    worst monotone-decrease margin across the sequence are reported in
    ``details``.
    """
    radii = np.sort(np.asarray(r_sequence, dtype=float))
    if radii.size < 2:
        raise ConfigurationError("need at least two truncation radii")
    if radii[-1] > grid.spec.outer_radius * (1 + 1e-12):
        raise ConfigurationError("truncation radii must not exceed the grid outer radius")
    indices = [int(np.argmin(np.abs(grid.nodes - r))) for r in radii]
    if len(set(indices)) != len(indices):
        raise ConfigurationError("truncation radii collapse onto the same grid nodes")
    solutions = [_harmonic_solve(grid, theta, k) for k in indices]
    used_radii = [float(grid.nodes[k]) for k in indices]

    k_common = indices[0]
    margin = math.inf
    for prev, cur in zip(solutions, solutions[1:]):
        margin = min(margin, float(np.min(prev[: k_common + 1] - cur[: k_common + 1])))

    if grid.dim >= 3:
        x1, x2 = used_radii[-2] ** (2 - grid.dim), used_radii[-1] ** (2 - grid.dim)
        p1 = solutions[-2][: k_common + 1]
        p2 = solutions[-1][: k_common + 1]
        extrap = (p2 * x1 - p1 * x2) / (x1 - x2)
    else:
        extrap = solutions[-1][: k_common + 1]
    sub = _subgrid(grid, k_common)
    samples = RadialField(grid=sub, values=np.clip(extrap, 0.0, 1.0))
    coeff = math.nan
    if theta.is_neumann:
        coeff = 0.0
    elif grid.dim >= 3:
        coeff = closed_form_coefficient(grid.dim, grid.spec.hole_radius, theta)
    return ProfileResult(
        theta=theta, dim=grid.dim, samples=samples, method="elliptic_limit",
        closed_form_coeff=coeff,
        details={
            "radii": used_radii,
            "solutions": solutions,
            "monotone_margin": margin,
        },
    )


def parabolic_profile(grid: RadialGrid, theta: ThetaBC, t_checkpoints,
                      params: SolverParams = None, window_radius=None) -> ProfileResult:
    """Evolve the constant 1 and report the monotone approach to the profile.

    The free-space reference for the outer boundary is the evolution of the
    indicator of the exterior (analytic, not grid-truncated).  Monotone
    decrease is checked on the compact window [a, window_radius].
    """
    params = params or SolverParams()
    a = grid.spec.hole_radius
    checkpoints = np.asarray(t_checkpoints, dtype=float)
    if checkpoints.size < 2 or np.any(np.diff(checkpoints) <= 0):
        raise ConfigurationError("need at least two increasing checkpoints")
    u0 = RadialField(grid=grid, values=np.ones_like(grid.nodes))

    def reference(elapsed, radii):
        return 1.0 - ball_masses(np.asarray(radii, dtype=float), a, elapsed, grid.dim)

    trace = evolve_series(u0, theta, checkpoints, params, reference=reference)
    r_mid = window_radius or a + 0.25 * (grid.spec.outer_radius - a)
    win = grid.nodes <= r_mid
    margin = math.inf
    for prev, cur in zip(trace.checkpoints, trace.checkpoints[1:]):
        margin = min(margin, float(np.min(prev.values[win] - cur.values[win])))
    last = trace.checkpoints[-1]
    samples = RadialField(grid=grid, values=np.clip(last.values, 0.0, 1.0), time=last.time)
    coeff = math.nan
    if theta.is_neumann:
        coeff = 0.0
    elif grid.dim >= 3:
        coeff = closed_form_coefficient(grid.dim, a, theta)
    return ProfileResult(
        theta=theta, dim=grid.dim, samples=samples, method="parabolic_limit",
        closed_form_coeff=coeff,
        details={
            "checkpoint_times": checkpoints.tolist(),
            "monotone_margin": margin,
            "window_radius": r_mid,
            "trace": trace,
        },
    )


def profile_bounds_check(result: ProfileResult):
    """Fit the deficit constant and the gradient decay exponent.

    Returns (C_fit, gradient_exponent): C_fit is the largest observed
    (1 - Phi) r^{N-2}; the exponent is the log-log slope of |Phi'|,
    expected near -(N-1).  A constant profile is degenerate and returns
    (0, nan).
    """
    dim = result.dim
    if dim < 3:
        raise ConfigurationError("profile bounds require N >= 3")
    grid = result.samples.grid
    phi = result.samples.values
    r = grid.nodes
    deficit = (1.0 - phi) * r ** (dim - 2)
    c_fit = float(np.max(deficit))
    if np.max(np.abs(phi - 1.0)) < 1e-12:
        result.bound_constant = 0.0
        return 0.0, math.nan
    dphi = np.gradient(phi, r)
    a = grid.spec.hole_radius
    r_max = r[-1]
    window = (r >= 2 * a) & (r <= 0.5 * r_max) & (np.abs(dphi) > 0)
    if window.sum() < 3:
        raise ConfigurationError("too few nodes in the gradient fit window")
    slope = np.polyfit(np.log(r[window]), np.log(np.abs(dphi[window])), 1)[0]
    result.bound_constant = c_fit
    return c_fit, float(slope)


def export_profile_csv(result: ProfileResult, path):
    """Profile CSV: r, phi and the fitted lower bound 1 - C_fit/r^{N-2}."""
    dim = result.dim
    if dim >= 3:
        try:
            c_fit, _ = profile_bounds_check(result)
        except ConfigurationError:
            c_fit = 0.0
        lower = 1.0 - c_fit * result.samples.grid.nodes ** (2.0 - dim)
    else:
        lower = np.zeros_like(result.samples.grid.nodes)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "phi", "lower_bound"])
        for r, phi, lb in zip(result.samples.grid.nodes, result.samples.values, lower):
            writer.writerow([f"{r:.17g}", f"{phi:.17g}", f"{lb:.17g}"])
