"""Implicit finite-difference evolution of the exterior-domain heat flow.

The spatial operator is the radial Laplacian in conservation form on the
dual mesh: exact face coefficients give a stiffness matrix that is
symmetric against the volume weights, so the discrete semigroup is
self-adjoint in the weighted inner product, order preserving (M-matrix
under backward Euler) and monotone in theta by construction.

The hole boundary condition is imposed through the boundary flux: with the
outward normal pointing toward the origin the condition reads
-s u'(a) + c u(a) = 0, i.e. an outflow term (c/s) u(a) for Robin/Neumann
and a pinned value for Dirichlet.  The artificial outer boundary either
matches the free-space solution (default) or is a homogeneous Neumann wall.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import backends
from .core import (
    ConfigurationError,
    DecaySeries,
    NumericalError,
    RadialField,
    RadialGrid,
    ThetaBC,
    hat_shell_masses,
    lp_norm,
    omega_mass,
    unit_sphere_area,
)
from .freespace import freespace_eval_radial, freespace_evolve_radial, gaussian_ball_mass

SCHEMES = ("backward_euler", "crank_nicolson")
OUTER_BCS = ("match_freespace", "homogeneous_neumann")


@dataclass(frozen=True)
class SolverParams:
    """Time-stepping configuration for the implicit march."""

    dt_initial: float = 1e-3
    dt_growth: float = 1.05
    scheme: str = "backward_euler"
    outer_bc: str = "match_freespace"
    tol_linear: float = 1e-10
    outer_monitor_tol: float = math.inf

    def __post_init__(self):
        if not self.dt_initial > 0:
            raise ConfigurationError(f"dt_initial must be > 0, got {self.dt_initial}")
        if not self.dt_growth >= 1.0:
            raise ConfigurationError(f"dt_growth must be >= 1, got {self.dt_growth}")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.outer_bc not in OUTER_BCS:
            raise ConfigurationError(f"outer_bc must be one of {OUTER_BCS}, got {self.outer_bc!r}")
        if not self.tol_linear > 0:
            raise ConfigurationError("tol_linear must be > 0")


@dataclass
class EvolutionTrace:
    """Checkpoints of an evolution with mass and hole-flux bookkeeping."""

    checkpoints: list
    masses: np.ndarray
    boundary_fluxes: np.ndarray
    outer_mismatch: np.ndarray
    flagged: bool = False

    def __post_init__(self):
        times = [f.time for f in self.checkpoints]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ConfigurationError("checkpoint times must be strictly increasing")


class _Discretization:
    """Stiffness tridiagonal and boundary data for one (grid, theta, outer_bc)."""

    def __init__(self, grid: RadialGrid, theta: ThetaBC, outer_bc: str):
        self.grid = grid
        self.theta = theta
        self.outer_bc = outer_bc
        nodes = grid.nodes
        n = nodes.size
        h = np.diff(nodes)
        cf = grid.face_coefficients()
        flux = cf / h  # per-face conductances
        sl = np.zeros(n)
        sd = np.zeros(n)
        su = np.zeros(n)
        sd[:-1] += flux
        su[:-1] -= flux
        sd[1:] += flux
        sl[1:] -= flux
        self.hole_dirichlet = theta.is_dirichlet
        self.beta = 0.0
        if not theta.is_dirichlet and not theta.is_neumann:
            a = grid.spec.hole_radius
            self.beta = unit_sphere_area(grid.dim) * a ** (grid.dim - 1) * theta.robin_coefficient()
            sd[0] += self.beta
        self.outer_dirichlet = outer_bc == "match_freespace"
        self.sl, self.sd, self.su = sl, sd, su
        self.hole_conductance = flux[0]

    def apply_stiffness(self, u):
        out = self.sd * u
        out[:-1] += self.su[:-1] * u[1:]
        out[1:] += self.sl[1:] * u[:-1]
        return out

    def hole_flux(self, u):
        """Discrete integral of du/dn over the hole boundary (<= 0 for u >= 0)."""
        if self.hole_dirichlet:
            return -self.hole_conductance * (u[1] - u[0])
        if self.theta.is_neumann:
            return 0.0
        return -self.beta * u[0]


def _step_schedule(duration, params: SolverParams):
    """Geometric step sizes covering the duration, last step clipped."""
    dts = []
    acc = 0.0
    dt = params.dt_initial
    while acc < duration * (1.0 - 1e-13):
        step = min(dt, duration - acc)
        dts.append(step)
        acc += step
        dt *= params.dt_growth
    return np.array(dts if dts else [duration])


def grid_reference(u0: RadialField, hole_fill=0.0):
    """Free-space reference built from the grid data (zero outside the grid).

    Valid for compactly supported data; experiments with data meant to be
    constant beyond the grid pass their own analytic reference instead.
    """
    base = RadialField(grid=u0.grid, values=u0.values.copy(), time=0.0)

    def ref(elapsed, radii):
        return freespace_eval_radial(base, elapsed, radii, hole_fill=hole_fill)

    return ref


def _march(disc, values, t_start, duration, params, reference, probe_radius=None):
    grid = disc.grid
    dts = _step_schedule(duration, params)
    t_ends = t_start + np.cumsum(dts)
    if disc.outer_dirichlet:
        outer_vals = np.array(
            [float(reference(t, np.array([grid.spec.outer_radius]))[0]) for t in t_ends]
        )
    else:
        outer_vals = np.zeros_like(t_ends)
    if probe_radius is None:
        probe_i, probe_frac = 0, 0.0
    else:
        probe_i = int(np.searchsorted(grid.nodes, probe_radius) - 1)
        probe_i = min(max(probe_i, 0), grid.nodes.size - 2)
        span = grid.nodes[probe_i + 1] - grid.nodes[probe_i]
        probe_frac = float((probe_radius - grid.nodes[probe_i]) / span)

    if params.scheme == "backward_euler":
        u, probe = backends.march_be(
            disc.sl, disc.sd, disc.su, grid.weights, values, dts, outer_vals,
            int(disc.hole_dirichlet), int(disc.outer_dirichlet), probe_i, probe_frac,
        )
    else:
        u, probe = _march_cn(disc, values, dts, outer_vals, probe_i, probe_frac)
    if not np.all(np.isfinite(u)):
        raise NumericalError("implicit solve produced non-finite values")
    return u, t_ends, probe


def _march_cn(disc, values, dts, outer_vals, probe_i, probe_frac):
    w = disc.grid.weights
    n = w.size
    u = np.array(values, dtype=float)
    probe = np.empty(dts.size)
    for k, dt in enumerate(dts):
        dd = w / dt + 0.5 * disc.sd
        rhs = (w / dt) * u - 0.5 * disc.apply_stiffness(u)
        dl = 0.5 * disc.sl.copy()
        du = 0.5 * disc.su.copy()
        if disc.hole_dirichlet:
            dd[0], du[0], rhs[0] = 1.0, 0.0, 0.0
        if disc.outer_dirichlet:
            dd[-1], dl[-1], rhs[-1] = 1.0, 0.0, outer_vals[k]
        u = backends.solve_tridiag(dl, dd, du, rhs)
        probe[k] = u[probe_i] * (1.0 - probe_frac) + u[probe_i + 1] * probe_frac
    return u, probe


def evolve_series(u0: RadialField, theta: ThetaBC, times, params: SolverParams,
                  reference=None, probe_radius=None):
    """March through the requested absolute times, recording checkpoints.

    Returns an EvolutionTrace; when probe_radius is given the trace also
    carries the dense per-step probe samples as (probe_times, probe_values).
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ConfigurationError("times must be non-empty")
    if np.any(np.diff(times) <= 0) or times[0] <= u0.time:
        raise ConfigurationError("times must be strictly increasing and exceed the field time")
    disc = _Discretization(u0.grid, theta, params.outer_bc)
    if reference is None:
        reference = grid_reference(u0)
    sentinel = u0.grid.spec.outer_radius
    if disc.outer_dirichlet:
        sentinel = 0.95 * sentinel
    scale = max(float(np.max(np.abs(u0.values))), 1e-300)

    values = u0.values.copy()
    t_now = u0.time
    checkpoints, masses, fluxes, mismatches = [], [], [], []
    probe_t_all, probe_v_all = [], []
    for t_next in times:
        values, t_ends, probe = _march(
            disc, values, t_now, t_next - t_now, params, reference, probe_radius
        )
        t_now = t_next
        fld = RadialField(grid=u0.grid, values=values.copy(), time=t_now)
        checkpoints.append(fld)
        masses.append(omega_mass(fld))
        fluxes.append(disc.hole_flux(values))
        ref_val = float(reference(t_now - u0.time, np.array([sentinel]))[0])
        num_val = float(np.interp(sentinel, u0.grid.nodes, values))
        mismatches.append(abs(num_val - ref_val) / scale)
        if probe_radius is not None:
            probe_t_all.append(t_ends)
            probe_v_all.append(probe)
    trace = EvolutionTrace(
        checkpoints=checkpoints,
        masses=np.array(masses),
        boundary_fluxes=np.array(fluxes),
        outer_mismatch=np.array(mismatches),
        flagged=bool(np.max(mismatches) > params.outer_monitor_tol),
    )
    if probe_radius is not None:
        trace.probe_times = np.concatenate(probe_t_all)
        trace.probe_values = np.concatenate(probe_v_all)
    return trace


def evolve(u0: RadialField, theta: ThetaBC, t_final, params: SolverParams,
           reference=None) -> RadialField:
    """Solution at time u0.time + t_final (t_final is a duration)."""
    if not t_final > 0:
        raise ConfigurationError(f"t_final must be > 0, got {t_final}")
    trace = evolve_series(u0, theta, [u0.time + t_final], params, reference=reference)
    out = trace.checkpoints[-1]
    if trace.flagged:
        out.flags = out.flags + ("outer_contamination",)
    return out


def discrete_selfadjointness_check(f: RadialField, g: RadialField, theta: ThetaBC,
                                   t, params: SolverParams) -> float:
    """Defect |<f, S(t)g>_w - <g, S(t)f>_w| of the weighted duality pairing.

    The discrete propagator is symmetric against the volume weights by
    construction, so with homogeneous outer conditions the defect is pure
    roundoff.
    """
    if f.grid is not g.grid and not np.array_equal(f.grid.nodes, g.grid.nodes):
        raise ConfigurationError("fields must share a grid")
    w = f.grid.weights
    sg = evolve(g, theta, t, params).values
    sf = evolve(f, theta, t, params).values
    return float(abs(w @ (f.values * sg) - w @ (g.values * sf)))


@dataclass
class MonotonicityReport:
    theta_low: float
    theta_high: float
    times: np.ndarray
    max_violation: float
    min_margin: float
    violations: np.ndarray


def theta_monotonicity_check(u0: RadialField, theta1: ThetaBC, theta2: ThetaBC,
                             times, params: SolverParams,
                             reference=None) -> MonotonicityReport:
    """Pointwise comparison of the evolutions for theta1 <= theta2, u0 >= 0."""
    if theta1.theta > theta2.theta:
        raise ConfigurationError("need theta1 <= theta2")
    if np.any(u0.values < 0):
        raise ConfigurationError("comparison requires u0 >= 0")
    tr1 = evolve_series(u0, theta1, times, params, reference=reference)
    tr2 = evolve_series(u0, theta2, times, params, reference=reference)
    diffs = np.array(
        [np.max(c1.values - c2.values) for c1, c2 in zip(tr1.checkpoints, tr2.checkpoints)]
    )
    margins = np.array(
        [np.min(c2.values - c1.values) for c1, c2 in zip(tr1.checkpoints, tr2.checkpoints)]
    )
    return MonotonicityReport(
        theta_low=theta1.theta,
        theta_high=theta2.theta,
        times=np.asarray(times, dtype=float),
        max_violation=float(max(np.max(diffs), 0.0)),
        min_margin=float(np.min(margins)),
        violations=np.maximum(diffs, 0.0),
    )


def lp_lq_smoothing_check(u0: RadialField, theta: ThetaBC, p, q, times,
                          params: SolverParams, reference=None) -> DecaySeries:
    """Series t -> t^{(N/2)(1/p - 1/q)} ||S(t)u0||_q (bounded by theory)."""
    if not (1 <= p <= q):
        raise ConfigurationError(f"need 1 <= p <= q, got p={p}, q={q}")
    trace = evolve_series(u0, theta, times, params, reference=reference)
    dim = u0.grid.dim
    inv_q = 0.0 if q == math.inf else 1.0 / q
    gamma = 0.5 * dim * (1.0 / p - inv_q)
    vals = np.array(
        [f.time**gamma * lp_norm(f, q) for f in trace.checkpoints]
    )
    return DecaySeries(times=np.asarray(times, dtype=float), values=vals)


@dataclass
class ShellKernelComparison:
    """L1 distance between the exterior and free evolutions of a shell source."""

    series: DecaySeries
    bounds: np.ndarray
    rho_inner: float
    profile_gap: float  # 2 (1 - Phi^0(rho_inner))


def shell_kernel_comparison(grid: RadialGrid, rho_src, theta: ThetaBC, times,
                            params: SolverParams) -> ShellKernelComparison:
    """Shell-averaged L1 kernel comparison against its theoretical bound.

    The source is a unit-mass thin shell at rho_src; the bound combines the
    Dirichlet-profile deficit with the Gaussian mass over the hole, both
    evaluated at the shell's inner edge (the worst case over the shell).
    """
    dim = grid.dim
    a = grid.spec.hole_radius
    if dim < 3:
        raise ConfigurationError("kernel comparison requires N >= 3 (profile vanishes otherwise)")
    if not rho_src > a:
        raise ConfigurationError("source radius must exceed the hole radius")
    i = int(np.searchsorted(grid.nodes, rho_src))
    h_loc = grid.nodes[min(i + 1, grid.nodes.size - 1)] - grid.nodes[max(i - 1, 0)]
    half = max(h_loc, 0.01 * rho_src)
    lo, hi = rho_src - half, rho_src + half
    masses = hat_shell_masses(grid, lo, hi)
    total = masses.sum()
    u0 = RadialField(grid=grid, values=np.divide(masses, grid.weights, where=grid.weights > 0))
    u0.values /= total

    trace = evolve_series(u0, theta, times, params)
    dists, bounds = [], []
    profile_gap = 2.0 * (a / lo) ** (dim - 2)
    for fld in trace.checkpoints:
        free = freespace_evolve_radial(u0, fld.time - u0.time)
        diff = fld.with_values(fld.values - free.values)
        dists.append(lp_norm(diff, 1))
        bounds.append(profile_gap + gaussian_ball_mass(lo, a, fld.time - u0.time, dim))
    series = DecaySeries(times=np.asarray(times, dtype=float), values=np.array(dists))
    return ShellKernelComparison(
        series=series, bounds=np.array(bounds), rho_inner=lo, profile_gap=profile_gap
    )


def dump_checkpoints_csv(trace: EvolutionTrace, path):
    """Checkpoint dump with one (t, r, u) row per node per checkpoint."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "r", "u"])
        for fld in trace.checkpoints:
            for r, u in zip(fld.grid.nodes, fld.values):
                writer.writerow([f"{fld.time:.17g}", f"{r:.17g}", f"{u:.17g}"])


def dump_run_manifest(path, grid: RadialGrid, theta: ThetaBC, params: SolverParams,
                      trace: EvolutionTrace, extra=None):
    spec = grid.spec
    manifest = {
        "domain": {
            "dim": spec.dim,
            "hole_radius": spec.hole_radius,
            "outer_radius": spec.outer_radius,
            "n_cells": spec.n_cells,
            "stretch": spec.stretch,
        },
        "theta": theta.theta,
        "solver": {
            "dt_initial": params.dt_initial,
            "dt_growth": params.dt_growth,
            "scheme": params.scheme,
            "outer_bc": params.outer_bc,
            "tol_linear": params.tol_linear,
        },
        "backend": backends.backend_name(),
        "checkpoint_times": [f.time for f in trace.checkpoints],
        "masses": trace.masses.tolist(),
        "boundary_fluxes": trace.boundary_fluxes.tolist(),
        "outer_mismatch": trace.outer_mismatch.tolist(),
        "flagged": trace.flagged,
    }
    if extra:
        manifest.update(extra)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
