"""Experiment drivers measuring the long-time theory as decay series.

Each driver evolves data with the exterior solver, compares against the
free-space reference and the closed-form profile, and reports a pass/fail
verdict on an exponent or inequality together with the measured series.
Experiments never assert constants, only exponents and inequalities.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ConfigurationError,
    DecaySeries,
    RadialField,
    RadialGrid,
    ThetaBC,
    fit_decay_exponent,
    indicator_shell,
    lp_norm,
    omega_mass,
)
from .freespace import ball_masses, freespace_eval_radial
from .profiles import profile_value
from .solver import SolverParams, evolve_series


@dataclass
class ExperimentReport:
    """Outcome of one experiment: series, target, verdict and artifacts."""

    name: str
    inputs: dict
    series: DecaySeries
    target_exponent: float
    passed: bool
    details: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)

    def write(self, out_dir, columns=None, extra_rows=None):
        """Emit <name>.csv (the series) and <name>.json (the report)."""
        import os

        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, f"{self.name}.csv")
        cols = columns or {}
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["t", "value"] + list(cols.keys())
            writer.writerow(header)
            for i, (t, v) in enumerate(zip(self.series.times, self.series.values)):
                row = [f"{t:.17g}", f"{v:.17g}"]
                row += [f"{np.asarray(c)[i]:.17g}" for c in cols.values()]
                writer.writerow(row)
        json_path = os.path.join(out_dir, f"{self.name}.json")
        payload = {
            "name": self.name,
            "inputs": self.inputs,
            "target_exponent": self.target_exponent,
            "fitted_slope": self.series.fitted_slope,
            "fit_r2": self.series.fit_r2,
            "passed": bool(self.passed),
            "details": _jsonable(self.details),
        }
        with open(json_path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        self.artifacts = [csv_path, json_path]
        return self.artifacts


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def dyadic_times(t0, t_end):
    """Checkpoints t0 * 2^k up to t_end (equally spaced in log time)."""
    n = int(math.floor(math.log2(t_end / t0))) + 1
    return t0 * 2.0 ** np.arange(n)


def asymptotic_mass_experiment(u0: RadialField, theta: ThetaBC, times,
                               params: SolverParams, rel_tol=0.02,
                               reference=None) -> ExperimentReport:
    """Track the domain mass against its predicted limit integral of u0 * Phi.

    With Neumann conditions the mass must stay constant; otherwise it
    decreases toward the profile-weighted integral of the data.  The report
    fails if the mass series ever increases (beyond roundoff), if the final
    relative gap exceeds rel_tol, or if the outer monitor flagged the run.
    """
    grid = u0.grid
    trace = evolve_series(u0, theta, times, params, reference=reference)
    phi = profile_value(grid.nodes, grid.dim, grid.spec.hole_radius, theta)
    target = float(grid.weights @ (u0.values * phi))
    masses = trace.masses
    m0 = omega_mass(u0)
    scale = max(abs(m0), 1e-300)
    monotone_ok = bool(np.all(np.diff(masses) <= 1e-9 * scale))
    gap = abs(masses[-1] - target) / max(abs(target), 1e-300) if target != 0 else abs(masses[-1])
    series = DecaySeries(times=np.asarray(times, dtype=float), values=np.abs(masses))
    passed = monotone_ok and gap <= rel_tol and not trace.flagged
    return ExperimentReport(
        name="mass",
        inputs={"theta": theta.theta, "dim": grid.dim, "rel_tol": rel_tol},
        series=series,
        target_exponent=0.0,
        passed=passed,
        details={
            "target_mass": target,
            "initial_mass": m0,
            "final_mass": float(masses[-1]),
            "relative_gap": float(gap),
            "monotone": monotone_ok,
            "masses": masses,
            "boundary_fluxes": trace.boundary_fluxes,
            "flagged": trace.flagged,
        },
    )


def far_field_closeness(u0: RadialField, theta: ThetaBC, probe_radii, times,
                        params: SolverParams, epsilon=0.05,
                        reference=None) -> ExperimentReport:
    """Sup over time of |u - u_freespace| at each probe radius.

    Asserts the sup is non-increasing in the probe radius (small slack) and
    falls below epsilon at the outermost probe.
    """
    grid = u0.grid
    probe_radii = np.sort(np.asarray(probe_radii, dtype=float))
    trace = evolve_series(u0, theta, times, params, reference=reference)
    ref = reference
    sups = np.zeros_like(probe_radii)
    for fld in trace.checkpoints:
        if ref is None:
            free = freespace_eval_radial(u0, fld.time - u0.time, probe_radii)
        else:
            free = ref(fld.time - u0.time, probe_radii)
        here = np.interp(probe_radii, grid.nodes, fld.values)
        sups = np.maximum(sups, np.abs(here - free))
    slack = 1e-3 * max(float(np.max(np.abs(u0.values))), 1e-300)
    non_increasing = bool(np.all(np.diff(sups) <= slack))
    passed = non_increasing and sups[-1] <= epsilon
    # the natural axis here is the probe radius, not time
    series = DecaySeries(times=probe_radii, values=sups)
    return ExperimentReport(
        name="farfield",
        inputs={"theta": theta.theta, "dim": grid.dim, "epsilon": epsilon,
                "probe_radii": probe_radii.tolist()},
        series=series,
        target_exponent=0.0,
        passed=passed,
        details={"sup_per_probe": sups, "non_increasing": non_increasing},
    )


def lacunary_annuli_field(grid: RadialGrid, ratio=2.0, fill=0.75, r_min=1.5,
                          support_cap=0.35):
    """Union of geometrically spaced annuli: bounded radial data carrying
    O(1) amplitude structure at every dyadic scale up to the support cap."""
    acc = np.zeros_like(grid.nodes)
    spans = []
    radius = r_min
    while radius * (1.0 + fill) < support_cap * grid.spec.outer_radius:
        spans.append((radius, radius * (1.0 + fill)))
        acc += indicator_shell(grid, radius, radius * (1.0 + fill)).values
        radius *= ratio
    if not spans:
        raise ConfigurationError("outer radius too small for any annulus")
    return RadialField(grid=grid, values=np.clip(acc, 0.0, 1.0)), spans


def linfty_rate_experiment(u0: RadialField, theta: ThetaBC, times,
                           params: SolverParams, slope_window=None,
                           fit_points=5, hole_fill=0.0,
                           reference=None) -> ExperimentReport:
    """Decay of max |u - Phi * u_freespace| over the grid, slope-fitted.

    slope_window is the accepted (lo, hi) interval for the fitted slope;
    None records the slope without a verdict on it.  hole_fill extends the
    data by a constant inside the hole for the free-space reference.
    """
    grid = u0.grid
    times = np.asarray(times, dtype=float)
    trace = evolve_series(u0, theta, times, params, reference=reference)
    phi = profile_value(grid.nodes, grid.dim, grid.spec.hole_radius, theta)
    metrics = []
    for fld in trace.checkpoints:
        if reference is None:
            free = freespace_eval_radial(u0, fld.time - u0.time, grid.nodes,
                                         hole_fill=hole_fill)
        else:
            free = reference(fld.time - u0.time, grid.nodes)
        metrics.append(float(np.max(np.abs(fld.values - phi * free))))
    series = DecaySeries(times=times, values=np.array(metrics))
    n = times.size
    window = (max(0, n - fit_points), n)
    if np.all(series.values[window[0]:window[1]] > 0):
        slope, r2 = fit_decay_exponent(series, window)
    else:
        slope, r2 = math.nan, math.nan
    in_window = slope_window is None or (slope_window[0] <= slope <= slope_window[1])
    passed = bool(in_window) and not trace.flagged
    ratio_log = series.values * np.sqrt(times) / (1.0 + np.log(times))
    return ExperimentReport(
        name="rate",
        inputs={"theta": theta.theta, "dim": grid.dim,
                "slope_window": list(slope_window) if slope_window else None},
        series=series,
        target_exponent=-0.5,
        passed=passed,
        details={
            "slope": slope,
            "r2": r2,
            "fit_window": list(window),
            "envelope_ratio_logsqrt": ratio_log,
            "envelope_constant": float(np.max(ratio_log)),
            "flagged": trace.flagged,
        },
    )


def lp_decay_experiment(u0: RadialField, p, q, theta: ThetaBC, times,
                        params: SolverParams, drop_factor=10.0,
                        reference=None) -> ExperimentReport:
    """Weighted-norm decay t^{(N/2)(1/p-1/q)} ||u(t)||_q, tendency to zero.

    The theory proves no rate, so the verdict only requires the final value
    to drop below initial/drop_factor over the horizon.
    """
    if not 1 < p < math.inf:
        raise ConfigurationError("need 1 < p < inf")
    if not p <= q:
        raise ConfigurationError("need q >= p")
    grid = u0.grid
    times = np.asarray(times, dtype=float)
    trace = evolve_series(u0, theta, times, params, reference=reference)
    dim = grid.dim
    inv_q = 0.0 if q == math.inf else 1.0 / q
    gamma = 0.5 * dim * (1.0 / p - inv_q)
    vals = np.array([f.time**gamma * lp_norm(f, q) for f in trace.checkpoints])
    initial = lp_norm(u0, q) if np.isfinite(lp_norm(u0, q)) else vals[0]
    series = DecaySeries(times=times, values=vals)
    if initial == 0.0:
        passed = bool(np.all(vals == 0.0))
    else:
        passed = bool(vals[-1] < initial / drop_factor)
    return ExperimentReport(
        name="lpdecay",
        inputs={"theta": theta.theta, "p": p, "q": q, "drop_factor": drop_factor},
        series=series,
        target_exponent=-gamma,
        passed=passed,
        details={"initial_norm": float(initial), "final_weighted": float(vals[-1])},
    )


def slow_decay_demo(grid: RadialGrid, p, theta: ThetaBC, params: SolverParams,
                    n_shells=3, base_radius=4.0, envelope=None):
    """Desk-scale slow-decay construction: shells 2^{-k/p'} 1_{[4^k, 1.5*4^k]}.

    Normalised to unit L^p norm, then checked to stay above a slowly
    decaying envelope g at times t_k matched to each shell's survival
    window.  Returns (report, series).
    """
    pprime = p / (p - 1.0)
    vals = np.zeros_like(grid.nodes)
    radii = []
    for k in range(1, n_shells + 1):
        lo = base_radius**k
        hi = 1.5 * lo
        if hi > 0.5 * grid.spec.outer_radius:
            raise ConfigurationError("grid too small for the requested shells")
        radii.append((lo, hi))
        vals += 2.0 ** (-k / pprime) * indicator_shell(grid, lo, hi).values
    u0 = RadialField(grid=grid, values=vals)
    norm0 = lp_norm(u0, p)
    u0 = u0.with_values(u0.values / norm0)
    times = np.array([0.125 * base_radius ** (2 * k) for k in range(1, n_shells + 1)])
    trace = evolve_series(u0, theta, times, params)
    norms = np.array([lp_norm(f, p) for f in trace.checkpoints])
    if envelope is None:
        envelope = lambda t: 0.01 / (1.0 + np.log1p(t))
    g_vals = np.array([envelope(t) for t in times])
    passed = bool(np.all(norms >= g_vals))
    series = DecaySeries(times=times, values=norms)
    report = ExperimentReport(
        name="slowdecay",
        inputs={"p": p, "theta": theta.theta, "n_shells": n_shells},
        series=series,
        target_exponent=0.0,
        passed=passed,
        details={"envelope": g_vals, "norms": norms, "shells": radii},
    )
    return report, series
