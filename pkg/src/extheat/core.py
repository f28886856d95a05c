"""Radial grids, weighted norms and decay-rate fitting.

Everything downstream works on radial functions u(r) sampled on a grid
over [a, R_out], the exterior of a centered ball of radius ``a`` truncated
at an artificial outer radius.  Integrals use weights that are exact for
constants against the volume element omega_{N-1} r^{N-1} dr, which keeps
all mass bookkeeping honest.
"""

import math
from dataclasses import dataclass, field

import numpy as np


class ConfigurationError(ValueError):
    """Invalid domain / solver configuration."""


class NumericalError(RuntimeError):
    """A numerical procedure produced garbage (NaN, singular system, ...)."""


class SearchError(RuntimeError):
    """An iterative search exceeded its iteration cap."""


def unit_sphere_area(dim):
    """Surface area of the unit sphere S^{N-1} in R^N."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def ball_volume(dim, radius):
    """Volume of the ball of given radius in R^N."""
    return unit_sphere_area(dim) / dim * radius**dim


@dataclass(frozen=True)
class DomainSpec:
    """Exterior of a centered ball, truncated for computation.

    Parameters
    ----------
    dim : int
        Space dimension N >= 2.
    hole_radius : float
        Radius a > 0 of the spherical hole.
    outer_radius : float
        Artificial truncation radius R_out > a.
    n_cells : int
        Number of grid cells (>= 16); the grid has n_cells + 1 nodes.
    stretch : float
        Geometric cell-growth factor >= 1 (1 gives a uniform grid).
    """

    dim: int
    hole_radius: float
    outer_radius: float
    n_cells: int
    stretch: float = 1.0

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ConfigurationError(f"dim must be an integer >= 2, got {self.dim}")
        if not self.hole_radius > 0:
            raise ConfigurationError(f"hole_radius must be > 0, got {self.hole_radius}")
        if not self.outer_radius > self.hole_radius:
            raise ConfigurationError(
                f"outer_radius ({self.outer_radius}) must exceed hole_radius ({self.hole_radius})"
            )
        if self.n_cells < 16:
            raise ConfigurationError(f"n_cells must be >= 16, got {self.n_cells}")
        if not self.stretch >= 1.0:
            raise ConfigurationError(f"stretch must be >= 1, got {self.stretch}")


@dataclass(frozen=True)
class ThetaBC:
    """Boundary condition selector theta in [0, 1].

    theta = 0 is Dirichlet, theta = 1 is Neumann and intermediate values
    give the Robin condition  sin(pi theta/2) du/dn + cos(pi theta/2) u = 0
    with the normal pointing out of the domain (toward the origin).
    """

    theta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ConfigurationError(f"theta must lie in [0, 1], got {self.theta}")

    @property
    def s(self):
        return math.sin(0.5 * math.pi * self.theta)

    @property
    def c(self):
        return math.cos(0.5 * math.pi * self.theta)

    @property
    def is_dirichlet(self):
        return self.theta == 0.0

    @property
    def is_neumann(self):
        return self.theta == 1.0

    def robin_coefficient(self):
        """cot(pi theta/2), the coefficient b in du/dn + b u = 0 (theta > 0)."""
        if self.is_dirichlet:
            raise ConfigurationError("Dirichlet condition has no finite Robin coefficient")
        return self.c / self.s


def _segment_moments(nodes, dim, lo=None, hi=None):
    """Hat-function moments of the volume element over [lo, hi].

    For each cell [r_i, r_{i+1}] returns (A_i, B_i) with
    A_i = omega int lam_i(r) r^{N-1} dr  and  B_i the same for lam_{i+1},
    where lam are the linear hat restrictions and the integral is clipped
    to [lo, hi].  A_i + B_i is the exact clipped cell volume.
    """
    omega = unit_sphere_area(dim)
    rl = nodes[:-1]
    rr = nodes[1:]
    h = rr - rl
    lo = rl if lo is None else np.maximum(rl, lo)
    hi = rr if hi is None else np.minimum(rr, hi)
    lo = np.minimum(np.maximum(lo, rl), rr)
    hi = np.minimum(np.maximum(hi, rl), rr)
    n = dim
    # moments of r^{N-1} and r^N over the clipped segment
    m0 = (hi**n - lo**n) / n
    m1 = (hi ** (n + 1) - lo ** (n + 1)) / (n + 1)
    bad = hi <= lo
    a_mom = omega * (rr * m0 - m1) / h
    b_mom = omega * (m1 - rl * m0) / h
    a_mom[bad] = 0.0
    b_mom[bad] = 0.0
    return a_mom, b_mom


@dataclass(frozen=True)
class RadialGrid:
    """Node locations and constant-exact volume weights for a DomainSpec."""

    spec: DomainSpec
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def dim(self):
        return self.spec.dim

    def volume(self):
        return ball_volume(self.dim, self.spec.outer_radius) - ball_volume(
            self.dim, self.spec.hole_radius
        )

    def face_coefficients(self):
        """Exact-flux face factors h / int_cell dr/(omega r^{N-1}) per cell.

        With these the discrete radial Laplacian reproduces harmonic
        functions (A + B r^{2-N}, or logarithms for N = 2) exactly at the
        nodes: the per-cell resistance is integrated in closed form, so a
        constant-flux solution solves the scheme identically.
        """
        omega = unit_sphere_area(self.dim)
        rl, rr = self.nodes[:-1], self.nodes[1:]
        h = rr - rl
        if self.dim == 2:
            resistance = np.log(rr / rl) / omega
        else:
            n = self.dim
            resistance = (rl ** (2 - n) - rr ** (2 - n)) / (omega * (n - 2))
        return h / resistance


def make_radial_grid(spec: DomainSpec) -> RadialGrid:
    """Build the (possibly geometrically stretched) grid with exact weights."""
    a, b, m, g = spec.hole_radius, spec.outer_radius, spec.n_cells, spec.stretch
    if g == 1.0:
        nodes = np.linspace(a, b, m + 1)
    else:
        h0 = (b - a) * (g - 1.0) / (g**m - 1.0)
        nodes = a + h0 * (g ** np.arange(m + 1) - 1.0) / (g - 1.0)
        nodes[0], nodes[-1] = a, b
    if not np.all(np.diff(nodes) > 0):
        raise ConfigurationError("grid nodes are not strictly increasing")
    a_mom, b_mom = _segment_moments(nodes, spec.dim)
    weights = np.zeros(m + 1)
    weights[:-1] += a_mom
    weights[1:] += b_mom
    return RadialGrid(spec=spec, nodes=nodes, weights=weights)


@dataclass
class RadialField:
    """A radial function sampled at the grid nodes, tagged with its time."""

    grid: RadialGrid
    values: np.ndarray
    time: float = 0.0
    flags: tuple = ()

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.nodes.shape:
            raise ConfigurationError(
                f"field has {self.values.shape[0]} values for {self.grid.nodes.shape[0]} nodes"
            )
        if not np.all(np.isfinite(self.values)):
            raise NumericalError("field contains non-finite values")
        if self.time < 0:
            raise ConfigurationError("field time must be >= 0")

    def with_values(self, values, time=None, flags=None):
        return RadialField(
            grid=self.grid,
            values=values,
            time=self.time if time is None else time,
            flags=self.flags if flags is None else flags,
        )


def field_from_function(grid, fn, time=0.0):
    return RadialField(grid=grid, values=np.asarray(fn(grid.nodes), dtype=float), time=time)


def indicator_shell(grid, lo, hi):
    """Indicator of {lo <= |x| <= hi} projected onto the grid.

    Edge nodes get the exact volume fraction of their hat support inside the
    shell, so omega_mass(result) equals the shell volume to machine
    precision regardless of where the edges fall.
    """
    if not lo < hi:
        raise ConfigurationError(f"need lo < hi, got [{lo}, {hi}]")
    masses = hat_shell_masses(grid, lo, hi)
    vals = np.zeros_like(grid.weights)
    pos = grid.weights > 0
    vals[pos] = masses[pos] / grid.weights[pos]
    return RadialField(grid=grid, values=vals)


def hat_shell_masses(grid, lo, hi):
    """Per-node integral of the hat basis against the shell {lo <= r <= hi}."""
    a_mom, b_mom = _segment_moments(grid.nodes, grid.dim, lo=lo, hi=hi)
    out = np.zeros_like(grid.weights)
    out[:-1] += a_mom
    out[1:] += b_mom
    return out


def lp_norm(f: RadialField, p) -> float:
    """Weighted L^p norm; p = inf gives the max-norm over the nodes."""
    if p != math.inf and p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    absu = np.abs(f.values)
    if p == math.inf:
        return float(absu.max())
    return float((f.grid.weights @ absu**p) ** (1.0 / p))


def weak_lp_quasinorm(f: RadialField, p) -> float:
    """Weak-L^p quasinorm  sup_lambda lambda * mu{|u| > lambda}^{1/p}.

    The supremum of lambda * mu{|u| > lambda}^{1/p} over each interval
    between consecutive sample levels is attained just below the upper
    level, where the super-level set is {|u| >= level}; sweeping the
    distinct sample levels therefore captures the discrete supremum.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    absu = np.abs(f.values)
    levels, inverse = np.unique(absu, return_inverse=True)
    if levels[-1] == 0.0:
        return 0.0
    mass_per_level = np.bincount(inverse, weights=f.grid.weights, minlength=levels.size)
    # mass of {|u| >= level_k}, levels ascending
    tail_mass = np.cumsum(mass_per_level[::-1])[::-1]
    pos = levels > 0
    return float(np.max(levels[pos] * tail_mass[pos] ** (1.0 / p)))


def omega_mass(f: RadialField) -> float:
    """Integral of the field over the truncated domain."""
    return float(f.grid.weights @ f.values)


@dataclass
class DecaySeries:
    """Sampled positive quantity against time, with an optional log-log fit."""

    times: np.ndarray
    values: np.ndarray
    fitted_slope: float = math.nan
    fit_r2: float = math.nan

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1 or self.times.shape != self.values.shape:
            raise ConfigurationError("times and values must be 1-d arrays of equal length")
        if self.times.size and (np.any(self.times <= 0) or np.any(np.diff(self.times) <= 0)):
            raise ConfigurationError("times must be positive and strictly increasing")
        if np.any(self.values < 0):
            raise ConfigurationError("series values must be non-negative")


def fit_decay_exponent(series: DecaySeries, window=None):
    """Least-squares slope of log(value) against log(time) on an index window.

    Returns (slope, r_squared) and stores both on the series.  The window is
    a (start, stop) pair with slice semantics; None fits the whole series.
    """
    if window is None:
        window = (0, series.times.size)
    start, stop = window
    t = series.times[start:stop]
    v = series.values[start:stop]
    if t.size < 3:
        raise ValueError("fit window must contain at least 3 samples")
    if np.any(v <= 0):
        raise ValueError("fit window contains non-positive values")
    x = np.log(t)
    y = np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    series.fitted_slope = float(slope)
    series.fit_r2 = float(r2)
    return float(slope), float(r2)
