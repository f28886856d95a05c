"""Pure-Python march kernels, numerically interchangeable with the
compiled extension (same schemes, LAPACK banded solves instead of the
hand-rolled Thomas sweep).

Rows are equilibrated before the banded solve: the radial stiffness
coefficients span many orders of magnitude and partial pivoting across
unscaled rows loses ~1e-6 on steep-coefficient systems.
"""

import numpy as np
from scipy.linalg import solve_banded


def _row_scales(dl, dd, du):
    s = np.abs(dd).copy()
    s[1:] = np.maximum(s[1:], np.abs(dl[1:]))
    s[:-1] = np.maximum(s[:-1], np.abs(du[:-1]))
    s[s == 0.0] = 1.0
    return s


def solve_tridiag(dl, dd, du, rhs):
    """Solve a tridiagonal system; dl[0] and du[-1] are ignored."""
    n = dd.shape[0]
    s = _row_scales(dl, dd, du)
    ab = np.zeros((3, n))
    ab[0, 1:] = du[:-1] / s[:-1]
    ab[1, :] = dd / s
    ab[2, :-1] = dl[1:] / s[1:]
    return solve_banded((1, 1), ab, rhs / s)


def march_be(sl, sd, su, w, u_in, dts, outer_vals,
             hole_dirichlet, outer_dirichlet, probe_i, probe_frac):
    """Backward-Euler march over the given step sizes (see compiled twin)."""
    n = sd.shape[0]
    u = np.array(u_in, dtype=float)
    probe = np.empty(dts.shape[0])
    dl = sl.copy()
    du = su.copy()
    if hole_dirichlet:
        du[0] = 0.0
    if outer_dirichlet:
        dl[n - 1] = 0.0
    ab = np.zeros((3, n))
    rhs = np.empty(n)
    for k, dt in enumerate(dts):
        dd = w / dt + sd
        rhs[:] = (w / dt) * u
        if hole_dirichlet:
            dd[0] = 1.0
            rhs[0] = 0.0
        if outer_dirichlet:
            dd[n - 1] = 1.0
            rhs[n - 1] = outer_vals[k]
        s = _row_scales(dl, dd, du)
        ab[0, 1:] = du[:-1] / s[:-1]
        ab[1, :] = dd / s
        ab[2, :-1] = dl[1:] / s[1:]
        u = solve_banded((1, 1), ab, rhs / s)
        probe[k] = u[probe_i] * (1.0 - probe_frac) + u[probe_i + 1] * probe_frac
    return u, probe
