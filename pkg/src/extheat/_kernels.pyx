# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled tridiagonal kernels for the implicit radial march.

One march call advances the whole step schedule without returning to
Python, with a Thomas solve per step.  The systems are M-matrices
(diagonally dominant), so the pivot-free sweep is stable.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def solve_tridiag(double[::1] dl, double[::1] dd, double[::1] du, double[::1] rhs):
    """Solve a tridiagonal system; dl[0] and du[-1] are ignored."""
    cdef Py_ssize_t n = dd.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x_arr = np.empty(n)
    cdef double[::1] x = x_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cw_arr = np.empty(n)
    cdef double[::1] cw = cw_arr
    cdef Py_ssize_t i
    cdef double m, denom

    denom = dd[0]
    cw[0] = du[0] / denom
    x[0] = rhs[0] / denom
    for i in range(1, n):
        denom = dd[i] - dl[i] * cw[i - 1]
        if i < n - 1:
            cw[i] = du[i] / denom
        x[i] = (rhs[i] - dl[i] * x[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        x[i] = x[i] - cw[i] * x[i + 1]
    return x_arr


def march_be(double[::1] sl, double[::1] sd, double[::1] su, double[::1] w,
             double[::1] u_in, double[::1] dts, double[::1] outer_vals,
             int hole_dirichlet, int outer_dirichlet,
             Py_ssize_t probe_i, double probe_frac):
    """Backward-Euler march over the given step sizes.

    sl/sd/su hold the stiffness tridiagonal (boundary terms included);
    constraint rows replace the ends when the respective flag is set.
    Returns (u_final, probe_series) with one probe sample per step.
    """
    cdef Py_ssize_t n = sd.shape[0]
    cdef Py_ssize_t nsteps = dts.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u_arr = np.array(u_in, dtype=np.float64)
    cdef double[::1] u = u_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] probe_arr = np.empty(nsteps)
    cdef double[::1] probe = probe_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dd_arr = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cw_arr = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x_arr = np.empty(n)
    cdef double[::1] dd = dd_arr
    cdef double[::1] cw = cw_arr
    cdef double[::1] x = x_arr
    cdef Py_ssize_t k, i, lo, hi
    cdef double dt, inv_dt, denom, dlo, uplo

    for k in range(nsteps):
        dt = dts[k]
        inv_dt = 1.0 / dt
        for i in range(n):
            dd[i] = w[i] * inv_dt + sd[i]
            x[i] = w[i] * inv_dt * u[i]
        lo = 0
        if hole_dirichlet:
            dd[0] = 1.0
            x[0] = 0.0
        hi = n - 1
        if outer_dirichlet:
            dd[n - 1] = 1.0
            x[n - 1] = outer_vals[k]

        # Thomas sweep; constraint rows carry zero off-diagonals
        uplo = 0.0 if hole_dirichlet else su[0]
        cw[0] = uplo / dd[0]
        x[0] = x[0] / dd[0]
        for i in range(1, n):
            dlo = 0.0 if (outer_dirichlet and i == n - 1) else sl[i]
            denom = dd[i] - dlo * cw[i - 1]
            if i < n - 1:
                cw[i] = su[i] / denom
            x[i] = (x[i] - dlo * x[i - 1]) / denom
        for i in range(n - 2, -1, -1):
            x[i] = x[i] - cw[i] * x[i + 1]
        for i in range(n):
            u[i] = x[i]
        probe[k] = u[probe_i] * (1.0 - probe_frac) + u[probe_i + 1] * probe_frac

    return u_arr, probe_arr
