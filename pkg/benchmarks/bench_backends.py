#!/usr/bin/env python3
"""Benchmark the compiled march kernel against the scipy fallback.

Times a representative backward-Euler march (radial heat step schedule)
at several grid sizes and prints the per-backend timings and speedup.
Run:  python3 benchmarks/bench_backends.py
"""

import time

import numpy as np

from extheat import _kernels_py
from extheat.core import DomainSpec, RadialField, ThetaBC, make_radial_grid
from extheat.solver import _Discretization

try:
    from extheat import _kernels

    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False


def march_inputs(n_cells, n_steps=400):
    grid = make_radial_grid(
        DomainSpec(dim=3, hole_radius=1.0, outer_radius=200.0, n_cells=n_cells)
    )
    disc = _Discretization(grid, ThetaBC(0.3), "homogeneous_neumann")
    rng = np.random.default_rng(0)
    u0 = np.abs(rng.standard_normal(grid.nodes.size))
    dts = 1e-3 * 1.02 ** np.arange(n_steps)
    outer = np.zeros(n_steps)
    return disc, grid, u0, dts, outer


def time_backend(impl, disc, grid, u0, dts, outer, repeats=5):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = impl.march_be(
            disc.sl, disc.sd, disc.su, grid.weights, u0, dts, outer, 0, 0, 0, 0.0
        )
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    print(f"compiled extension available: {HAVE_COMPILED}")
    print(f"{'n_cells':>8} {'steps':>6} {'python (s)':>12} {'compiled (s)':>13} {'speedup':>8}")
    for n_cells in (500, 2000, 8000, 32000):
        disc, grid, u0, dts, outer = march_inputs(n_cells)
        t_py, r_py = time_backend(_kernels_py, disc, grid, u0, dts, outer)
        if HAVE_COMPILED:
            t_c, r_c = time_backend(_kernels, disc, grid, u0, dts, outer)
            err = float(np.max(np.abs(r_py[0] - r_c[0])))
            assert err < 1e-10, f"backend mismatch: {err}"
            print(f"{n_cells:>8} {dts.size:>6} {t_py:>12.4f} {t_c:>13.4f} {t_py / t_c:>8.2f}")
        else:
            print(f"{n_cells:>8} {dts.size:>6} {t_py:>12.4f} {'-':>13} {'-':>8}")


if __name__ == "__main__":
    main()
