import math

import numpy as np
import pytest

from extheat import (
    DomainSpec,
    RadialField,
    SolverParams,
    ThetaBC,
    ball_masses,
    indicator_shell,
    make_radial_grid,
    omega_mass,
)
from extheat.asymptotics import (
    asymptotic_mass_experiment,
    dyadic_times,
    far_field_closeness,
    lacunary_annuli_field,
    linfty_rate_experiment,
    lp_decay_experiment,
    slow_decay_demo,
)

BE = SolverParams(dt_initial=1e-3, dt_growth=1.04)


def test_dyadic_times():
    got = dyadic_times(1.0, 16.0)
    np.testing.assert_allclose(got, [1.0, 2.0, 4.0, 8.0, 16.0])


class TestMassExperiment:
    def test_neumann_exact_mass(self, grid_n3_small):
        u0 = indicator_shell(grid_n3_small, 2.0, 3.0)
        params = SolverParams(dt_initial=1e-3, dt_growth=1.04,
                              outer_bc="homogeneous_neumann")
        report = asymptotic_mass_experiment(u0, ThetaBC(1.0), dyadic_times(0.5, 8.0),
                                            params, rel_tol=1e-6)
        assert report.passed
        assert report.details["relative_gap"] <= 1e-6
        assert report.details["target_mass"] == pytest.approx(omega_mass(u0), rel=1e-12)

    def test_zero_data(self, grid_n3_small):
        u0 = RadialField(grid=grid_n3_small, values=np.zeros_like(grid_n3_small.nodes))
        report = asymptotic_mass_experiment(u0, ThetaBC(0.0), [1.0, 2.0], BE)
        assert report.details["target_mass"] == 0.0
        assert np.all(report.details["masses"] == 0.0)

    def test_dirichlet_short_horizon_monotone(self, grid_n3_wide):
        u0 = indicator_shell(grid_n3_wide, 2.0, 3.0)
        report = asymptotic_mass_experiment(u0, ThetaBC(0.0), dyadic_times(0.5, 32.0),
                                            BE, rel_tol=1.0)
        assert report.details["monotone"]
        # the predicted limit integrates the data against the profile
        expect = 4 * math.pi * (3**3 / 3 - 3**2 / 2 - (2**3 / 3 - 2**2 / 2))
        # nodal quadrature of u0 * Phi carries O(h^2) edge error
        assert report.details["target_mass"] == pytest.approx(expect, rel=1e-5)


class TestFarField:
    def test_zero_data(self, grid_n3_small):
        u0 = RadialField(grid=grid_n3_small, values=np.zeros_like(grid_n3_small.nodes))
        report = far_field_closeness(u0, ThetaBC(0.5), [5.0, 10.0], [1.0, 2.0], BE)
        assert report.passed
        assert np.all(report.details["sup_per_probe"] == 0.0)

    @pytest.mark.parametrize("theta", [0.0, 1.0])
    def test_far_probes_close_to_freespace(self, theta, grid_n3_wide):
        u0 = indicator_shell(grid_n3_wide, 2.0, 3.0)
        params = SolverParams(dt_initial=1e-4, dt_growth=1.04)
        report = far_field_closeness(u0, ThetaBC(theta), [5.0, 10.0, 20.0],
                                     dyadic_times(0.25, 64.0), params, epsilon=0.05)
        assert report.passed
        assert report.details["non_increasing"]
        assert report.details["sup_per_probe"][-1] <= 0.05


class TestRateExperiment:
    def test_lacunary_field_shapes(self, grid_n3_wide):
        field, spans = lacunary_annuli_field(grid_n3_wide)
        assert np.max(field.values) == 1.0
        assert np.min(field.values) == 0.0
        for (lo1, hi1), (lo2, hi2) in zip(spans, spans[1:]):
            assert hi1 < lo2

    def test_neumann_constant_data_zero_metric(self, grid_n3_small):
        # theta = 1 with u0 = 1 on all of R^N: both sides are exactly 1
        u0 = RadialField(grid=grid_n3_small, values=np.ones_like(grid_n3_small.nodes))
        reference = lambda elapsed, rr: np.ones_like(np.asarray(rr, dtype=float))
        report = linfty_rate_experiment(u0, ThetaBC(1.0), dyadic_times(1.0, 16.0),
                                        SolverParams(dt_initial=1e-3, dt_growth=1.05,
                                                     outer_bc="homogeneous_neumann"),
                                        reference=reference)
        assert np.all(report.series.values <= 1e-12)

    def test_constant_data_rate_n3(self):
        # exact solution: metric sup_r (a/r) erf((r-a)/sqrt(4t)) ~ C/sqrt(t)
        grid = make_radial_grid(
            DomainSpec(dim=3, hole_radius=1.0, outer_radius=300.0, n_cells=1500, stretch=1.005)
        )
        u0 = RadialField(grid=grid, values=np.ones_like(grid.nodes))
        ref = lambda e, rr: 1.0 - ball_masses(np.asarray(rr, dtype=float), 1.0, e, 3)
        report = linfty_rate_experiment(u0, ThetaBC(0.0), dyadic_times(10.0, 1280.0),
                                        SolverParams(dt_initial=1e-3, dt_growth=1.04),
                                        slope_window=(-0.55, -0.35), reference=ref)
        assert report.passed
        assert report.details["slope"] == pytest.approx(-0.5, abs=0.06)


class TestLpDecay:
    def test_zero_data(self, grid_n3_small):
        u0 = RadialField(grid=grid_n3_small, values=np.zeros_like(grid_n3_small.nodes))
        report = lp_decay_experiment(u0, 2.0, 2.0, ThetaBC(0.0), [1.0, 2.0], BE)
        assert report.passed
        assert np.all(report.series.values == 0.0)

    def test_validation(self, grid_n3_small):
        u0 = indicator_shell(grid_n3_small, 2.0, 3.0)
        from extheat import ConfigurationError

        with pytest.raises(ConfigurationError):
            lp_decay_experiment(u0, 1.0, 2.0, ThetaBC(0.0), [1.0], BE)
        with pytest.raises(ConfigurationError):
            lp_decay_experiment(u0, 3.0, 2.0, ThetaBC(0.0), [1.0], BE)

    def test_l2_decays_over_medium_horizon(self, grid_n3_wide):
        u0 = indicator_shell(grid_n3_wide, 2.0, 3.0)
        report = lp_decay_experiment(u0, 2.0, 2.0, ThetaBC(0.0),
                                     dyadic_times(1.0, 128.0), BE, drop_factor=10.0)
        assert report.passed


class TestSlowDecay:
    def test_norms_stay_above_envelope(self):
        grid = make_radial_grid(
            DomainSpec(dim=3, hole_radius=1.0, outer_radius=220.0, n_cells=1400, stretch=1.004)
        )
        report, series = slow_decay_demo(grid, 2.0, ThetaBC(0.0), BE, n_shells=3)
        assert report.passed
        assert np.all(series.values >= report.details["envelope"])
        # the far shells keep the norm an order of magnitude above g
        assert series.values[-1] >= 10 * report.details["envelope"][-1]

    def test_too_small_grid_rejected(self, grid_n3_small):
        from extheat import ConfigurationError

        with pytest.raises(ConfigurationError):
            slow_decay_demo(grid_n3_small, 2.0, ThetaBC(0.0), BE, n_shells=3)


class TestReportWriting:
    def test_write_outputs(self, grid_n3_small, tmp_path):
        u0 = indicator_shell(grid_n3_small, 2.0, 3.0)
        params = SolverParams(dt_initial=1e-3, dt_growth=1.05,
                              outer_bc="homogeneous_neumann")
        report = asymptotic_mass_experiment(u0, ThetaBC(1.0), [1.0, 2.0], params,
                                            rel_tol=1e-6)
        paths = report.write(tmp_path)
        assert all(p.endswith((".csv", ".json")) for p in paths)
        csv_text = (tmp_path / "mass.csv").read_text().splitlines()
        assert csv_text[0] == "t,value"
        import json

        doc = json.loads((tmp_path / "mass.json").read_text())
        assert doc["passed"] is True
        assert doc["name"] == "mass"
