import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from extheat import ConfigurationError, SolverParams, ThetaBC, gaussian_ball_mass
from extheat.complexity import (
    AnnuliData,
    EnvelopeFn,
    alternate_pad,
    annuli_initial_field,
    build_annuli,
    find_mass_window,
    perturbed_radii,
    probe_series_freespace,
    shell_mass_window,
    verify_annuli,
    _is_alternating,
)

ENV = EnvelopeFn(constant=0.2, form="logsqrt", profile_at_probe=0.5)


class TestEnvelope:
    def test_positive_decreasing(self):
        ts = np.linspace(1.0, 1e6, 500)
        vals = ENV(ts)
        assert np.all(vals > 0)
        assert np.all(np.diff(vals) <= 0)

    def test_sqrt_form(self):
        env = EnvelopeFn(constant=1.0, form="sqrt", profile_at_probe=0.25)
        assert env(4.0) == pytest.approx(2.0)  # (1/sqrt(4)) / 0.25

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            EnvelopeFn(constant=0.0, form="sqrt", profile_at_probe=0.5)
        with pytest.raises(ConfigurationError):
            EnvelopeFn(constant=1.0, form="cubic", profile_at_probe=0.5)
        with pytest.raises(ConfigurationError):
            EnvelopeFn(constant=1.0, form="sqrt", profile_at_probe=0.0)


class TestShellMassWindow:
    def test_full_window_is_one(self):
        assert shell_mass_window(2.0, 1e-9, 1e4, 1.0, 3) == pytest.approx(1.0, abs=1e-9)

    def test_fixed_window_flattens(self):
        # the kernel flattens as t grows, so a fixed window loses its mass
        vals = [shell_mass_window(2.0, 3.0, 6.0, t, 3) for t in (1.0, 10.0, 1e3, 1e6)]
        assert vals[0] > vals[-1]
        assert vals[-1] <= 1e-3

    def test_central_window_chi3(self):
        from scipy.stats import chi

        t = 0.9
        got = shell_mass_window(0.0, math.sqrt(2 * t), 3 * math.sqrt(2 * t), t, 3)
        want = chi(3).cdf(3.0) - chi(3).cdf(1.0)
        assert got == pytest.approx(want, abs=1e-12)

    def test_monte_carlo_window(self):
        rng = np.random.default_rng(31415)
        d, lo, hi, t = 1.0, 2.0, 4.0, 0.8
        pts = rng.standard_normal((1_000_000, 3)) * math.sqrt(2 * t)
        pts[:, 0] += d
        radii = np.linalg.norm(pts, axis=1)
        mc = float(np.mean((radii >= lo) & (radii <= hi)))
        assert shell_mass_window(d, lo, hi, t, 3) == pytest.approx(mc, abs=3e-3)

    def test_degenerate_window_rejected(self):
        with pytest.raises(ValueError):
            shell_mass_window(1.0, 2.0, 2.0, 1.0, 3)


class TestFindMassWindow:
    def test_returns_verified_pair(self):
        t, r_tilde = find_mass_window(0.5, 2.0, 1.0, 5.0, 3)
        assert t > 1.0 and r_tilde > 5.0
        assert gaussian_ball_mass(2.0, 5.0, t, 3) <= 0.25
        assert 1.0 - gaussian_ball_mass(2.0, r_tilde, t, 3) <= 0.25

    def test_weak_constraint_stays_near_t_min(self):
        t, _ = find_mass_window(0.95, 2.0, 1.0, 0.5, 3)
        assert 1.0 < t <= 4.0

    def test_large_radius_forces_large_time(self):
        t, r_tilde = find_mass_window(0.3, 2.0, 0.1, 50.0, 3)
        assert gaussian_ball_mass(2.0, 50.0, t, 3) <= 0.15
        assert t > 100.0  # the mass inside r=50 only drops once sqrt(t) ~ 50

    def test_bad_epsilon(self):
        with pytest.raises(ValueError):
            find_mass_window(0.0, 2.0, 1.0, 5.0, 3)
        with pytest.raises(ValueError):
            find_mass_window(1.0, 2.0, 1.0, 5.0, 3)

    @pytest.mark.parametrize("dim", [3, 4])
    def test_randomised_rechecked_at_double_resolution(self, dim, rng):
        for _ in range(10):
            eps = rng.uniform(0.05, 0.5)
            d = rng.uniform(1.5, 10.0)
            t_min = rng.uniform(0.1, 10.0)
            radius = rng.uniform(1.5, 25.0)
            t, r_tilde = find_mass_window(eps, d, t_min, radius, dim)
            assert gaussian_ball_mass(d, radius, t, dim, order=64) <= eps / 2 + 1e-12
            assert 1 - gaussian_ball_mass(d, r_tilde, t, dim, order=64) <= eps / 2 + 1e-12


class TestAlternatePad:
    def test_already_alternating_unchanged(self):
        assert alternate_pad([0.3, 0.7, 0.2]) == [0.3, 0.7, 0.2]

    def test_descending_pair_gets_high_pad(self):
        assert alternate_pad([0.2, 0.1]) == [0.2, 0.6, 0.1]

    def test_singleton(self):
        assert alternate_pad([0.5]) == [0.5]

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            alternate_pad([0.5, 1.0])
        with pytest.raises(ValueError):
            alternate_pad([0.0])
        with pytest.raises(ValueError):
            alternate_pad([])

    @given(st.lists(st.floats(min_value=0.01, max_value=0.99), min_size=1, max_size=12))
    @settings(max_examples=200, deadline=None)
    def test_alternation_and_subsequence(self, targets):
        out = alternate_pad(targets)
        assert _is_alternating(out)
        assert all(0 < x < 1 for x in out)
        it = iter(out)
        assert all(any(x == y for y in it) for x in targets)  # order-preserving subsequence


class TestBuildAnnuli:
    def test_canonical_targets(self):
        data = build_annuli([0.3, 0.7], 2.0, ThetaBC(0.0), 3, ENV)
        assert data.targets == [0.3, 0.7, 0.35]
        assert len(data.radii) == 4
        assert len(data.times) == 3
        assert np.all(np.diff(data.radii) > 0)
        assert np.all(np.diff(data.times) > 0)
        report = verify_annuli(data)
        assert report.passed_freespace

    def test_constant_targets_terminate(self):
        data = build_annuli([0.5, 0.5], 2.0, ThetaBC(0.0), 3, ENV)
        assert verify_annuli(data).passed_freespace

    def test_neumann_uses_unit_profile(self):
        env = EnvelopeFn(constant=0.2, form="logsqrt", profile_at_probe=1.0)
        data = build_annuli([0.4], 2.0, ThetaBC(1.0), 3, env)
        assert verify_annuli(data).passed_freespace

    def test_rejects_vanishing_profile(self):
        with pytest.raises(ConfigurationError):
            build_annuli([0.4], 2.0, ThetaBC(0.0), 2, ENV)

    def test_initial_field_is_unit_indicator(self, grid_n3_wide):
        data = AnnuliData(
            dim=3, theta=0.0, hole_radius=1.0, probe_radius=2.0,
            radii=[1.1, 5.0, 9.0], times=[10.0, 20.0], targets=[0.3, 0.7],
            envelope_constant=0.2, envelope_form="logsqrt", profile_at_probe=0.5,
        )
        u0 = annuli_initial_field(data, grid_n3_wide)
        assert np.max(u0.values) == 1.0
        inside = (grid_n3_wide.nodes > 5.5) & (grid_n3_wide.nodes < 8.5)
        assert np.all(u0.values[inside] == 1.0)
        outside = grid_n3_wide.nodes < 4.5
        assert np.all(u0.values[outside] == 0.0)


@pytest.fixture(scope="module")
def data():
    return build_annuli([0.3, 0.7], 2.0, ThetaBC(0.0), 3, ENV)


class TestVerifyAnnuli:

    def test_negative_radius_perturbation_fails(self, data):
        # shrinking the last odd (tail-cut) radius inflates the tail mass
        bad = perturbed_radii(data, len(data.radii) - 1, 0.9)
        report = verify_annuli(bad)
        assert not report.passed_freespace
        failing = [r.name for r in report.records if not r.passed]
        assert any(name.startswith("window_low") for name in failing)

    def test_trivial_data_zero_series(self):
        data = AnnuliData(
            dim=3, theta=0.0, hole_radius=1.0, probe_radius=2.0,
            radii=[1.1, 50.0], times=[100.0], targets=[0.3],
            envelope_constant=0.01, envelope_form="logsqrt", profile_at_probe=0.5,
        )
        assert data.annuli_pairs() == []
        assert probe_series_freespace(data, 100.0) == 0.0
        report = verify_annuli(data)
        assert any(r.name == "series_low_1" for r in report.records)

    def test_serialisation_roundtrip_reproducible(self, data):
        clone = AnnuliData.from_json(data.to_json())
        r1 = verify_annuli(data)
        r2 = verify_annuli(clone)
        assert [rec.passed for rec in r1.records] == [rec.passed for rec in r2.records]
        assert [rec.margin for rec in r1.records] == [rec.margin for rec in r2.records]

    def test_report_json(self, data):
        import json

        report = verify_annuli(data)
        doc = json.loads(report.to_json())
        assert doc["passed_freespace"] is True
        assert len(doc["records"]) == 2 * len(data.times)

    def test_with_solver_crossings(self, data):
        report = verify_annuli(data, with_solver=True)
        assert report.passed
        assert all(c["passed"] for c in report.solver_checks)
        assert len(report.crossings) == 2
        for c in report.crossings:
            assert c["found"]
            assert c["interval"][0] <= c["crossing_time"] <= c["interval"][1]

    def test_unaffordable_grid_gives_flagged_partial_verification(self, data):
        report = verify_annuli(data, with_solver=True, grid_cell_cap=50)
        assert report.passed_freespace
        assert report.passed  # degraded, not failed
        assert report.solver_checks == []
        assert any("partial" in flag for flag in report.flags)

    def test_invariants_enforced(self):
        with pytest.raises(ConfigurationError):
            AnnuliData(dim=3, theta=0.0, hole_radius=1.0, probe_radius=2.0,
                       radii=[1.1, 5.0, 4.0], times=[1.0, 2.0], targets=[0.3, 0.7],
                       envelope_constant=0.1, envelope_form="logsqrt",
                       profile_at_probe=0.5)
        with pytest.raises(ConfigurationError):
            AnnuliData(dim=3, theta=0.0, hole_radius=1.0, probe_radius=2.0,
                       radii=[1.1, 5.0, 9.0], times=[2.0, 1.0], targets=[0.3, 0.7],
                       envelope_constant=0.1, envelope_form="logsqrt",
                       profile_at_probe=0.5)
        with pytest.raises(ConfigurationError):
            AnnuliData(dim=3, theta=0.0, hole_radius=1.0, probe_radius=2.0,
                       radii=[1.1, 5.0, 9.0], times=[1.0, 2.0], targets=[0.7, 0.3],
                       envelope_constant=0.1, envelope_form="logsqrt",
                       profile_at_probe=0.5)
