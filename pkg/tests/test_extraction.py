import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import resokit as rk
from conftest import draw_notch_params
from resokit import extraction as ex
from resokit.constants import FF, NH, TWO_PI
from resokit.errors import (DegenerateGeometryError, DomainError,
                            FitInstabilityError, InsufficientDataError,
                            NonphysicalQinError, RankDeficiencyError)
from resokit.refdata import INDUCTANCE_GEOMETRIC, REFERENCE_RESONATORS


def notch_trace(noise=0.0, seed=0, span=10.0, points=1001, **overrides):
    base = dict(f_r=7.3e9, q_loaded=3000.0, q_ext_mag=9000.0)
    base.update(overrides)
    p = rk.NotchParams(**base)
    return p, rk.synthesize_trace(p, rk.linewidth_grid(p, span, points),
                                  noise_sigma=noise, seed=seed)


class TestFitCircle:
    def test_exact_circle(self):
        theta = np.linspace(0.0, 2 * np.pi, 100, endpoint=False)
        z = 0.5 + 0.25 * np.exp(1j * theta)
        fit = ex.fit_circle(z)
        assert abs(fit.center - 0.5) < 1e-12
        assert abs(fit.radius - 0.25) < 1e-12
        assert fit.rms < 1e-12

    def test_three_points_determined(self):
        center, radius = 1.0 - 2.0j, 3.0
        z = center + radius * np.exp(1j * np.array([0.1, 2.0, 4.0]))
        fit = ex.fit_circle(z)
        assert abs(fit.center - center) < 1e-10
        assert abs(fit.radius - radius) < 1e-10

    def test_radial_noise_monte_carlo(self):
        # 200 points, radial sigma 0.01: estimator stays within 5e-3 of
        # the generating circle for every seed.
        theta = np.linspace(0.0, 2 * np.pi, 200, endpoint=False)
        for seed in range(100):
            rng = np.random.default_rng(seed)
            radii = 0.25 + 0.01 * rng.standard_normal(200)
            z = 0.5 + radii * np.exp(1j * theta)
            fit = ex.fit_circle(z)
            assert abs(fit.center - 0.5) < 5e-3
            assert abs(fit.radius - 0.25) < 5e-3

    def test_collinear_rejected(self):
        with pytest.raises(DegenerateGeometryError):
            ex.fit_circle(np.array([0 + 0j, 1 + 1j, 2 + 2j]))

    def test_coincident_rejected(self):
        with pytest.raises(DegenerateGeometryError):
            ex.fit_circle(np.full(5, 0.3 + 0.4j))

    def test_too_few_points(self):
        with pytest.raises(DegenerateGeometryError):
            ex.fit_circle(np.array([0 + 0j, 1 + 0j]))

    @given(rot=st.floats(min_value=-np.pi, max_value=np.pi),
           dx=st.floats(min_value=-5, max_value=5),
           dy=st.floats(min_value=-5, max_value=5))
    @settings(max_examples=30, deadline=None)
    def test_rms_invariant_under_rotation_translation(self, rot, dx, dy):
        rng = np.random.default_rng(17)
        theta = np.linspace(0.0, 2 * np.pi, 120, endpoint=False)
        z = 0.4 + (0.3 + 0.005 * rng.standard_normal(120)) * np.exp(1j * theta)
        base = ex.fit_circle(z)
        moved = ex.fit_circle(z * np.exp(1j * rot) + complex(dx, dy))
        assert moved.rms == pytest.approx(base.rms, rel=1e-6, abs=1e-12)
        assert moved.radius == pytest.approx(base.radius, rel=1e-9)


class TestEstimateDelay:
    def test_resonance_free_50ns(self):
        f = np.linspace(7.0e9, 7.1e9, 1001)
        z = 0.9 * np.exp(1j * (0.3 - TWO_PI * f * 50e-9))
        tau = ex.estimate_delay(rk.Trace(f, z))
        assert abs(tau / 50e-9 - 1.0) < 0.01

    def test_resonance_free_noisy(self):
        rng = np.random.default_rng(3)
        f = np.linspace(7.0e9, 7.1e9, 1001)
        z = 0.9 * np.exp(1j * (0.3 - TWO_PI * f * 50e-9)) \
            + 0.003 * (rng.standard_normal(1001)
                       + 1j * rng.standard_normal(1001))
        tau = ex.estimate_delay(rk.Trace(f, z))
        assert abs(tau / 50e-9 - 1.0) < 0.01

    def test_zero_delay_noiseless(self):
        _, trace = notch_trace()
        assert abs(ex.estimate_delay(trace)) < 1e-12

    def test_notch_30ns_under_noise(self):
        _, trace = notch_trace(noise=0.003, seed=7, cable_delay=30e-9)
        tau = ex.estimate_delay(trace)
        assert abs(tau / 30e-9 - 1.0) < 0.02

    def test_correction_leaves_small_residual(self):
        p, trace = notch_trace(cable_delay=42e-9)
        tau = ex.estimate_delay(trace)
        assert abs(tau - 42e-9) < 0.01 * 42e-9

    def test_too_few_points(self):
        f = np.linspace(7.0e9, 7.1e9, 5)
        with pytest.raises(InsufficientDataError):
            ex.estimate_delay(rk.Trace(f, np.ones(5, dtype=complex)))


class TestFitPhase:
    def phase_trace(self, f_r=7.3e9, q_l=3000.0, theta0=0.2, noise=0.0,
                    seed=0, points=1001):
        f = np.linspace(f_r * (1 - 10 / q_l), f_r * (1 + 10 / q_l), points)
        theta = theta0 + 2.0 * np.arctan(2.0 * q_l * (1.0 - f / f_r))
        if noise:
            rng = np.random.default_rng(seed)
            theta = theta + noise * rng.standard_normal(points)
        return rk.Trace(f, np.exp(1j * theta))

    def test_noiseless_exact(self):
        trace = self.phase_trace()
        fit = ex.fit_phase(trace, 0j)
        assert abs(fit.f_r / 7.3e9 - 1.0) < 1e-9
        assert abs(fit.q_loaded / 3000.0 - 1.0) < 1e-9
        assert abs(fit.theta0 - 0.2) < 1e-9

    def test_on_resonance_value_is_theta0(self):
        fit = ex.fit_phase(self.phase_trace(), 0j)
        model_at_fr = fit.theta0 + 2 * math.atan(2 * fit.q_loaded
                                                 * (1 - fit.f_r / fit.f_r))
        assert model_at_fr == fit.theta0

    def test_slope_at_resonance(self):
        fit = ex.fit_phase(self.phase_trace(), 0j)
        df = 1.0
        model = lambda f: fit.theta0 + 2 * math.atan(
            2 * fit.q_loaded * (1 - f / fit.f_r))
        slope = (model(fit.f_r + df) - model(fit.f_r - df)) / (2 * df)
        assert slope == pytest.approx(-4 * fit.q_loaded / fit.f_r, rel=1e-6)

    def test_noisy_recovery(self):
        for seed in range(5):
            trace = self.phase_trace(noise=0.02, seed=seed)
            fit = ex.fit_phase(trace, 0j)
            assert abs(fit.f_r / 7.3e9 - 1.0) < 1e-6
            assert abs(fit.q_loaded / 3000.0 - 1.0) < 0.05

    def test_windingless_data_rejected(self):
        rng = np.random.default_rng(1)
        f = np.linspace(7.0e9, 7.1e9, 200)
        z = 1.0 + 0.01 * (rng.standard_normal(200)
                          + 1j * rng.standard_normal(200))
        with pytest.raises(FitInstabilityError):
            ex.fit_phase(rk.Trace(f, z), complex(np.mean(z)))


class TestExtractQFactors:
    def canonical(self, q_l=3000.0, q_e=9000.0, phi=0.0):
        radius = q_l / (2 * q_e)
        center = 1.0 - radius * np.exp(1j * phi)
        circle = ex.CircleFit(center=center, radius=radius, rms=0.0,
                              n_points=100)
        phase = ex.PhaseFit(f_r=7.3e9, q_loaded=q_l, theta0=phi + math.pi,
                            f_r_err=0.0, q_loaded_err=0.0, theta0_err=0.0,
                            converged=True, residual_norm=0.0)
        env = ex.EnvironmentParams(gain=1.0, phase=0.0, delay=0.0)
        return circle, phase, env

    def test_table_row1_qin(self):
        result = ex.extract_qfactors(*self.canonical())
        assert result.q_internal == pytest.approx(4500.0, rel=1e-12)
        assert result.params.q_ext_mag == pytest.approx(9000.0, rel=1e-12)

    def test_decoupled_limit(self):
        result = ex.extract_qfactors(*self.canonical(q_e=9e8))
        assert result.q_internal == pytest.approx(3000.0, rel=1e-4)

    def test_mismatch_angle_recovered(self):
        result = ex.extract_qfactors(*self.canonical(phi=0.27))
        assert result.params.mismatch_phi == pytest.approx(0.27, abs=1e-12)

    def test_nonphysical_flagged(self):
        circle, phase, env = self.canonical(q_l=3000.0, q_e=2000.0)
        with pytest.raises(NonphysicalQinError):
            ex.extract_qfactors(circle, phase, env)


class TestFitNotch:
    def test_noiseless_fixed_point(self):
        p, trace = notch_trace(mismatch_phi=0.2, env_gain=0.8,
                               env_phase=1.1, cable_delay=40e-9)
        res = rk.fit_notch(trace)
        assert res.converged
        assert abs(res.params.f_r / p.f_r - 1.0) < 1e-9
        assert abs(res.params.q_loaded / p.q_loaded - 1.0) < 1e-9
        assert abs(res.params.q_ext_mag / p.q_ext_mag - 1.0) < 1e-9
        assert abs(res.q_internal / p.q_internal - 1.0) < 1e-9

    def test_roundtrip_under_noise(self, rng):
        hits = 0
        for seed in range(40):
            p, q_in = draw_notch_params(rng)
            trace = rk.synthesize_trace(p, rk.linewidth_grid(p, 5.0, 2001),
                                        noise_sigma=0.003, seed=seed)
            res = rk.fit_notch(trace)
            ok = (abs(res.params.f_r / p.f_r - 1.0) < 1e-6
                  and abs(res.q_internal / q_in - 1.0) < 0.05
                  and abs(res.params.q_loaded / p.q_loaded - 1.0) < 0.05
                  and abs(res.params.q_ext_mag / p.q_ext_mag - 1.0) < 0.05)
            hits += ok
        # Subsample of the full 200-seed acceptance gate; small-N
        # fluctuation gets one extra miss of slack.
        assert hits >= 36

    def test_consistency_identity_exact(self, rng):
        # 1/Q_in = 1/Q_l - cos(phi)/|Q_e| holds to machine precision
        # among the reported values, by construction.
        for seed in range(10):
            p, _ = draw_notch_params(rng)
            trace = rk.synthesize_trace(p, rk.linewidth_grid(p, 6.0, 801),
                                        noise_sigma=0.002, seed=seed)
            res = rk.fit_notch(trace)
            lhs = 1.0 / res.q_internal
            rhs = 1.0 / res.params.q_loaded \
                - math.cos(res.params.mismatch_phi) / res.params.q_ext_mag
            assert lhs == pytest.approx(rhs, rel=1e-14)

    def test_pure_baseline_rejected(self):
        rng = np.random.default_rng(8)
        f = np.linspace(7.0e9, 7.1e9, 500)
        z = 0.9 + 0.005 * (rng.standard_normal(500)
                           + 1j * rng.standard_normal(500))
        with pytest.raises(FitInstabilityError):
            rk.fit_notch(rk.Trace(f, z))

    def test_too_few_points(self):
        f = np.linspace(7.0e9, 7.1e9, 6)
        with pytest.raises(InsufficientDataError):
            rk.fit_notch(rk.Trace(f, np.ones(6, dtype=complex)))

    def test_uncertainties_cover_truth(self, rng):
        p, q_in = draw_notch_params(rng)
        trace = rk.synthesize_trace(p, rk.linewidth_grid(p, 5.0, 2001),
                                    noise_sigma=0.003, seed=99)
        res = rk.fit_notch(trace)
        err = res.uncertainties
        assert abs(res.params.f_r - p.f_r) < 5 * err["f_r"] + 1e-3
        assert abs(res.q_internal - q_in) < 5 * err["q_internal"] + 1e-6

    def test_bootstrap_uncertainties_match_first_order(self):
        p, trace = notch_trace(noise=0.004, seed=21, points=601, span=6.0)
        first_order = rk.fit_notch(trace)
        bootstrap = rk.fit_notch(trace, mc_draws=12, mc_seed=7)
        # Same point estimate, resampled error bars of the same scale.
        assert bootstrap.params.f_r == first_order.params.f_r
        ratio = bootstrap.uncertainties["q_internal"] \
            / first_order.uncertainties["q_internal"]
        assert 0.3 < ratio < 3.0


class TestFrequencyVsArea:
    def reference_dataset(self):
        rows = tuple((r.area_um2, r.freq_hz) for r in REFERENCE_RESONATORS)
        return ex.AreaFrequencyDataset(rows=rows,
                                       inductance=INDUCTANCE_GEOMETRIC)

    def test_reference_chip_constants(self):
        fit = ex.fit_frequency_vs_area(self.reference_dataset())
        assert 13.5 * FF < fit.cap_per_area < 14.2 * FF
        assert 25 * FF < fit.cap_to_ground < 42 * FF
        assert fit.converged

    def test_reference_chip_uncertainties(self):
        fit = ex.fit_frequency_vs_area(self.reference_dataset())
        assert 0.05 * FF < fit.cap_per_area_err < 0.5 * FF
        assert 2 * FF < fit.cap_to_ground_err < 12 * FF

    def test_exact_recovery(self):
        c_t, cg_t, ind = 15 * FF, 40 * FF, 0.3 * NH
        rows = tuple(
            (s, 1.0 / (TWO_PI * math.sqrt(ind * (cg_t + c_t * s))))
            for s in (30.0, 60.0, 90.0, 120.0))
        fit = ex.fit_frequency_vs_area(
            ex.AreaFrequencyDataset(rows=rows, inductance=ind))
        assert abs(fit.cap_per_area / c_t - 1.0) < 1e-10
        assert abs(fit.cap_to_ground / cg_t - 1.0) < 1e-10

    def test_two_rows_match_closed_form(self):
        # Hand elimination: y_i = 1/(4 pi^2 f_i^2 L) = C_g + c S_i,
        # c = (y1 - y2)/(S1 - S2), C_g = y1 - c S1.
        ind = 0.3 * NH
        rows = ((40.0, 9.1e9), (110.0, 7.2e9))
        fit = ex.fit_frequency_vs_area(
            ex.AreaFrequencyDataset(rows=rows, inductance=ind))
        y = [1.0 / ((TWO_PI * f) ** 2 * ind) for _, f in rows]
        c_hand = (y[0] - y[1]) / (rows[0][0] - rows[1][0])
        cg_hand = y[0] - c_hand * rows[0][0]
        assert abs(fit.cap_per_area / c_hand - 1.0) < 1e-9
        assert abs(fit.cap_to_ground / cg_hand - 1.0) < 1e-9

    def test_row_order_invariance(self):
        fit_a = ex.fit_frequency_vs_area(self.reference_dataset())
        rows = tuple((r.area_um2, r.freq_hz)
                     for r in reversed(REFERENCE_RESONATORS))
        fit_b = ex.fit_frequency_vs_area(
            ex.AreaFrequencyDataset(rows=rows, inductance=INDUCTANCE_GEOMETRIC))
        assert fit_a.cap_per_area == pytest.approx(fit_b.cap_per_area,
                                                   rel=1e-10)
        assert fit_a.cap_to_ground == pytest.approx(fit_b.cap_to_ground,
                                                    rel=1e-10)

    def test_duplicate_areas_rejected(self):
        with pytest.raises(DomainError):
            ex.AreaFrequencyDataset(rows=((30.0, 9e9), (30.0, 8e9)),
                                    inductance=0.3 * NH)


class TestCapacitanceVsArea:
    def synthetic_rows(self, noise=0.0, seed=0):
        rng = np.random.default_rng(seed)
        slope = 22 * FF
        offsets = {"a": 50 * FF, "b": 80 * FF, "c": 120 * FF}
        rows = []
        for group, offset in offsets.items():
            for area in (100.0, 400.0, 900.0, 1600.0, 2500.0):
                cap = slope * area + offset
                if noise:
                    cap *= 1.0 + noise * rng.standard_normal()
                rows.append((area, cap, group))
        return rows, slope, offsets

    def test_noisy_shared_slope(self):
        # 1 percent multiplicative noise on picofarad-scale readings
        # swamps the femtofarad offsets; only the shared slope carries a
        # tight contract here.
        rows, slope, offsets = self.synthetic_rows(noise=0.01, seed=4)
        fit = ex.fit_capacitance_vs_area(rows)
        assert abs(fit.cap_per_area - slope) < 0.5 * FF
        for group in offsets:
            assert abs(fit.offsets[group]) < 1e-12

    def test_noiseless_exact(self):
        rows, slope, offsets = self.synthetic_rows()
        fit = ex.fit_capacitance_vs_area(rows)
        assert abs(fit.cap_per_area / slope - 1.0) < 1e-12
        for group, offset in offsets.items():
            assert abs(fit.offsets[group] / offset - 1.0) < 1e-10

    def test_zero_area_rows_pin_offsets(self):
        rows = [(0.0, 50 * FF, "a"), (100.0, 2250 * FF, "a"),
                (0.0, 80 * FF, "b"), (200.0, 4480 * FF, "b")]
        fit = ex.fit_capacitance_vs_area(rows)
        assert fit.offsets["a"] == pytest.approx(50 * FF, rel=1e-10)
        assert fit.offsets["b"] == pytest.approx(80 * FF, rel=1e-10)

    def test_constant_area_group_rejected(self):
        rows = [(100.0, 2.2e-12, "a"), (100.0, 2.3e-12, "a"),
                (50.0, 1.2e-12, "b"), (150.0, 3.4e-12, "b")]
        with pytest.raises(RankDeficiencyError):
            ex.fit_capacitance_vs_area(rows)
