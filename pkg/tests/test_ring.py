"""Ring-model unit tests: coupling rates, moments, and variance formulas."""

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ringsqueeze import (
    MomentSpectrum,
    PumpDrive,
    RingParams,
    ThresholdSingularityError,
    dwell_time,
    effective_detuning,
    extremal_from_moments,
    extremal_variances,
    extremal_variances_general,
    gain,
    lambda_coeff,
    moment_spectrum,
    nonlinear_coupling_rate,
    quadrature_variance,
    squeezing_spectrum,
    variances_delta_zero,
)
from ringsqueeze.ring import HBAR

C_LIGHT = 299_792_458.0
OMEGA_1550 = 1.216e15  # rad/s

DEVICE = dict(group_velocity=C_LIGHT / 2.1, nonlinear_parameter=1.0,
              round_trip_length=2 * np.pi * 120e-6)


def make_params(q=8e5, omega=OMEGA_1550, **kw):
    return RingParams(loaded_q=q, omega=omega, **{**DEVICE, **kw})


class TestCouplingRate:
    def test_zero_group_velocity_gives_zero(self):
        assert nonlinear_coupling_rate(OMEGA_1550, 0.0, 1.0, 1e-3) == 0.0

    def test_zero_nonlinearity_gives_zero(self):
        params = make_params(nonlinear_parameter=0.0)
        assert lambda_coeff(params) == 0.0

    def test_doubling_length_halves_coupling(self):
        params = make_params()
        doubled = make_params(round_trip_length=2 * DEVICE["round_trip_length"])
        assert lambda_coeff(doubled) == pytest.approx(
            lambda_coeff(params) / 2.0, rel=1e-12)

    def test_dimensional_value_against_high_precision_oracle(self):
        # Independent unit analysis: recompute hbar*w*vg^2*gamma/L with
        # 50-digit arithmetic and compare the double-precision path.
        params = make_params()
        with mpmath.workdps(50):
            expected = (mpmath.mpf("1.054571817e-34") * mpmath.mpf(OMEGA_1550)
                        * (mpmath.mpf(C_LIGHT) / mpmath.mpf("2.1")) ** 2
                        * 1 / (2 * mpmath.pi * mpmath.mpf("120e-6")))
            expected = float(expected)
        assert lambda_coeff(params) == pytest.approx(expected, rel=1e-12)

    def test_coupling_supports_acceptance_gain(self):
        # The pump photon number used in acceptance configs reproduces the
        # working point g ~ 0.45 through Lambda/Gamma.
        params = make_params()
        coupling = lambda_coeff(params)
        rate = params.dissipation_mean
        photons = 0.45 * rate / coupling
        drive = PumpDrive(pump_photon_number=photons,
                          nonlinear_coupling=coupling)
        assert gain(params, drive) == pytest.approx(0.45, rel=1e-12)
        assert 1e7 < photons < 1e9  # plausible intracavity photon number

    def test_distinct_mode_frequencies_enter_geometrically(self):
        params = make_params()
        shifted = lambda_coeff(params, omega_signal=1.1 * params.omega,
                               omega_idler=0.9 * params.omega)
        ratio = (1.1 * 0.9) ** 0.25
        assert shifted == pytest.approx(lambda_coeff(params) * ratio, rel=1e-12)

    def test_nonpositive_geometry_rejected(self):
        with pytest.raises(ValueError):
            nonlinear_coupling_rate(OMEGA_1550, 1e8, 1.0, 0.0)


class TestRingParams:
    def test_default_dissipation_from_quality_factor(self):
        params = make_params(q=8e5)
        assert params.dissipation_signal == pytest.approx(
            OMEGA_1550 / 1.6e6, rel=1e-12)

    def test_rejects_zero_quality_factor(self):
        with pytest.raises(ValueError):
            make_params(q=0.0)

    def test_rejects_zero_dissipation(self):
        with pytest.raises(ValueError):
            make_params(dissipation_signal=0.0)

    def test_rejects_bad_efficiency(self):
        with pytest.raises(ValueError):
            make_params(eta_escape_signal=1.2)


class TestGainAndDwell:
    def test_no_pump_no_gain(self):
        params = make_params()
        drive = PumpDrive(pump_photon_number=0.0, nonlinear_coupling=1.0)
        assert gain(params, drive) == 0.0

    def test_gain_arithmetic(self):
        params = make_params(dissipation_signal=1e9, dissipation_idler=1e9)
        drive = PumpDrive(pump_photon_number=450.0, nonlinear_coupling=1e6)
        assert gain(params, drive) == pytest.approx(0.45, rel=1e-12)

    def test_gain_linear_in_pump_photons(self):
        params = make_params()
        one = PumpDrive(pump_photon_number=1e7, nonlinear_coupling=3.4)
        two = PumpDrive(pump_photon_number=2e7, nonlinear_coupling=3.4)
        assert gain(params, two) == pytest.approx(2 * gain(params, one),
                                                  rel=1e-12)

    def test_gain_not_clamped_above_one(self):
        params = make_params()
        drive = PumpDrive.from_gain(params, 1.7)
        assert gain(params, drive) == pytest.approx(1.7, rel=1e-12)

    def test_dwell_time_value(self):
        # 2Q/omega for Q = 8e5: about 1.32 ns, order-consistent with a
        # 1.5 ns pulse being roughly 1.2 dwell times.
        tau = dwell_time(make_params(q=8e5))
        assert tau == pytest.approx(1.6e6 / OMEGA_1550, rel=1e-12)
        assert tau == pytest.approx(1.32e-9, rel=0.01)
        assert 1.5e-9 / tau == pytest.approx(1.14, abs=0.05)

    def test_dwell_scales_with_quality_factor(self):
        assert dwell_time(make_params(q=1.6e6)) == pytest.approx(
            2 * dwell_time(make_params(q=8e5)), rel=1e-12)


class TestMomentSpectrum:
    def test_vacuum_without_pump(self):
        params = make_params()
        drive = PumpDrive(pump_photon_number=0.0,
                          nonlinear_coupling=lambda_coeff(make_params()))
        ms = moment_spectrum(params, drive, 1e8)
        assert ms.n_signal == 0.0 and ms.n_idler == 0.0
        assert ms.m_signal_idler == 0.0

    def test_lorentzian_rolloff(self):
        params = make_params()
        drive = PumpDrive.from_gain(params, 0.4)
        near = moment_spectrum(params, drive, 0.0)
        far = moment_spectrum(params, drive, 1e6 * params.dissipation_mean)
        assert far.n_signal < 1e-10 * near.n_signal
        assert abs(far.m_signal_idler) < 1e-5 * abs(near.m_signal_idler)

    def test_symmetric_case_matches_closed_form(self):
        # Phase-extremized variance assembled from the moments must equal
        # the zero-sideband closed form to 1e-9 relative.
        params = make_params(eta_escape_signal=0.8, eta_escape_idler=0.8,
                             eta_downstream=0.5)
        for g in (0.1, 0.45, 0.9, 1.5):
            drive = PumpDrive.from_gain(params, g)
            v_plus, v_minus = extremal_from_moments(params, drive, 0.0)
            e_plus, e_minus = extremal_variances(g, 0.4)
            assert v_plus == pytest.approx(e_plus, rel=1e-9)
            assert v_minus == pytest.approx(e_minus, rel=1e-9)

    def test_pair_symmetry_of_flux_moments(self):
        params = make_params(eta_escape_signal=0.7, eta_escape_idler=0.7)
        drive = PumpDrive.from_gain(params, 0.6)
        ms = moment_spectrum(params, drive, 3e8)
        assert ms.n_signal == pytest.approx(ms.n_idler, rel=1e-14)

    def test_escape_asymmetry_breaks_flux_symmetry(self):
        params = make_params(eta_escape_signal=0.9, eta_escape_idler=0.3)
        drive = PumpDrive.from_gain(params, 0.6)
        ms = moment_spectrum(params, drive, 0.0)
        assert ms.n_signal == pytest.approx(3.0 * ms.n_idler, rel=1e-12)

    def test_on_threshold_raises_named_singularity(self):
        params = make_params()
        drive = PumpDrive.from_gain(params, 1.0, detuning_mode="locked_zero")
        with pytest.raises(ThresholdSingularityError) as err:
            moment_spectrum(params, drive, 0.0)
        message = str(err.value)
        assert "gain" in message and "detuning" in message \
            and "sideband" in message

    def test_downstream_loss_scales_moments(self):
        lossless = make_params(eta_downstream=1.0)
        lossy = make_params(eta_downstream=0.5)
        drive = PumpDrive.from_gain(lossless, 0.5)
        a = moment_spectrum(lossless, drive, 1e8)
        b = moment_spectrum(lossy, drive, 1e8)
        assert b.n_signal == pytest.approx(0.5 * a.n_signal, rel=1e-12)
        assert abs(b.m_signal_idler) == pytest.approx(
            0.5 * abs(a.m_signal_idler), rel=1e-12)


class TestQuadratureVariance:
    def test_vacuum_for_zero_gain(self):
        params = make_params()
        drive = PumpDrive.from_gain(params, 0.0)
        for phi in (0.0, 0.7, 2.0):
            for omega in (0.0, 1e8, 1e9):
                point = quadrature_variance(params, drive, phi, -0.2, omega)
                assert point.variance == pytest.approx(1.0, abs=1e-14)

    @settings(max_examples=30, deadline=None)
    @given(phi_s=st.floats(-10, 10), phi_i=st.floats(-10, 10),
           g=st.floats(0.05, 1.2))
    def test_depends_only_on_phase_sum(self, phi_s, phi_i, g):
        params = make_params(eta_escape_signal=0.9, eta_escape_idler=0.9)
        drive = PumpDrive.from_gain(params, g)
        a = quadrature_variance(params, drive, phi_s, phi_i, 2e8).variance
        b = quadrature_variance(params, drive, phi_s + phi_i, 0.0,
                                2e8).variance
        c = quadrature_variance(params, drive, 0.0, phi_s + phi_i,
                                2e8).variance
        assert a == pytest.approx(b, rel=1e-12)
        assert a == pytest.approx(c, rel=1e-12)

    def test_extrema_sit_half_turn_apart(self):
        params = make_params()
        drive = PumpDrive.from_gain(params, 0.7)
        phases = np.linspace(0, 2 * np.pi, 721)
        values = np.array([quadrature_variance(params, drive, p, 0.0,
                                               1e8).variance
                           for p in phases])
        top = phases[np.argmax(values)]
        bottom = phases[np.argmin(values)]
        separation = np.mod(top - bottom, 2 * np.pi)
        assert min(separation, 2 * np.pi - separation) == pytest.approx(
            np.pi, abs=0.02)

    def test_minimum_uncertainty_against_high_precision_oracle(self):
        # At unit efficiency the product of the extremal variances is one;
        # checked against a 50-digit evaluation of the closed form over a
        # grid of gains and detunings.
        params = make_params()
        for g in (0.1, 0.45, 0.8):
            for mode, delta in (("locked_zero", 0.0),
                                ("locked_shifted", None),
                                ("explicit", 0.5)):
                drive = PumpDrive.from_gain(
                    params, g, detuning_mode=mode,
                    detuning=(delta or 0.0) * params.dissipation_mean)
                for omega in (0.0, 0.5 * params.dissipation_mean):
                    v_plus, v_minus = extremal_from_moments(params, drive,
                                                            omega)
                    assert v_plus * v_minus == pytest.approx(1.0, abs=1e-10)
                    with mpmath.workdps(50):
                        dd = mpmath.mpf(g) if mode == "locked_shifted" else \
                            mpmath.mpf(delta)
                        w = mpmath.mpf(omega) / mpmath.mpf(
                            params.dissipation_mean)
                        gg = mpmath.mpf(g)
                        c = (1 + 1j * dd) ** 2 + gg**2 + w**2
                        den = (gg**2 - (1 + dd**2) + w**2) ** 2 + 4 * w**2
                        base = 4 * gg / den
                        vp = 1 + base * (2 * gg + abs(c))
                        vm = 1 + base * (2 * gg - abs(c))
                        assert float(vp * vm) == pytest.approx(1.0,
                                                               abs=1e-30)
                        assert v_plus == pytest.approx(float(vp), rel=1e-10)
                        assert v_minus == pytest.approx(float(vm), rel=1e-10)


class TestExtremalVariances:
    def test_zero_gain_is_vacuum(self):
        assert extremal_variances(0.0, 0.7) == (1.0, 1.0)

    def test_half_gain_unit_efficiency(self):
        v_plus, v_minus = extremal_variances(0.5, 1.0)
        assert v_plus == pytest.approx(5.8284, abs=1e-4)
        assert v_minus == pytest.approx(0.1716, abs=1e-4)
        assert v_plus * v_minus == pytest.approx(1.0, rel=1e-12)

    def test_phase_scan_oracle(self):
        # Independent route: brute-force minimization over the LO phase sum
        # of the moment-assembled variance at zero sideband.
        params = make_params(eta_escape_signal=1.0, eta_escape_idler=1.0)
        drive = PumpDrive.from_gain(params, 0.5)
        phases = np.linspace(0, 2 * np.pi, 20001)
        values = np.array([quadrature_variance(params, drive, p, 0.0,
                                               0.0).variance
                           for p in phases])
        v_plus, v_minus = extremal_variances(0.5, 1.0)
        assert values.max() == pytest.approx(v_plus, rel=1e-7)
        assert values.min() == pytest.approx(v_minus, rel=1e-7)

    def test_measured_and_onchip_squeezing_anchor(self):
        # One gain reproduces both the measured -1 dB at the full
        # collection efficiency and roughly -4 dB at escape-only loss;
        # the bisection oracle lives in the acceptance suite.
        v_total = extremal_variances(0.45, 0.257)[1]
        v_chip = extremal_variances(0.45, 0.75)[1]
        assert 10 * np.log10(v_total) == pytest.approx(-1.0, abs=0.05)
        assert 10 * np.log10(v_chip) == pytest.approx(-4.0, abs=0.05)

    def test_lossy_floor(self):
        for eta in (0.2, 0.5, 0.9):
            for g in (0.1, 1.0, 10.0, 100.0):
                _, v_minus = extremal_variances(g, eta)
                assert v_minus > 1.0 - eta
        assert extremal_variances(1e6, 0.5)[1] == pytest.approx(0.5,
                                                                rel=1e-4)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            extremal_variances(-0.1, 0.5)
        with pytest.raises(ValueError):
            extremal_variances(0.5, 1.5)


class TestZeroDetuningVariances:
    def test_far_sideband_is_vacuum(self):
        v_plus, v_minus = variances_delta_zero(0.5, 1.0, 1e9)
        assert v_plus == pytest.approx(1.0, abs=1e-12)
        assert v_minus == pytest.approx(1.0, abs=1e-12)

    def test_half_gain_values(self):
        v_plus, v_minus = variances_delta_zero(0.5, 1.0, 0.0)
        assert v_plus == pytest.approx(9.0, rel=1e-12)
        assert v_minus == pytest.approx(1.0 / 9.0, rel=1e-12)
        assert v_plus * v_minus == pytest.approx(1.0, rel=1e-12)

    def test_near_threshold_value(self):
        v_plus, _ = variances_delta_zero(0.9, 1.0, 0.0)
        assert v_plus == pytest.approx(361.0, rel=1e-10)

    def test_threshold_singularity(self):
        with pytest.raises(ThresholdSingularityError):
            variances_delta_zero(1.0, 1.0, 0.0)
        with pytest.raises(ThresholdSingularityError):
            variances_delta_zero(1.3, 0.5, 0.0)

    def test_matches_moment_assembly(self):
        params = make_params(eta_escape_signal=0.6, eta_escape_idler=0.6)
        for g in (0.3, 0.8):
            drive = PumpDrive.from_gain(params, g,
                                        detuning_mode="locked_zero")
            for omega in (0.0, 0.5 * params.dissipation_mean,
                          2.0 * params.dissipation_mean):
                v_plus, v_minus = extremal_from_moments(params, drive, omega)
                e_plus, e_minus = variances_delta_zero(
                    g, 0.6, omega / params.dissipation_mean)
                assert v_plus == pytest.approx(e_plus, rel=1e-9)
                assert v_minus == pytest.approx(e_minus, rel=1e-9)


class TestSqueezingSpectrum:
    def grid(self, params):
        return np.geomspace(0.01, 3.0, 40) * params.dissipation_mean

    def test_zero_gain_flat(self):
        params = make_params()
        drive = PumpDrive.from_gain(params, 0.0)
        spectrum = squeezing_spectrum(params, drive, self.grid(params))
        assert np.allclose(spectrum[:, 1:], 0.0, atol=1e-12)

    def test_squeezing_degrades_off_resonance(self):
        params = make_params(eta_escape_signal=0.8, eta_escape_idler=0.8)
        drive = PumpDrive.from_gain(params, 0.45)
        dense = squeezing_spectrum(params, drive,
                                   np.linspace(0, 5, 2000)
                                   * params.dissipation_mean)
        assert np.all(np.diff(dense[:, 2]) >= -1e-12)

    def test_more_efficiency_deepens_squeezing(self):
        drive_eta = []
        for eta in (0.3, 0.6, 0.9):
            params = make_params(eta_downstream=eta)
            drive = PumpDrive.from_gain(params, 0.45)
            spectrum = squeezing_spectrum(params, drive, self.grid(params))
            drive_eta.append(spectrum[:, 2])
        assert np.all(drive_eta[1] < drive_eta[0])
        assert np.all(drive_eta[2] < drive_eta[1])

    def test_row_count_matches_grid(self):
        params = make_params()
        drive = PumpDrive.from_gain(params, 0.2)
        spectrum = squeezing_spectrum(params, drive, self.grid(params))
        assert spectrum.shape == (40, 3)


class TestDetuningModes:
    def test_locked_zero(self):
        params = make_params()
        drive = PumpDrive.from_gain(params, 0.5, detuning_mode="locked_zero")
        assert effective_detuning(params, drive) == 0.0

    def test_locked_shifted_tracks_gain(self):
        params = make_params()
        drive = PumpDrive.from_gain(params, 0.5)
        assert effective_detuning(params, drive) == pytest.approx(
            0.5 * params.dissipation_mean, rel=1e-12)

    def test_explicit_value(self):
        params = make_params()
        drive = PumpDrive.from_gain(params, 0.5, detuning_mode="explicit",
                                    detuning=1.25e8)
        assert effective_detuning(params, drive) == 1.25e8

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            PumpDrive(pump_photon_number=1.0, nonlinear_coupling=1.0,
                      detuning_mode="chasing")

    def test_variance_point_db(self):
        params = make_params()
        drive = PumpDrive.from_gain(params, 0.45)
        point = quadrature_variance(params, drive, 0.0, 0.0, 0.0)
        assert point.variance_db == pytest.approx(
            10 * np.log10(point.variance), rel=1e-12)
