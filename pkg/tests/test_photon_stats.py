"""Sampler and count-estimator tests against analytic photon statistics."""

import numpy as np
import pytest
from scipy.stats import chi2

from ringsqueeze import (
    CountSet,
    DegenerateDataError,
    SchmidtSpectrum,
    count_statistics,
    effective_mode_number,
    expected_means,
    expected_vardiff_total,
    g2,
    noise_degraded_g2,
    nrf,
    sample_counts,
    vardiff_and_total,
)
from ringsqueeze.photon_stats import SATURATION_THRESHOLD


def r_for_pair_mean(mean: float) -> float:
    """Squeezing parameter giving ``sinh(r)**2 == mean`` pairs per pulse."""
    return float(np.arcsinh(np.sqrt(mean)))


class TestSampler:
    def test_empty_spectrum_rejected(self):
        with pytest.raises(ValueError):
            SchmidtSpectrum(squeezing_parameters=())

    def test_zero_squeezing_zero_noise_gives_empty_pulses(self):
        spec = SchmidtSpectrum(squeezing_parameters=(0.0, 0.0))
        counts = sample_counts(spec, 5000, seed=1)
        assert counts.n_signal.sum() == 0
        assert counts.n_idler.sum() == 0

    def test_lossless_single_mode_pairs_match_exactly(self):
        spec = SchmidtSpectrum(squeezing_parameters=(r_for_pair_mean(1.0),))
        counts = sample_counts(spec, 200_000, seed=2)
        assert np.array_equal(counts.n_signal, counts.n_idler)
        # mean within 3 sigma of sinh^2 r = 1 (thermal variance 2)
        sigma = np.sqrt(2.0 / counts.num_pulses)
        assert counts.n_signal.mean() == pytest.approx(1.0, abs=3 * sigma)

    def test_mean_totals_track_transmissions_and_noise(self):
        spec = SchmidtSpectrum(
            squeezing_parameters=(0.9, 0.4, 0.2),
            eta_signal=0.63, eta_idler=0.41,
            noise_mean_signal=0.05, noise_mean_idler=0.12)
        counts = sample_counts(spec, 400_000, seed=40)
        mean_s, mean_i = expected_means(spec)
        for arm, expected in (("signal", mean_s), ("idler", mean_i)):
            values = counts.arm(arm)
            sigma = values.std(ddof=1) / np.sqrt(values.size)
            assert values.mean() == pytest.approx(expected, abs=3 * sigma)

    def test_deterministic_and_thread_invariant(self):
        spec = SchmidtSpectrum(squeezing_parameters=(0.8, 0.3),
                               eta_signal=0.5, eta_idler=0.5,
                               noise_mean_signal=0.1)
        a = sample_counts(spec, 150_000, seed=11)
        b = sample_counts(spec, 150_000, seed=11, threads=4)
        c = sample_counts(spec, 150_000, seed=11, threads=2)
        assert np.array_equal(a.n_signal, b.n_signal)
        assert np.array_equal(a.n_idler, b.n_idler)
        assert np.array_equal(a.n_signal, c.n_signal)
        different = sample_counts(spec, 150_000, seed=12)
        assert not np.array_equal(a.n_signal, different.n_signal)

    def test_prefix_stability(self):
        # Counter-based substreams: the first pulses of a longer run equal
        # a shorter run pulse for pulse.
        spec = SchmidtSpectrum(squeezing_parameters=(0.7,), eta_signal=0.6,
                               eta_idler=0.6)
        short = sample_counts(spec, 1000, seed=5)
        long = sample_counts(spec, 100_000, seed=5)
        assert np.array_equal(short.n_signal, long.n_signal[:1000])
        assert np.array_equal(short.n_idler, long.n_idler[:1000])

    def test_pair_symmetry_two_sample(self):
        # Equal transmissions, no noise: both arms should be draws from the
        # same distribution; chi-square two-sample test at desk scale.
        spec = SchmidtSpectrum(squeezing_parameters=(1.0,), eta_signal=0.4,
                               eta_idler=0.4)
        counts = sample_counts(spec, 200_000, seed=6)
        top = int(max(counts.n_signal.max(), counts.n_idler.max()))
        hist_s = np.bincount(counts.n_signal, minlength=top + 1)
        hist_i = np.bincount(counts.n_idler, minlength=top + 1)
        keep = (hist_s + hist_i) >= 10
        statistic = np.sum((hist_s[keep] - hist_i[keep]) ** 2
                           / (hist_s[keep] + hist_i[keep]))
        threshold = chi2.ppf(0.999, df=keep.sum())
        assert statistic < threshold

    def test_saturation_flagging(self):
        spec = SchmidtSpectrum(squeezing_parameters=(r_for_pair_mean(9.0),))
        counts = sample_counts(spec, 20_000, seed=7)
        expected = (counts.n_signal > SATURATION_THRESHOLD) \
            | (counts.n_idler > SATURATION_THRESHOLD)
        assert np.array_equal(counts.saturated, expected)
        assert counts.saturated.any()
        kept_s, kept_i = counts.select(include_saturated=False)
        assert kept_s.max(initial=0) <= SATURATION_THRESHOLD
        full_s, _ = counts.select(include_saturated=True)
        assert full_s.size == counts.num_pulses

    def test_paper_point_nrf(self):
        # eta 0.3 on both arms, total detected mean near one photon.
        spec = SchmidtSpectrum(
            squeezing_parameters=(r_for_pair_mean(1.667),),
            eta_signal=0.3, eta_idler=0.3)
        counts = sample_counts(spec, 1_000_000, seed=8)
        stats = nrf(counts)
        assert stats.mean == pytest.approx(0.700, abs=0.01)
        _, n_tot = vardiff_and_total(counts)
        assert n_tot == pytest.approx(1.0, abs=0.05)


class TestDifferenceVariance:
    def test_constant_pairs_have_zero_variance(self):
        counts = CountSet(n_signal=np.full(100, 3), n_idler=np.full(100, 3),
                          seed=0, saturated=np.zeros(100, bool))
        vardiff, n_tot = vardiff_and_total(counts)
        assert vardiff == 0.0
        assert n_tot == 6.0

    def test_poisson_benchmark(self):
        spec = SchmidtSpectrum(squeezing_parameters=(0.0,),
                               noise_mean_signal=1.3, noise_mean_idler=1.3)
        counts = sample_counts(spec, 400_000, seed=9)
        vardiff, n_tot = vardiff_and_total(counts)
        assert vardiff / n_tot == pytest.approx(1.0, abs=0.01)

    def test_lossy_pair_state(self):
        spec = SchmidtSpectrum(squeezing_parameters=(0.9,), eta_signal=0.2,
                               eta_idler=0.2)
        counts = sample_counts(spec, 600_000, seed=10)
        vardiff, n_tot = vardiff_and_total(counts)
        assert vardiff / n_tot == pytest.approx(0.8, abs=0.01)

    def test_requires_two_pulses(self):
        counts = CountSet(n_signal=np.array([1]), n_idler=np.array([1]),
                          seed=0, saturated=np.array([False]))
        with pytest.raises(DegenerateDataError):
            vardiff_and_total(counts)

    def test_unequal_transmissions_match_general_expression(self):
        spec = SchmidtSpectrum(squeezing_parameters=(0.8, 0.5),
                               eta_signal=0.5, eta_idler=0.25)
        counts = sample_counts(spec, 800_000, seed=11)
        vardiff, n_tot = vardiff_and_total(counts)
        expected_v, expected_n = expected_vardiff_total(spec)
        assert n_tot == pytest.approx(expected_n, rel=0.01)
        assert vardiff == pytest.approx(expected_v, rel=0.02)


class TestNoiseReductionFactor:
    def test_poisson_gives_unity(self):
        spec = SchmidtSpectrum(squeezing_parameters=(0.0,),
                               noise_mean_signal=1.0, noise_mean_idler=1.0)
        counts = sample_counts(spec, 400_000, seed=12)
        stats = nrf(counts)
        assert stats.mean == pytest.approx(1.0, abs=3 * stats.std)
        assert stats.values.size == 8

    def test_perfect_pairs_give_zero(self):
        spec = SchmidtSpectrum(squeezing_parameters=(0.9,))
        counts = sample_counts(spec, 100_000, seed=13)
        stats = nrf(counts)
        assert stats.mean == 0.0
        assert stats.std == 0.0

    def test_transmission_sweep_matches_one_minus_eta(self):
        for eta in (0.1, 0.5, 0.9):
            spec = SchmidtSpectrum(squeezing_parameters=(0.8,),
                                   eta_signal=eta, eta_idler=eta)
            counts = sample_counts(spec, 300_000, seed=int(100 * eta))
            stats = nrf(counts)
            assert stats.mean == pytest.approx(1.0 - eta, abs=0.01)

    def test_subset_count_validation(self):
        spec = SchmidtSpectrum(squeezing_parameters=(0.5,), eta_signal=0.5,
                               eta_idler=0.5)
        counts = sample_counts(spec, 1000, seed=14)
        with pytest.raises(ValueError):
            nrf(counts, subsets=1)

    def test_zero_counts_rejected(self):
        spec = SchmidtSpectrum(squeezing_parameters=(0.0,))
        counts = sample_counts(spec, 1000, seed=15)
        with pytest.raises(DegenerateDataError):
            nrf(counts)

    def test_background_pushes_toward_unity(self):
        quiet = SchmidtSpectrum(squeezing_parameters=(0.8,), eta_signal=0.4,
                                eta_idler=0.4)
        noisy = SchmidtSpectrum(squeezing_parameters=(0.8,), eta_signal=0.4,
                                eta_idler=0.4, noise_mean_signal=0.5,
                                noise_mean_idler=0.5)
        nrf_quiet = nrf(sample_counts(quiet, 300_000, seed=16)).mean
        nrf_noisy = nrf(sample_counts(noisy, 300_000, seed=16)).mean
        assert nrf_quiet < nrf_noisy < 1.02


class TestSecondOrderCorrelation:
    def test_poisson_unity(self):
        spec = SchmidtSpectrum(squeezing_parameters=(0.0,),
                               noise_mean_signal=1.1, noise_mean_idler=1.1)
        counts = sample_counts(spec, 500_000, seed=17)
        assert g2(counts, "signal").mean == pytest.approx(1.0, abs=0.02)
        assert g2(counts, "idler").mean == pytest.approx(1.0, abs=0.02)

    def test_single_mode_thermal_arm(self):
        spec = SchmidtSpectrum(squeezing_parameters=(r_for_pair_mean(1.0),))
        counts = sample_counts(spec, 1_000_000, seed=18)
        stats = g2(counts, "signal", include_saturated=True)
        assert stats.mean == pytest.approx(2.0, abs=0.02)

    def test_ten_equal_modes(self):
        spec = SchmidtSpectrum(
            squeezing_parameters=(r_for_pair_mean(0.1),) * 10)
        counts = sample_counts(spec, 1_000_000, seed=19)
        stats = g2(counts, "signal", include_saturated=True)
        assert stats.mean == pytest.approx(1.10, abs=0.02)

    def test_loss_invariance(self):
        lossless = SchmidtSpectrum(squeezing_parameters=(0.9,))
        lossy = SchmidtSpectrum(squeezing_parameters=(0.9,), eta_signal=0.3,
                                eta_idler=0.3)
        a = g2(sample_counts(lossless, 600_000, seed=20), "signal",
               include_saturated=True).mean
        b = g2(sample_counts(lossy, 600_000, seed=21), "signal",
               include_saturated=True).mean
        assert a == pytest.approx(b, abs=0.03)
        assert a == pytest.approx(2.0, abs=0.03)

    def test_background_pulls_toward_unity(self):
        clean = SchmidtSpectrum(squeezing_parameters=(0.9,))
        noisy = SchmidtSpectrum(squeezing_parameters=(0.9,),
                                noise_mean_signal=1.0)
        a = g2(sample_counts(clean, 400_000, seed=22), "signal").mean
        b = g2(sample_counts(noisy, 400_000, seed=22), "signal").mean
        assert 1.0 < b < a

    def test_zero_mean_arm_is_an_error(self):
        spec = SchmidtSpectrum(squeezing_parameters=(0.0,),
                               noise_mean_idler=0.5)
        counts = sample_counts(spec, 10_000, seed=23)
        with pytest.raises(DegenerateDataError):
            g2(counts, "signal")

    def test_unknown_arm_rejected(self):
        spec = SchmidtSpectrum(squeezing_parameters=(0.5,))
        counts = sample_counts(spec, 1000, seed=24)
        with pytest.raises(ValueError):
            g2(counts, "herald")


class TestModeNumberAndNoiseModel:
    def test_effective_mode_number_values(self):
        assert effective_mode_number(2.0) == pytest.approx(1.0)
        assert effective_mode_number(1.1) == pytest.approx(10.0)
        assert effective_mode_number(1.87) == pytest.approx(1.1494, abs=1e-3)

    def test_effective_mode_number_domain(self):
        with pytest.raises(ValueError):
            effective_mode_number(1.0)
        with pytest.raises(ValueError):
            effective_mode_number(0.7)

    def test_noiseless_limit(self):
        assert noise_degraded_g2(0.9, 1.0, 0.0) == pytest.approx(2.0)
        assert noise_degraded_g2(0.9, 4.0, 0.0) == pytest.approx(1.25)

    def test_paper_like_correction(self):
        # Noiseless value 1.9 with 1.2 thermal and 0.02 background photons
        # lands on the raw measured 1.87.
        k_modes = 1.0 / 0.9
        r = float(np.arcsinh(np.sqrt(1.2 / k_modes)))
        assert noise_degraded_g2(r, k_modes, 0.02) == pytest.approx(1.87,
                                                                    abs=0.005)

    def test_strong_background_is_poissonian(self):
        assert noise_degraded_g2(0.9, 1.0, 1e9) == pytest.approx(1.0,
                                                                 abs=1e-6)

    def test_monte_carlo_oracle(self):
        n_thermal = 1.2
        noise = 0.05
        spec = SchmidtSpectrum(
            squeezing_parameters=(r_for_pair_mean(n_thermal),),
            noise_mean_signal=noise)
        counts = sample_counts(spec, 1_000_000, seed=25)
        measured = g2(counts, "signal", include_saturated=True).mean
        predicted = noise_degraded_g2(r_for_pair_mean(n_thermal), 1.0, noise)
        assert measured == pytest.approx(predicted, abs=0.02)


class TestCountStatistics:
    def test_summary_fields(self):
        spec = SchmidtSpectrum(squeezing_parameters=(0.9,), eta_signal=0.5,
                               eta_idler=0.5, noise_mean_signal=0.02,
                               noise_mean_idler=0.02)
        counts = sample_counts(spec, 160_000, seed=26)
        stats = count_statistics(counts, subsets=8)
        assert stats.subsets == 8
        assert stats.num_pulses == 160_000
        assert stats.nrf.values.size == 8
        assert stats.n_tot.mean > 0
        assert stats.g2_signal.mean > 1.0
        assert stats.num_saturated == int(counts.saturated.sum())

    def test_estimators_drop_flagged_pulses_by_default(self):
        n_signal = np.array([1, 2, 1, 50, 2, 1, 2, 1])
        n_idler = np.array([1, 2, 2, 49, 1, 1, 2, 2])
        saturated = n_signal > SATURATION_THRESHOLD
        counts = CountSet(n_signal=n_signal, n_idler=n_idler, seed=0,
                          saturated=saturated)
        stats = count_statistics(counts, subsets=2)
        assert stats.num_saturated == 1
        _, n_tot_default = vardiff_and_total(counts)
        _, n_tot_full = vardiff_and_total(counts, include_saturated=True)
        assert n_tot_full > n_tot_default
