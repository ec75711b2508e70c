"""Spectral-core tests.

Oracles are computed independently of the implementation: Parseval checks
use the full two-sided FFT, quadrature checks use np.trapezoid on spectra
built with zero endpoint bins (where trapezoid and rectangle rules agree
exactly).
"""
import numpy as np
import pytest

from comd.errors import DegenerateInputError, InvalidInputError
from comd.spectral import (
    BandwidthValue,
    HalfSpectrum,
    SampledSignal,
    analytic_spectrum,
    bandwidth,
    center_frequency,
    inner_product,
    inverse_to_signal,
)


def make_half_spectrum(coeffs, bin_width=1.0, origin_length=None):
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    if origin_length is None:
        origin_length = 2 * (len(coeffs) - 1)
    return HalfSpectrum(coeffs, bin_width, origin_length)


class TestSampledSignal:
    def test_rejects_short_signal(self):
        with pytest.raises(InvalidInputError):
            SampledSignal(np.array([1.0]), 1000.0)

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidInputError):
            SampledSignal(np.array([1.0, np.nan]), 1000.0)

    def test_rejects_bad_rate(self):
        with pytest.raises(InvalidInputError):
            SampledSignal(np.array([1.0, 2.0]), 0.0)

    def test_samples_read_only(self):
        sig = SampledSignal(np.array([1.0, 2.0, 3.0]), 10.0)
        with pytest.raises(ValueError):
            sig.samples[0] = 5.0

    def test_energy(self):
        sig = SampledSignal(np.array([3.0, 4.0]), 10.0)
        assert sig.energy() == 25.0


class TestHalfSpectrum:
    def test_bin_count_must_match_origin_length(self):
        with pytest.raises(InvalidInputError):
            HalfSpectrum(np.zeros(5, dtype=np.complex128), 1.0, 10)  # needs 6

    def test_dc_bin_must_be_real(self):
        coeffs = np.zeros(6, dtype=np.complex128)
        coeffs[0] = 1.0j
        with pytest.raises(InvalidInputError):
            HalfSpectrum(coeffs, 1.0, 10)

    def test_nyquist_bin_must_be_real_for_even_length(self):
        coeffs = np.zeros(6, dtype=np.complex128)
        coeffs[-1] = 2.0j
        with pytest.raises(InvalidInputError):
            HalfSpectrum(coeffs, 1.0, 10)

    def test_odd_length_has_no_nyquist_constraint(self):
        coeffs = np.zeros(6, dtype=np.complex128)
        coeffs[-1] = 2.0j
        spec = HalfSpectrum(coeffs, 1.0, 11)  # 11 // 2 + 1 == 6
        assert spec.origin_length == 11

    def test_omegas_grid(self):
        spec = make_half_spectrum(np.zeros(4), bin_width=2.5)
        np.testing.assert_allclose(spec.omegas, [0.0, 2.5, 5.0, 7.5])


class TestAnalyticSpectrum:
    def test_single_tone_concentrates_in_one_bin(self):
        fs, n = 1000.0, 1000
        t = np.arange(n) / fs
        sig = SampledSignal(np.cos(2 * np.pi * 50.0 * t), fs)
        spec = analytic_spectrum(sig)
        # one-sided convention: interior bins carry the doubled coefficient
        assert abs(spec.coefficients[50] - n) < 1e-9 * n
        others = np.delete(np.abs(spec.coefficients), 50)
        assert others.max() < 1e-9 * n

    def test_zero_signal_gives_zero_spectrum(self):
        sig = SampledSignal(np.zeros(64), 100.0)
        spec = analytic_spectrum(sig)
        assert np.all(spec.coefficients == 0)

    @pytest.mark.parametrize("n", [1000, 999])
    def test_parseval_against_full_fft_oracle(self, n):
        rng = np.random.default_rng(42)
        x = rng.standard_normal(n)
        sig = SampledSignal(x, 1000.0)
        spec = analytic_spectrum(sig)
        time_energy = float(np.dot(x, x))
        # independent oracle: two-sided Parseval via the full FFT
        oracle = float(np.sum(np.abs(np.fft.fft(x)) ** 2) / n)
        assert abs(time_energy - oracle) <= 1e-10 * time_energy
        assert abs(spec.energy() - time_energy) <= 1e-10 * time_energy

    def test_bin_width(self):
        sig = SampledSignal(np.zeros(500), 1000.0)
        spec = analytic_spectrum(sig)
        assert abs(spec.bin_width_rad_s - 2 * np.pi * 2.0) < 1e-12


class TestInverseToSignal:
    def test_tone_round_trip(self):
        fs, n = 1000.0, 1000
        t = np.arange(n) / fs
        x = np.cos(2 * np.pi * 50.0 * t)
        sig = SampledSignal(x, fs)
        back = inverse_to_signal(analytic_spectrum(sig))
        np.testing.assert_allclose(back.samples, x, atol=1e-12)
        assert back.sample_rate_hz == pytest.approx(fs, rel=1e-12)

    def test_zero_spectrum_gives_zero_signal(self):
        spec = make_half_spectrum(np.zeros(9))
        assert np.all(inverse_to_signal(spec).samples == 0.0)

    @pytest.mark.parametrize("n", [64, 65])
    def test_random_spectrum_round_trip(self, n):
        rng = np.random.default_rng(7)
        n_bins = n // 2 + 1
        coeffs = rng.standard_normal(n_bins) + 1j * rng.standard_normal(n_bins)
        coeffs[0] = coeffs[0].real
        if n % 2 == 0:
            coeffs[-1] = coeffs[-1].real
        spec = make_half_spectrum(coeffs, bin_width=2 * np.pi * 10.0 / n,
                                  origin_length=n)
        sig = inverse_to_signal(spec)
        spec2 = analytic_spectrum(sig)
        np.testing.assert_allclose(spec2.coefficients, spec.coefficients,
                                   rtol=0, atol=1e-10 * np.abs(coeffs).max())

    @pytest.mark.parametrize("n", [128, 129, 250])
    def test_signal_round_trip_within_1e12(self, n):
        rng = np.random.default_rng(n)
        x = rng.standard_normal(n)
        sig = SampledSignal(x, 1000.0)
        back = inverse_to_signal(analytic_spectrum(sig))
        err = np.linalg.norm(back.samples - x) / np.linalg.norm(x)
        assert err <= 1e-12


def chirp_like_spectrum(n_bins=257, bin_width=1.0):
    """Band-limited magnitude ramp with zero endpoint bins.

    Zero endpoints make the rectangle rule and np.trapezoid agree exactly,
    so the quadrature oracle comparison is not polluted by the endpoint
    convention.
    """
    rng = np.random.default_rng(3)
    mags = np.zeros(n_bins)
    lo, hi = n_bins // 8, n_bins // 2
    mags[lo:hi] = np.linspace(0.2, 1.0, hi - lo)
    phases = rng.uniform(0, 2 * np.pi, n_bins)
    coeffs = mags * np.exp(1j * phases)
    coeffs[0] = 0.0
    coeffs[-1] = 0.0
    return make_half_spectrum(coeffs, bin_width=bin_width)


class TestCenterFrequency:
    def test_single_bin(self):
        coeffs = np.zeros(33)
        coeffs[10] = 2.0
        spec = make_half_spectrum(coeffs, bin_width=0.5)
        assert center_frequency(spec) == pytest.approx(5.0, rel=1e-14)

    def test_two_symmetric_bins(self):
        coeffs = np.zeros(33)
        coeffs[8] = 1.5
        coeffs[12] = 1.5
        spec = make_half_spectrum(coeffs, bin_width=1.0)
        assert center_frequency(spec) == pytest.approx(10.0, rel=1e-14)

    def test_matches_trapezoid_oracle(self):
        spec = chirp_like_spectrum(bin_width=0.75)
        p = np.abs(spec.coefficients) ** 2
        w = spec.omegas
        oracle = np.trapezoid(w * p, w) / np.trapezoid(p, w)
        assert center_frequency(spec) == pytest.approx(oracle, rel=1e-10)

    def test_zero_energy_raises(self):
        spec = make_half_spectrum(np.zeros(9))
        with pytest.raises(DegenerateInputError):
            center_frequency(spec)


class TestBandwidth:
    def test_single_bin_at_center_is_zero(self):
        coeffs = np.zeros(17)
        coeffs[5] = 3.0
        spec = make_half_spectrum(coeffs, bin_width=2.0)
        assert bandwidth(spec, 10.0).b_squared == pytest.approx(0.0, abs=1e-15)

    def test_two_symmetric_bins_give_delta_squared(self):
        coeffs = np.zeros(33)
        coeffs[10] = 1.0
        coeffs[14] = 1.0
        spec = make_half_spectrum(coeffs, bin_width=1.5)
        # bins at 15.0 and 21.0; center 18.0; delta = 3.0
        assert bandwidth(spec, 18.0).b_squared == pytest.approx(9.0, rel=1e-13)

    def test_matches_trapezoid_oracle(self):
        spec = chirp_like_spectrum(bin_width=1.25)
        omega_k = center_frequency(spec)
        p = np.abs(spec.coefficients) ** 2
        w = spec.omegas
        oracle = np.trapezoid((w - omega_k) ** 2 * p, w) / np.trapezoid(p, w)
        assert bandwidth(spec, omega_k).b_squared == pytest.approx(oracle, rel=1e-9)

    def test_minimized_at_center_frequency(self):
        spec = chirp_like_spectrum(bin_width=1.0)
        omega_c = center_frequency(spec)
        best = bandwidth(spec, omega_c).b_squared
        for w in spec.omegas[:: len(spec.omegas) // 16]:
            assert bandwidth(spec, float(w)).b_squared >= best - 1e-12

    def test_zero_energy_raises(self):
        spec = make_half_spectrum(np.zeros(9))
        with pytest.raises(DegenerateInputError):
            bandwidth(spec, 1.0)

    def test_negative_b_squared_rejected(self):
        with pytest.raises(InvalidInputError):
            BandwidthValue(-1.0)


class TestInnerProduct:
    def test_sin_cos_orthogonal(self):
        fs, n = 1000.0, 1000
        t = np.arange(n) / fs
        a = SampledSignal(np.sin(2 * np.pi * 10 * t), fs)
        b = SampledSignal(np.cos(2 * np.pi * 10 * t), fs)
        assert abs(inner_product(a, b)) <= 1e-10 * np.sqrt(a.energy() * b.energy())

    def test_self_inner_product_is_energy(self):
        rng = np.random.default_rng(11)
        sig = SampledSignal(rng.standard_normal(256), 500.0)
        assert inner_product(sig, sig) == pytest.approx(sig.energy(), rel=1e-14)

    @pytest.mark.parametrize("n", [512, 511])
    def test_time_and_frequency_paths_agree(self, n):
        rng = np.random.default_rng(n)
        a = SampledSignal(rng.standard_normal(n), 1000.0)
        b = SampledSignal(rng.standard_normal(n), 1000.0)
        t_val = inner_product(a, b)
        f_val = inner_product(analytic_spectrum(a), analytic_spectrum(b))
        scale = np.sqrt(a.energy() * b.energy())
        assert abs(t_val - f_val) <= 1e-10 * scale

    def test_length_mismatch_raises(self):
        a = SampledSignal(np.zeros(10) + 1, 100.0)
        b = SampledSignal(np.zeros(12) + 1, 100.0)
        with pytest.raises(InvalidInputError):
            inner_product(a, b)

    def test_rate_mismatch_raises(self):
        a = SampledSignal(np.ones(10), 100.0)
        b = SampledSignal(np.ones(10), 200.0)
        with pytest.raises(InvalidInputError):
            inner_product(a, b)

    def test_mixed_types_raise(self):
        a = SampledSignal(np.ones(10), 100.0)
        spec = analytic_spectrum(a)
        with pytest.raises(InvalidInputError):
            inner_product(a, spec)

    def test_incompatible_bins_raise(self):
        a = make_half_spectrum(np.ones(9))
        b = make_half_spectrum(np.ones(9), bin_width=2.0)
        with pytest.raises(InvalidInputError):
            inner_product(a, b)
