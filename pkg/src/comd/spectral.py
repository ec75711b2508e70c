"""Frequency-domain primitives.

Analytic (one-sided) spectra of real signals, bandwidth and center-of-gravity
functionals, and Parseval-consistent inner products. All integrals are
bin-wise sums on the uniform DFT grid; omega is in rad/s at this layer.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidInputError

__all__ = [
    "SampledSignal",
    "HalfSpectrum",
    "BandwidthValue",
    "analytic_spectrum",
    "inverse_to_signal",
    "bandwidth",
    "center_frequency",
    "inner_product",
    "parseval_weights",
]


def _validated_array(values, dtype, name):
    arr = np.array(values, dtype=dtype)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SampledSignal:
    """Uniformly sampled real time series."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        arr = _validated_array(self.samples, np.float64, "samples")
        if arr.size < 2:
            raise InvalidInputError(f"signal needs at least 2 samples, got {arr.size}")
        fs = float(self.sample_rate_hz)
        if not np.isfinite(fs) or fs <= 0:
            raise InvalidInputError(f"sample_rate_hz must be positive, got {fs}")
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate_hz", fs)

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def energy(self) -> float:
        return float(np.dot(self.samples, self.samples))


@dataclass(frozen=True)
class HalfSpectrum:
    """Complex coefficients of an analytic signal on non-negative bins.

    Interior bins carry doubled DFT coefficients; DC (and Nyquist, for even
    origin_length) carry the plain coefficient and must be real, as for any
    spectrum derived from a real signal.
    """

    coefficients: np.ndarray
    bin_width_rad_s: float
    origin_length: int

    def __post_init__(self):
        arr = _validated_array(self.coefficients, np.complex128, "coefficients")
        n = int(self.origin_length)
        if n < 2:
            raise InvalidInputError(f"origin_length must be >= 2, got {n}")
        expected = n // 2 + 1
        if arr.size != expected:
            raise InvalidInputError(
                f"expected {expected} bins for origin_length {n}, got {arr.size}")
        width = float(self.bin_width_rad_s)
        if not np.isfinite(width) or width <= 0:
            raise InvalidInputError(f"bin_width_rad_s must be positive, got {width}")
        if arr[0].imag != 0.0:
            raise InvalidInputError("DC bin must be real")
        if n % 2 == 0 and arr[-1].imag != 0.0:
            raise InvalidInputError("Nyquist bin must be real for even origin_length")
        object.__setattr__(self, "coefficients", arr)
        object.__setattr__(self, "bin_width_rad_s", width)
        object.__setattr__(self, "origin_length", n)

    @property
    def n_bins(self) -> int:
        return self.coefficients.size

    @property
    def omegas(self) -> np.ndarray:
        """Bin frequencies in rad/s."""
        return np.arange(self.n_bins) * self.bin_width_rad_s

    def energy(self) -> float:
        """Time-domain-equivalent energy (exact Parseval)."""
        w = parseval_weights(self.n_bins, self.origin_length)
        return float(np.sum(w * np.abs(self.coefficients) ** 2))


@dataclass(frozen=True)
class BandwidthValue:
    """Normalized spectral variance around a center frequency, (rad/s)^2."""

    b_squared: float

    def __post_init__(self):
        val = float(self.b_squared)
        if not np.isfinite(val) or val < 0:
            raise InvalidInputError(f"b_squared must be non-negative, got {val}")
        object.__setattr__(self, "b_squared", val)


def parseval_weights(n_bins: int, origin_length: int) -> np.ndarray:
    """Quadrature weights making half-spectrum sums match time-domain sums.

    For doubled one-sided coefficients A, B of real signals a, b:
    sum_t a_t * b_t == sum_bins w * Re(A * conj(B)).
    """
    w = np.full(n_bins, 0.5 / origin_length)
    w[0] = 1.0 / origin_length
    if origin_length % 2 == 0:
        w[-1] = 1.0 / origin_length
    return w


def analytic_spectrum(signal: SampledSignal) -> HalfSpectrum:
    """One-sided spectrum of a real signal: 2x on strictly interior bins,
    1x at DC and (for even length) Nyquist."""
    n = signal.n
    coeffs = np.fft.rfft(signal.samples)
    coeffs[1:] *= 2.0
    if n % 2 == 0:
        coeffs[-1] *= 0.5
    bin_width = 2.0 * np.pi * signal.sample_rate_hz / n
    return HalfSpectrum(coeffs, bin_width, n)


def inverse_to_signal(spectrum: HalfSpectrum) -> SampledSignal:
    """Real part of the inverse transform; exact inverse of analytic_spectrum."""
    n = spectrum.origin_length
    coeffs = np.array(spectrum.coefficients)
    coeffs[1:] *= 0.5
    if n % 2 == 0:
        coeffs[-1] *= 2.0
    samples = np.fft.irfft(coeffs, n=n)
    fs = spectrum.bin_width_rad_s * n / (2.0 * np.pi)
    return SampledSignal(samples, fs)


def _power(spectrum: HalfSpectrum) -> np.ndarray:
    return np.abs(spectrum.coefficients) ** 2


def center_frequency(spectrum: HalfSpectrum) -> float:
    """Center of gravity of the power spectrum over non-negative bins, rad/s."""
    p = _power(spectrum)
    total = p.sum()
    if total <= 0.0:
        raise DegenerateInputError("center frequency undefined for zero-energy spectrum")
    return float(np.dot(spectrum.omegas, p) / total)


def bandwidth(spectrum: HalfSpectrum, omega_k: float) -> BandwidthValue:
    """Power-weighted mean squared deviation from omega_k, (rad/s)^2."""
    p = _power(spectrum)
    total = p.sum()
    if total <= 0.0:
        raise DegenerateInputError("bandwidth undefined for zero-energy spectrum")
    dev = spectrum.omegas - float(omega_k)
    value = float(np.dot(dev * dev, p) / total)
    return BandwidthValue(max(value, 0.0))


def inner_product(a, b) -> float:
    """Discrete <a, b>.

    Time domain: plain sample dot product. Frequency domain: Parseval-weighted
    sum, exactly equal to the time-domain value for analytic spectra of real
    signals on the same grid.
    """
    if isinstance(a, SampledSignal) and isinstance(b, SampledSignal):
        if a.n != b.n:
            raise InvalidInputError(f"length mismatch: {a.n} vs {b.n}")
        if a.sample_rate_hz != b.sample_rate_hz:
            raise InvalidInputError(
                f"sample rate mismatch: {a.sample_rate_hz} vs {b.sample_rate_hz}")
        return float(np.dot(a.samples, b.samples))
    if isinstance(a, HalfSpectrum) and isinstance(b, HalfSpectrum):
        if a.n_bins != b.n_bins or a.origin_length != b.origin_length:
            raise InvalidInputError("spectra are on different bin grids")
        if abs(a.bin_width_rad_s - b.bin_width_rad_s) > 1e-12 * a.bin_width_rad_s:
            raise InvalidInputError("spectra have different bin widths")
        w = parseval_weights(a.n_bins, a.origin_length)
        return float(np.sum(w * (a.coefficients * np.conj(b.coefficients)).real))
    raise InvalidInputError(
        f"operands must both be SampledSignal or both HalfSpectrum, "
        f"got {type(a).__name__} and {type(b).__name__}")
