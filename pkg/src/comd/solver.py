"""Mode decomposition solver.

Splits a sampled signal into K narrowband modes by alternating Wiener-style
mode updates, center-frequency updates and dual ascent on the reconstruction
and orthogonality constraints. Orthogonality is enforced exactly by a
Newton-Schulz mixing projection applied every few sweeps and once on the
final mode set.

The hot loop lives in _kernels and operates on plain arrays. The signal is
scaled to unit energy before solving so that the default penalty weights are
amplitude invariant; mode amplitudes are restored on the way out.
"""
import time
from dataclasses import dataclass, fields, replace
from enum import Enum
from typing import Optional

import numpy as np

from . import _kernels
from .errors import (
    ComdError,
    ConvergenceError,
    DegenerateInputError,
    DegenerateModesError,
    InvalidInputError,
)
from .metrics import DecompositionReport
from .ortho import gram
from .spectral import SampledSignal, analytic_spectrum, bandwidth, parseval_weights


class OmegaInit(str, Enum):
    UNIFORM_SPREAD = "uniform_spread"
    SPECTRAL_PEAKS = "spectral_peaks"
    ZEROS = "zeros"


class SweepOrder(str, Enum):
    GAUSS_SEIDEL = "gauss_seidel"
    JACOBI = "jacobi"


class ModeKind(str, Enum):
    VMD_BASELINE = "vmd_baseline"
    COMD_PENALTY_ONLY = "comd_penalty_only"
    COMD_PROJECTED = "comd_projected"


class WienerForm(str, Enum):
    BANDWIDTH = "bandwidth"
    CLASSIC = "classic"


def _coerce(value, enum_type):
    if isinstance(value, enum_type):
        return value
    try:
        return enum_type(value)
    except ValueError:
        raise InvalidInputError(
            f"unknown {enum_type.__name__} value: {value!r}") from None


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    alpha is the bandwidth penalty for a unit-energy signal on the
    normalized frequency axis; beta weighs the soft orthogonality penalty
    against it. tau_lambda and tau_gamma are the dual step sizes for the
    reconstruction and orthogonality multipliers. tol stops the sweep loop
    on the largest relative squared change of any mode spectrum.
    """

    k: int = 3
    alpha: float = 5e-3
    beta: float = 1e-3
    tau_lambda: float = 8e-4
    tau_gamma: float = 5e-4
    tol: float = 1e-9
    max_iters: int = 500
    ns_every: int = 1
    ns_tol: float = 1e-8
    ns_max_iters: int = 30
    omega_init: OmegaInit = OmegaInit.SPECTRAL_PEAKS
    sweep_order: SweepOrder = SweepOrder.GAUSS_SEIDEL
    mode_kind: ModeKind = ModeKind.COMD_PROJECTED
    wiener_form: WienerForm = WienerForm.BANDWIDTH
    mirror_boundary: bool = True
    reset_multipliers: bool = False

    def __post_init__(self):
        object.__setattr__(self, "omega_init", _coerce(self.omega_init, OmegaInit))
        object.__setattr__(self, "sweep_order", _coerce(self.sweep_order, SweepOrder))
        object.__setattr__(self, "mode_kind", _coerce(self.mode_kind, ModeKind))
        object.__setattr__(self, "wiener_form", _coerce(self.wiener_form, WienerForm))
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise InvalidInputError(f"k must be a positive integer, got {self.k!r}")
        if not self.alpha > 0:
            raise InvalidInputError(f"alpha must be positive, got {self.alpha}")
        if self.beta < 0:
            raise InvalidInputError(f"beta must be nonnegative, got {self.beta}")
        if self.tau_lambda < 0 or self.tau_gamma < 0:
            raise InvalidInputError("dual step sizes must be nonnegative")
        if not self.tol > 0:
            raise InvalidInputError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be at least 1")
        if self.ns_every < 1:
            raise InvalidInputError("ns_every must be at least 1")
        if not self.ns_tol > 0:
            raise InvalidInputError(f"ns_tol must be positive, got {self.ns_tol}")
        if self.ns_max_iters < 1:
            raise InvalidInputError("ns_max_iters must be at least 1")

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.value if isinstance(v, Enum) else v
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SolverConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidInputError(
                f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)


@dataclass
class SolverState:
    """Working arrays of one decomposition; mutated in place by the ops."""

    mode_spectra: np.ndarray
    omegas: np.ndarray
    lambda_spectrum: np.ndarray
    gamma: np.ndarray
    gram_prev: np.ndarray
    omega_grid: np.ndarray
    weights: np.ndarray
    iteration: int = 0


@dataclass(frozen=True)
class ModeSet:
    """Decomposition result: modes sorted by center frequency plus what is
    left over. modes[i] + ... + modes[k-1] + residual reproduces the input
    samples exactly."""

    modes: tuple
    omegas_hz: tuple
    residual: SampledSignal
    # None for sets deserialized from disk, where only samples survive
    report: Optional[DecompositionReport]

    @property
    def k(self) -> int:
        return len(self.modes)


@dataclass(frozen=True)
class KSelectionEntry:
    k: int
    report: Optional[DecompositionReport]
    score: float
    error: Optional[Exception]


def _as_coeffs(spectrum) -> np.ndarray:
    coeffs = getattr(spectrum, "coefficients", spectrum)
    return np.ascontiguousarray(coeffs, dtype=np.complex128)


def wiener_mode_update(state: SolverState, k: int, input_spectrum,
                       config: SolverConfig) -> np.ndarray:
    """New spectrum for mode k given the other rows of state.mode_spectra."""
    spec = _as_coeffs(input_spectrum)
    if config.mode_kind is ModeKind.VMD_BASELINE:
        beta = 0.0
        gamma = np.zeros_like(state.gamma)
    else:
        beta = config.beta
        gamma = np.ascontiguousarray(state.gamma)
    return _kernels.wiener_update(
        np.ascontiguousarray(state.mode_spectra, dtype=np.complex128),
        int(k), spec,
        np.ascontiguousarray(state.lambda_spectrum, dtype=np.complex128),
        np.ascontiguousarray(state.gram_prev), gamma,
        np.ascontiguousarray(state.omega_grid), float(state.omegas[k]),
        config.alpha, beta, config.wiener_form is WienerForm.BANDWIDTH)


def update_center_frequency(spectrum, omega_grid=None) -> float:
    """Power-weighted mean frequency of a mode spectrum.

    Accepts either a coefficient array plus a matching frequency grid, or a
    half spectrum object carrying its own grid (result then in rad/s).
    """
    c = _as_coeffs(spectrum)
    if omega_grid is None:
        omega_grid = spectrum.omegas
    grid = np.ascontiguousarray(omega_grid, dtype=np.float64)
    if c.shape != grid.shape:
        raise InvalidInputError(
            f"spectrum and grid shapes differ: {c.shape} vs {grid.shape}")
    num, den = _kernels.center_of_gravity(c, grid)
    if den <= 0.0:
        raise DegenerateInputError(
            "center frequency undefined for a zero-energy spectrum")
    return num / den


def dual_ascent(state: SolverState, input_spectrum, config: SolverConfig) -> None:
    """Ascend both multipliers and refresh the previous-sweep Gram matrix."""
    spec = _as_coeffs(input_spectrum)
    residual = spec - state.mode_spectra.sum(axis=0)
    state.lambda_spectrum = state.lambda_spectrum + config.tau_lambda * residual
    g = _kernels.weighted_gram(
        np.ascontiguousarray(state.mode_spectra, dtype=np.complex128),
        np.ascontiguousarray(state.weights))
    tau_g = 0.0 if config.mode_kind is ModeKind.VMD_BASELINE else config.tau_gamma
    if tau_g != 0.0:
        off = g - np.diag(np.diag(g))
        state.gamma = state.gamma + tau_g * off
    state.gram_prev = g


def _initial_omegas(fhat, omega_grid, config):
    k = config.k
    uniform = (np.arange(k) + 0.5) * np.pi / k
    if config.omega_init is OmegaInit.ZEROS:
        return np.zeros(k)
    if config.omega_init is OmegaInit.UNIFORM_SPREAD:
        return uniform
    n_bins = omega_grid.size
    power = np.abs(fhat) ** 2
    smooth = np.convolve(power, np.full(5, 0.2), mode="same")
    min_dist = max(1, n_bins // (4 * k))
    picked = []
    for idx in np.argsort(smooth)[::-1]:
        if len(picked) == k:
            break
        if idx == 0 or idx == n_bins - 1:
            continue
        if smooth[idx] < smooth[idx - 1] or smooth[idx] < smooth[idx + 1]:
            continue
        if all(abs(int(idx) - p) >= min_dist for p in picked):
            picked.append(int(idx))
    omegas = [omega_grid[i] for i in picked]
    for u in uniform:
        if len(omegas) == k:
            break
        omegas.append(u)
    return np.sort(np.asarray(omegas, dtype=np.float64))


def decompose(signal: SampledSignal, config: SolverConfig,
              recon_trajectory: Optional[list] = None) -> ModeSet:
    """Decompose signal into config.k modes.

    recon_trajectory, when given a list, receives the per-sweep relative
    reconstruction error. Raises InvalidInputError for signals shorter than
    2k samples, DegenerateInputError for zero energy, DegenerateModesError /
    ConvergenceError when the orthogonalizing projection breaks down.
    """
    t0 = time.perf_counter_ns()
    samples = np.asarray(signal.samples, dtype=np.float64)
    n = samples.size
    if n < 2 * config.k:
        raise InvalidInputError(
            f"signal of {n} samples is too short for k={config.k}; "
            f"need at least {2 * config.k}")
    energy = float(np.dot(samples, samples))
    if energy <= 0.0:
        raise DegenerateInputError("cannot decompose a zero-energy signal")
    scale = float(np.sqrt(energy))
    work = samples / scale

    if config.mirror_boundary:
        pad = n // 2
        ext = np.concatenate((work[:pad][::-1], work, work[n - pad:][::-1]))
        off = pad
    else:
        ext = work
        off = 0
    m = ext.size

    fhat = np.fft.rfft(ext)
    n_bins = fhat.size
    interior_stop = n_bins - 1 if m % 2 == 0 else n_bins
    fhat[1:interior_stop] *= 2.0
    omega_grid = np.arange(n_bins) * (2.0 * np.pi / m)
    weights = parseval_weights(n_bins, m)
    omegas0 = _initial_omegas(fhat, omega_grid, config)

    is_baseline = config.mode_kind is ModeKind.VMD_BASELINE
    project = config.mode_kind is ModeKind.COMD_PROJECTED
    (mode_spectra, omegas, _lam, _gamma, sweeps, ns_total, trace, status,
     fail_sweep, ns_dev) = _kernels.run_decomposition(
        fhat, omega_grid, weights, omegas0,
        config.alpha, 0.0 if is_baseline else config.beta,
        config.tau_lambda, 0.0 if is_baseline else config.tau_gamma,
        config.tol, config.max_iters, config.ns_every, config.ns_tol,
        config.ns_max_iters, config.sweep_order is SweepOrder.JACOBI,
        project, config.reset_multipliers,
        config.wiener_form is WienerForm.BANDWIDTH)
    if status == _kernels.RUN_DEGENERATE:
        raise DegenerateModesError(
            f"mode system became degenerate at sweep {fail_sweep}")
    if status == _kernels.RUN_NS_FAIL:
        raise ConvergenceError(
            f"orthogonalizing projection did not converge at sweep {fail_sweep}",
            final_offdiag=float(ns_dev), iterations=int(fail_sweep))
    if recon_trajectory is not None:
        recon_trajectory.extend(trace[:sweeps].tolist())

    stack = np.empty((config.k, n))
    for i in range(config.k):
        half = mode_spectra[i].copy()
        half[1:interior_stop] *= 0.5
        stack[i] = np.fft.irfft(half, m)[off:off + n]
    stack *= scale

    if project:
        g = stack @ stack.T
        g = 0.5 * (g + g.T)
        p, its, dev, st = _kernels.ns_mixing(g, config.ns_tol,
                                             config.ns_max_iters)
        if st == _kernels.NS_DEGENERATE:
            raise DegenerateModesError(
                "final mode system is degenerate (a zero-energy or parallel mode)")
        if st == _kernels.NS_NO_CONVERGE:
            raise ConvergenceError(
                "final orthogonalizing projection did not converge",
                final_offdiag=float(dev), iterations=int(its))
        if st == _kernels.NS_OK:
            stack = p @ stack
            ns_total += its

    order = np.argsort(omegas, kind="stable")
    stack = stack[order]
    omegas = omegas[order]

    fs = signal.sample_rate_hz
    mode_signals = tuple(SampledSignal(stack[i].copy(), fs)
                         for i in range(config.k))
    residual = SampledSignal(samples - stack.sum(axis=0), fs)
    recon_rel = float(np.linalg.norm(residual.samples) / scale)

    bandwidths = []
    for i in range(config.k):
        if float(np.dot(stack[i], stack[i])) <= 0.0:
            bandwidths.append(0.0)
            continue
        spec_i = analytic_spectrum(mode_signals[i])
        bandwidths.append(bandwidth(spec_i, float(omegas[i]) * fs).b_squared)

    orth = gram(list(mode_signals)).normalized_offdiag()
    report = DecompositionReport(
        recon_rel_error=recon_rel,
        orth_residual=float(orth),
        bandwidths=tuple(bandwidths),
        omegas_hz=tuple(float(w) * fs / (2.0 * np.pi) for w in omegas),
        iterations=int(sweeps),
        ns_iterations_total=int(ns_total),
        wall_time_us=(time.perf_counter_ns() - t0) / 1000.0,
    )
    return ModeSet(modes=mode_signals, omegas_hz=report.omegas_hz,
                   residual=residual, report=report)


def selection_score(mode_set: ModeSet, recon_weight: float = 1.0,
                    bandwidth_weight: float = 0.1,
                    orth_weight: float = 1.0) -> float:
    """Smaller is better: reconstruction error plus mean normalized mode
    variance plus orthogonality residual. A mode holding less than 1e-9 of
    the total mode energy counts with the worst possible variance, so
    superfluous modes are never free."""
    report = mode_set.report
    fs = mode_set.residual.sample_rate_hz
    energies = [float(np.dot(m.samples, m.samples)) for m in mode_set.modes]
    total = sum(energies)
    worst = np.pi ** 2 / 4.0
    variances = []
    for e, b in zip(energies, report.bandwidths):
        if total <= 0.0 or e / total < 1e-9:
            variances.append(worst)
        else:
            variances.append(min(b / fs ** 2, worst))
    return (recon_weight * report.recon_rel_error
            + bandwidth_weight * float(np.mean(variances))
            + orth_weight * report.orth_residual)


def select_k_grid(signal: SampledSignal, k_grid, config: SolverConfig,
                  recon_weight: float = 1.0, bandwidth_weight: float = 0.1,
                  orth_weight: float = 1.0):
    """Decompose at every k in k_grid and pick the best score.

    Returns (best_k, entries) where entries preserves grid order and records
    per-k failures instead of raising them. Ties go to the smaller k.
    """
    ks = list(k_grid)
    if not ks:
        raise InvalidInputError("k grid is empty")
    entries = []
    for k in ks:
        try:
            cfg = replace(config, k=int(k))
            mode_set = decompose(signal, cfg)
        except ComdError as exc:
            entries.append(KSelectionEntry(k=int(k), report=None,
                                           score=float("inf"), error=exc))
            continue
        score = selection_score(mode_set, recon_weight, bandwidth_weight,
                                orth_weight)
        entries.append(KSelectionEntry(k=int(k), report=mode_set.report,
                                       score=score, error=None))
    best_k = None
    best = float("inf")
    for entry in sorted(entries, key=lambda e: e.k):
        if entry.score < best:
            best = entry.score
            best_k = entry.k
    if best_k is None:
        raise DegenerateInputError(
            "no k in the grid produced a usable decomposition")
    return best_k, entries
