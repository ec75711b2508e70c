"""Gram matrices and Newton-Schulz orthogonalization.

The projection drives the Gram of a mode system to a diagonal matrix by the
iteration m <- (1.5*I - 0.5*G) m on globally normalized modes, then rescales
each output mode back to its pre-projection energy (diagonal scaling keeps
the off-diagonals at zero). The same K x K mixing matrix serves the
time-domain and the per-frequency-bin variants.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import NS_DEGENERATE, NS_IDENTITY, NS_NO_CONVERGE, ns_mixing
from .errors import ConvergenceError, DegenerateModesError, InvalidInputError
from .spectral import HalfSpectrum, SampledSignal, parseval_weights

__all__ = [
    "GramMatrix",
    "ProjectionOutcome",
    "gram",
    "newton_schulz_project",
    "per_frequency_orthogonalize",
]

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 30


@dataclass(frozen=True)
class GramMatrix:
    """K x K matrix of pairwise mode inner products."""

    entries: np.ndarray
    k: int

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.float64)
        k = int(self.k)
        if arr.shape != (k, k):
            raise InvalidInputError(f"expected shape ({k}, {k}), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("Gram entries must be finite")
        if not np.array_equal(arr, arr.T):
            raise InvalidInputError("Gram matrix must be exactly symmetric")
        if np.any(np.diag(arr) < 0):
            raise InvalidInputError("Gram diagonal must be non-negative")
        trace = float(np.trace(arr))
        if k > 0 and np.linalg.eigvalsh(arr)[0] < -1e-10 * max(trace, 1.0):
            raise InvalidInputError("Gram matrix must be positive semidefinite")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "k", k)

    @classmethod
    def from_modes(cls, modes) -> "GramMatrix":
        stack = _mode_stack(modes)
        return cls(_pairwise(stack.real, np.ones(1)), len(modes))

    @classmethod
    def from_spectra(cls, spectra) -> "GramMatrix":
        stack = _spectra_stack(spectra)
        w = parseval_weights(spectra[0].n_bins, spectra[0].origin_length)
        return cls(_pairwise(stack, w), len(spectra))

    def normalized_offdiag(self) -> float:
        """Max |G_ij| / sqrt(G_ii * G_jj) over i != j; 0 for K = 1."""
        if self.k <= 1:
            return 0.0
        diag = np.diag(self.entries)
        if np.any(diag == 0):
            # a zero-energy mode is orthogonal to everything by convention
            diag = np.where(diag == 0, 1.0, diag)
        scale = np.sqrt(np.outer(diag, diag))
        off = np.abs(self.entries) / scale
        np.fill_diagonal(off, 0.0)
        return float(min(off.max(), 1.0))


@dataclass(frozen=True)
class ProjectionOutcome:
    """Result of a Newton-Schulz projection.

    `transform` is the K x K mixing matrix: output stack = transform @ input
    stack, so outputs are exact linear combinations of the inputs.
    """

    modes: list
    iterations: int
    final_offdiag: float
    transform: np.ndarray


def _pairwise(stack, weights):
    """Weighted pairwise real inner products; symmetric by mirrored fill."""
    k = stack.shape[0]
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            if np.iscomplexobj(stack):
                v = float(np.sum(weights * (stack[i] * np.conj(stack[j])).real))
            else:
                v = float(np.dot(stack[i], stack[j]) if weights.size == 1
                          else np.sum(weights * stack[i] * stack[j]))
            out[i, j] = v
            out[j, i] = v
    return out


def _mode_stack(modes) -> np.ndarray:
    if len(modes) < 1:
        raise InvalidInputError("need at least one mode")
    n = modes[0].n
    fs = modes[0].sample_rate_hz
    for m in modes[1:]:
        if m.n != n:
            raise InvalidInputError(f"mode length mismatch: {m.n} vs {n}")
        if m.sample_rate_hz != fs:
            raise InvalidInputError("mode sample rates differ")
    return np.vstack([m.samples for m in modes])


def _spectra_stack(spectra) -> np.ndarray:
    if len(spectra) < 1:
        raise InvalidInputError("need at least one spectrum")
    first = spectra[0]
    for s in spectra[1:]:
        if s.n_bins != first.n_bins or s.origin_length != first.origin_length:
            raise InvalidInputError("spectra are on different bin grids")
        if abs(s.bin_width_rad_s - first.bin_width_rad_s) > 1e-12 * first.bin_width_rad_s:
            raise InvalidInputError("spectra have different bin widths")
    return np.vstack([s.coefficients for s in spectra])


def gram(modes) -> GramMatrix:
    """Time-domain Gram matrix of a mode system."""
    return GramMatrix.from_modes(modes)


def _run_mixing(entries, tol, max_iters, k):
    transform, iterations, dev, status = ns_mixing(
        np.ascontiguousarray(entries, dtype=np.float64), float(tol), int(max_iters))
    if status == NS_DEGENERATE:
        raise DegenerateModesError(
            "mode system is rank deficient (Gram min eigenvalue <= 1e-12 x trace); "
            "orthogonalization undefined")
    if status == NS_NO_CONVERGE:
        raise ConvergenceError(
            f"projection did not reach tol={tol} within {max_iters} iterations "
            f"(residual {dev:.3e})",
            final_offdiag=float(dev), iterations=int(iterations))
    return transform, int(iterations), float(dev), status


def newton_schulz_project(modes, max_iters: int = DEFAULT_MAX_ITERS,
                          tol: float = DEFAULT_TOL) -> ProjectionOutcome:
    """Orthogonalize real modes; per-mode energies are preserved.

    Already-orthogonal systems are returned unchanged with iterations = 0.
    """
    stack = _mode_stack(modes)
    k = len(modes)
    entries = _pairwise(stack, np.ones(1))
    transform, iterations, dev, status = _run_mixing(entries, tol, max_iters, k)
    if status == NS_IDENTITY:
        return ProjectionOutcome(list(modes), 0, dev, np.eye(k))
    out_stack = transform @ stack
    out_gram = GramMatrix(_pairwise(out_stack, np.ones(1)), k)
    fs = modes[0].sample_rate_hz
    out_modes = [SampledSignal(row, fs) for row in out_stack]
    return ProjectionOutcome(out_modes, iterations, out_gram.normalized_offdiag(),
                             transform)


def per_frequency_orthogonalize(spectra, max_iters: int = DEFAULT_MAX_ITERS,
                                tol: float = DEFAULT_TOL) -> list:
    """Apply one Newton-Schulz mixing matrix to the coefficient vector at
    every frequency bin.

    The mixing matrix comes from the frequency-integrated Gram, so this is
    the spectral twin of newton_schulz_project: it cannot move energy across
    bins, only across modes within a bin; bins where every mode is zero stay
    exactly zero.
    """
    stack = _spectra_stack(spectra)
    k = len(spectra)
    w = parseval_weights(spectra[0].n_bins, spectra[0].origin_length)
    entries = _pairwise(stack, w)
    transform, iterations, dev, status = _run_mixing(entries, tol, max_iters, k)
    if status == NS_IDENTITY:
        return list(spectra)
    out_stack = transform @ stack
    first = spectra[0]
    return [HalfSpectrum(row, first.bin_width_rad_s, first.origin_length)
            for row in out_stack]
