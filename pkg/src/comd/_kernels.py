"""Numba-compiled numerical kernels.

Single implementation shared by the public orthogonalization API and the
decomposition solver's hot loop. Kernels are written as plain loops so they
run identically (only slower) with NUMBA_DISABLE_JIT=1 or without numba.
"""
import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


NS_OK = 0
NS_DEGENERATE = 1
NS_NO_CONVERGE = 2
NS_IDENTITY = 3


@njit(cache=True)
def ns_mixing(gram, tol, max_iters):
    """Newton-Schulz mixing matrix for a mode system with Gram matrix `gram`.

    Returns (transform, iterations, deviation, status). On NS_OK the
    transform maps the input mode stack to an orthogonal stack whose
    per-mode energies equal the input energies (global normalization,
    C = 1.5*I - 0.5*G iteration, then diagonal rescale). On NS_IDENTITY the
    input was already orthogonal within tol and the transform is exactly I.
    """
    k = gram.shape[0]
    identity = np.eye(k)
    for i in range(k):
        if gram[i, i] <= 0.0:
            return identity, 0, 0.0, NS_DEGENERATE
    offdiag0 = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            v = abs(gram[i, j]) / np.sqrt(gram[i, i] * gram[j, j])
            if v > offdiag0:
                offdiag0 = v
    if offdiag0 <= tol:
        return identity, 0, offdiag0, NS_IDENTITY

    trace = 0.0
    for i in range(k):
        trace += gram[i, i]
    gn = gram / trace
    eigs = np.linalg.eigvalsh(gn)
    # iteration basin: eigenvalues of the normalized Gram must sit in (0, 2)
    if eigs[0] <= 1e-12:
        return identity, 0, offdiag0, NS_DEGENERATE
    if eigs[k - 1] >= 2.0:
        return identity, 0, offdiag0, NS_NO_CONVERGE

    transform = identity / np.sqrt(trace)
    gm = gn.copy()
    iterations = 0
    dev = offdiag0
    for _ in range(max_iters):
        c = 1.5 * identity - 0.5 * gm
        transform = c @ transform
        gm = c @ gm @ c
        iterations += 1
        dev = 0.0
        for i in range(k):
            d = abs(gm[i, i] - 1.0)
            if d > dev:
                dev = d
            for j in range(i + 1, k):
                if abs(gm[i, j]) > dev:
                    dev = abs(gm[i, j])
        if dev <= tol:
            break
    if dev > tol:
        return transform, iterations, dev, NS_NO_CONVERGE

    out = np.empty((k, k))
    for i in range(k):
        scale = np.sqrt(gram[i, i])
        for j in range(k):
            out[i, j] = scale * transform[i, j]
    return out, iterations, dev, NS_OK


@njit(cache=True)
def wiener_update(src, k, fhat, lam, gram_prev, gamma, omega_grid, omega_k,
                  alpha, beta, bandwidth_form):
    """Quadratic-penalty mode update for mode k against the rows of src.

    gram_prev holds mode inner products from the previous sweep; gamma the
    orthogonality multipliers. bandwidth_form selects the 2*(w-wk)^2/alpha
    denominator; the alternative is the 2*alpha*(w-wk)^2 scaling.
    """
    n_modes = src.shape[0]
    n_bins = fhat.shape[0]
    out = np.empty(n_bins, dtype=np.complex128)
    inv_two_alpha = 1.0 / (2.0 * alpha)
    for b in range(n_bins):
        acc = fhat[b] + lam[b] * inv_two_alpha
        for i in range(n_modes):
            if i != k:
                coupling = (beta * gram_prev[k, i] + 0.5 * gamma[k, i]) / alpha
                acc = acc - src[i, b] - coupling * src[i, b]
        d = omega_grid[b] - omega_k
        if bandwidth_form:
            den = 1.0 + 2.0 * d * d / alpha
        else:
            den = 1.0 + 2.0 * alpha * d * d
        out[b] = acc / den
    return out


@njit(cache=True)
def center_of_gravity(coeffs, omega_grid):
    """Power-weighted frequency sums. Returns (numerator, denominator)."""
    num = 0.0
    den = 0.0
    for b in range(coeffs.shape[0]):
        p = coeffs[b].real * coeffs[b].real + coeffs[b].imag * coeffs[b].imag
        num += omega_grid[b] * p
        den += p
    return num, den


@njit(cache=True)
def weighted_gram(modes, weights):
    """Real inner-product matrix of complex half-spectrum rows."""
    n_modes = modes.shape[0]
    n_bins = modes.shape[1]
    g = np.zeros((n_modes, n_modes))
    for i in range(n_modes):
        for j in range(i, n_modes):
            acc = 0.0
            for b in range(n_bins):
                acc += weights[b] * (modes[i, b].real * modes[j, b].real
                                     + modes[i, b].imag * modes[j, b].imag)
            g[i, j] = acc
            g[j, i] = acc
    return g


@njit(cache=True)
def apply_mixing(modes, p):
    """Left-multiply the mode stack by mixing matrix p, in place."""
    n_modes = modes.shape[0]
    n_bins = modes.shape[1]
    tmp = np.empty(n_modes, dtype=np.complex128)
    for b in range(n_bins):
        for i in range(n_modes):
            acc = 0.0 + 0.0j
            for j in range(n_modes):
                acc += p[i, j] * modes[j, b]
            tmp[i] = acc
        for i in range(n_modes):
            modes[i, b] = tmp[i]


RUN_OK = 0
RUN_DEGENERATE = 1
RUN_NS_FAIL = 2


@njit(cache=True)
def run_decomposition(fhat, omega_grid, weights, omegas_init, alpha, beta,
                      tau_lambda, tau_gamma, tol, max_iters, ns_every, ns_tol,
                      ns_max_iters, jacobi, project, reset_multipliers,
                      bandwidth_form):
    """Full ADMM loop over the half spectrum fhat.

    Returns (modes, omegas, lam, gamma, sweeps, ns_total, trace, status,
    fail_sweep, ns_dev). trace holds the relative reconstruction error per
    sweep; only the first `sweeps` entries are meaningful. status is RUN_OK,
    RUN_DEGENERATE (mixing degenerate at sweep fail_sweep) or RUN_NS_FAIL
    (mixing did not converge, last deviation in ns_dev).
    """
    n_modes = omegas_init.shape[0]
    n_bins = fhat.shape[0]
    modes = np.zeros((n_modes, n_bins), dtype=np.complex128)
    lam = np.zeros(n_bins, dtype=np.complex128)
    gamma = np.zeros((n_modes, n_modes))
    gram_prev = np.zeros((n_modes, n_modes))
    omegas = omegas_init.copy()
    trace = np.zeros(max_iters)
    eps = 2.220446049250313e-16

    input_energy = 0.0
    for b in range(n_bins):
        input_energy += weights[b] * (fhat[b].real * fhat[b].real
                                      + fhat[b].imag * fhat[b].imag)

    sweeps = 0
    ns_total = 0
    status = RUN_OK
    fail_sweep = -1
    ns_dev = 0.0
    for it in range(max_iters):
        prev = modes.copy()
        for k in range(n_modes):
            if jacobi:
                fresh = wiener_update(prev, k, fhat, lam, gram_prev, gamma,
                                      omega_grid, omegas[k], alpha, beta,
                                      bandwidth_form)
            else:
                fresh = wiener_update(modes, k, fhat, lam, gram_prev, gamma,
                                      omega_grid, omegas[k], alpha, beta,
                                      bandwidth_form)
            modes[k] = fresh
            num, den = center_of_gravity(fresh, omega_grid)
            if den > 0.0:
                omegas[k] = num / den

        resid_energy = 0.0
        for b in range(n_bins):
            r = fhat[b]
            for k in range(n_modes):
                r = r - modes[k, b]
            lam[b] = lam[b] + tau_lambda * r
            resid_energy += weights[b] * (r.real * r.real + r.imag * r.imag)
        trace[it] = np.sqrt(resid_energy / input_energy)

        g = weighted_gram(modes, weights)
        for i in range(n_modes):
            for j in range(n_modes):
                if i != j:
                    gamma[i, j] = gamma[i, j] + tau_gamma * g[i, j]
                gram_prev[i, j] = g[i, j]

        sweeps = it + 1
        if project and sweeps % ns_every == 0:
            p, its, dev, st = ns_mixing(g, ns_tol, ns_max_iters)
            ns_total += its
            ns_dev = dev
            if st == NS_DEGENERATE:
                status = RUN_DEGENERATE
                fail_sweep = sweeps
                break
            if st == NS_NO_CONVERGE:
                status = RUN_NS_FAIL
                fail_sweep = sweeps
                break
            if st == NS_OK:
                apply_mixing(modes, p)
                g2 = weighted_gram(modes, weights)
                for i in range(n_modes):
                    for j in range(n_modes):
                        gram_prev[i, j] = g2[i, j]
                if reset_multipliers:
                    for i in range(n_modes):
                        for j in range(n_modes):
                            gamma[i, j] = 0.0
                    for b in range(n_bins):
                        lam[b] = 0.0 + 0.0j

        chg = 0.0
        for k in range(n_modes):
            dn = 0.0
            pn = 0.0
            for b in range(n_bins):
                dr = modes[k, b].real - prev[k, b].real
                di = modes[k, b].imag - prev[k, b].imag
                dn += dr * dr + di * di
                pn += (prev[k, b].real * prev[k, b].real
                       + prev[k, b].imag * prev[k, b].imag)
            rel = dn / (pn + eps)
            if rel > chg:
                chg = rel
        if chg <= tol:
            break

    return (modes, omegas, lam, gamma, sweeps, ns_total, trace, status,
            fail_sweep, ns_dev)
