"""Single-mode Fock-space numerics.

States are numpy arrays of complex amplitudes over levels 0..n_max
(dimension n_max+1); norms may be < 1 for subnormalized post-measurement
branches. Operators are either diagonal arrays or dense matrices.
"""

import numpy as np
from scipy.special import gammaln

from .errors import CutoffTooSmallError, ZeroNormError

# probability weight allowed on the top 5 levels of a leak-checked vector
LEAK_TOL = 1e-10


def cutoff_for(mean_occ, margin=1.0):
    """Cutoff n_max for a state with mean occupation mean_occ.

    m + 8*sqrt(m) + 20 keeps the Gaussian tail weight below LEAK_TOL;
    margin scales the headroom (margin=0 leaves the bare mean, which fails
    the leak check — used to exercise the cutoff-too-small path).
    """
    m = max(float(mean_occ), 0.0)
    return int(np.ceil(m + margin * (8.0 * np.sqrt(m) + 20.0)))


def leak_fraction(amps):
    """Fraction of the vector's weight sitting on its top five levels."""
    total = float(np.sum(np.abs(amps) ** 2))
    if total == 0.0:
        return 0.0
    return float(np.sum(np.abs(amps[-5:]) ** 2)) / total


def check_leak(amps, what):
    leak = leak_fraction(amps)
    if leak > LEAK_TOL:
        raise CutoffTooSmallError(
            f"cutoff too small for {what}: top-5-level weight {leak:.3e} > {LEAK_TOL:.0e}"
        )
    return leak


def coherent_vector(gamma, n_max, leak_check=True):
    """amps[n] = e^{-|g|^2/2} g^n / sqrt(n!) for levels 0..n_max.

    Evaluated in the log domain: the n=0 seed of the direct recurrence
    underflows once |g|^2 > ~1400, while log magnitudes stay modest.
    """
    gamma = complex(gamma)
    dim = n_max + 1
    if gamma == 0:
        amps = np.zeros(dim, dtype=complex)
        amps[0] = 1.0
        return amps
    n = np.arange(dim)
    logmag = -0.5 * abs(gamma) ** 2 + n * np.log(abs(gamma)) - 0.5 * gammaln(n + 1.0)
    amps = np.exp(logmag + 1j * n * np.angle(gamma))
    if leak_check:
        check_leak(amps, f"coherent state gamma={gamma:.6g}")
    return amps


def cat_normalization(gamma, bit):
    """Exact cat normalization 1/sqrt(2(1 +/- e^{-2|g|^2}))."""
    x = 2.0 * abs(gamma) ** 2
    if bit == 0:
        return 1.0 / np.sqrt(2.0 * (1.0 + np.exp(-x)))
    s = -np.expm1(-x)  # 1 - e^{-x} without cancellation at small |g|
    if s <= 0.0:
        raise ZeroNormError("odd cat has zero norm at gamma=0")
    return 1.0 / np.sqrt(2.0 * s)


def cat_vector(gamma, bit, n_max, leak_check=True):
    """Even (bit=0) or odd (bit=1) cat of +/-gamma, exactly normalized.

    Wrong-parity levels are exact zeros by construction, not cancellation
    residue.
    """
    coh = coherent_vector(gamma, n_max, leak_check=leak_check)
    amps = np.zeros_like(coh)
    keep = np.arange(n_max + 1) % 2 == bit
    amps[keep] = 2.0 * cat_normalization(gamma, bit) * coh[keep]
    return amps


def coherent_weights(gamma):
    """(w0, w1) with |gamma> = w0|0_L> + w1|1_L> and |-gamma> = w0|0_L> - w1|1_L>."""
    x = 2.0 * abs(gamma) ** 2
    w0 = np.sqrt((1.0 + np.exp(-x)) / 2.0)
    w1 = np.sqrt(-np.expm1(-x) / 2.0)
    return w0, w1


def coherent_overlap(gamma1, gamma2):
    """<gamma1|gamma2> = exp(-|g1|^2/2 - |g2|^2/2 + conj(g1)*g2)."""
    gamma1 = complex(gamma1)
    gamma2 = complex(gamma2)
    return np.exp(
        -0.5 * abs(gamma1) ** 2 - 0.5 * abs(gamma2) ** 2 + np.conj(gamma1) * gamma2
    )


def destroy_matrix(n_max):
    """Annihilation operator a on levels 0..n_max."""
    dim = n_max + 1
    a = np.zeros((dim, dim), dtype=complex)
    n = np.arange(1, dim)
    a[n - 1, n] = np.sqrt(n)
    return a


def displacement(gamma, n_max):
    """Matrix of D(gamma) = exp(gamma a^dag - conj(gamma) a) on levels 0..n_max.

    Exponentiated through the Hermitian eigendecomposition of the truncated
    generator, so the block is unitary to machine precision everywhere
    (a row-truncated exact D is not unitary near the cutoff).
    """
    a = destroy_matrix(n_max)
    h = -1j * (gamma * a.conj().T - np.conj(gamma) * a)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)) @ v.conj().T


def parity_projector(sigma, n_max):
    """Diagonal of the ideal parity projector: 1 on levels with (-1)^n = sigma.

    sigma is +1 or -1.
    """
    n = np.arange(n_max + 1)
    return np.where((n % 2 == 0) == (sigma > 0), 1.0, 0.0).astype(complex)


def parity_phase_diag(n_max):
    """Diagonal of e^{-i pi n}: +1 on even, -1 on odd levels (the Z correction)."""
    n = np.arange(n_max + 1)
    return np.where(n % 2 == 0, 1.0, -1.0).astype(complex)


def dispersive_diag(tau, k_plus, k_minus, n_max):
    """diag[n] = sqrt(C(N,k+)) cos^{k+}(n tau) sin^{k-}(n tau), N = k+ + k-.

    Pointer phase fixed to zero. Log-domain products keep N=1000 powers
    finite; zeros of a positive-exponent factor give exact zeros. Values
    are bounded by 1 since the squared diagonals sum to 1 over k+.
    """
    if k_plus < 0 or k_minus < 0:
        raise ValueError("measurement counts must be nonnegative")
    dim = n_max + 1
    n_levels = np.arange(dim)
    big_n = k_plus + k_minus
    logmag = np.full(
        dim,
        0.5 * (gammaln(big_n + 1.0) - gammaln(k_plus + 1.0) - gammaln(k_minus + 1.0)),
    )
    sign = np.ones(dim)
    with np.errstate(divide="ignore"):
        if k_plus > 0:
            c = np.cos(n_levels * tau)
            logmag = logmag + k_plus * np.log(np.abs(c))
            sign = sign * np.where(c > 0, 1.0, np.where(c < 0, (-1.0) ** k_plus, 0.0))
        if k_minus > 0:
            s = np.sin(n_levels * tau)
            logmag = logmag + k_minus * np.log(np.abs(s))
            sign = sign * np.where(s > 0, 1.0, np.where(s < 0, (-1.0) ** k_minus, 0.0))
    return (sign * np.exp(logmag)).astype(complex)


def gaussian_peak_center(k_plus, k_minus):
    """Peak location x of the Gaussian envelope of the (k+,k-) record: n* = x/tau."""
    big_n = k_plus + k_minus
    if big_n < 1:
        raise ValueError("need at least one measurement")
    return 0.5 * np.arccos((k_plus - k_minus) / big_n)


def optimal_tau(alpha, beta, xi):
    """Interaction time pi/(xi*(|alpha|^2+|beta|^2)); xi near 2 maximizes fidelity."""
    if xi <= 0:
        raise ValueError("xi must be positive")
    nbar = abs(alpha) ** 2 + abs(beta) ** 2
    if nbar == 0:
        raise ValueError("alpha and beta cannot both vanish")
    return np.pi / (xi * nbar)
