"""Photon-loss channel on the measured interference mode and the
loss-averaged teleportation fidelity.

The channel is the standard beam-splitter loss model with transmissivity
gamma (1 - gamma is the loss probability): Kraus operators
A_k = sum_n sqrt(C(n,k)) gamma^((n-k)/2) (1-gamma)^(k/2) |n-k><n|.
On a coherent amplitude the action is exact,
A_k|g> = e^{-(1-gamma)|g|^2/2} (sqrt(1-gamma) g)^k / sqrt(k!) |sqrt(gamma) g>,
so the branch engine stays in the label algebra.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

from . import engine, focknum, protocol
from .errors import ConfigError, CutoffTooSmallError

# truncate the Kraus sum once the collected weight reaches 1 - this
KRAUS_WEIGHT_TOL = 1e-10


def _check_gamma(gamma):
    if not 0.0 < gamma <= 1.0:
        raise ConfigError(f"transmissivity gamma must be in (0, 1], got {gamma}")


def kraus_operator(gamma, k, n_max):
    """Matrix of A_k on the (n_max+1)-dimensional Fock block."""
    _check_gamma(gamma)
    if k < 0:
        raise ConfigError("Kraus index k must be nonnegative")
    dim = n_max + 1
    out = np.zeros((dim, dim))
    if gamma == 1.0:
        if k == 0:
            np.fill_diagonal(out, 1.0)
        return out
    n = np.arange(k, dim)
    log_c = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    log_w = 0.5 * (log_c + (n - k) * np.log(gamma) + k * np.log1p(-gamma))
    out[n - k, n] = np.exp(log_w)
    return out


def k_max_for(gamma, n_max, tol=KRAUS_WEIGHT_TOL):
    """Smallest Kraus truncation whose dropped weight is below tol for every
    occupation up to n_max (the worst case is the n_max binomial tail)."""
    _check_gamma(gamma)
    if gamma == 1.0:
        return 0
    k = int(np.ceil((1 - gamma) * n_max))
    while binom.sf(k, n_max, 1.0 - gamma) >= tol:
        k += 1
    return k


@dataclass(frozen=True)
class LossChannel:
    gamma: float
    k_max: int

    def __post_init__(self):
        _check_gamma(self.gamma)
        if self.k_max < 0:
            raise ConfigError("k_max must be nonnegative")

    @classmethod
    def for_block(cls, gamma, n_max, tol=KRAUS_WEIGHT_TOL):
        return cls(gamma, k_max_for(gamma, n_max, tol))

    def operators(self, n_max):
        return [kraus_operator(self.gamma, k, n_max) for k in range(self.k_max + 1)]

    def completeness_defect(self, n_max):
        """max |sum_k A_k^dag A_k - I| over the Fock block."""
        total = sum(a.T @ a for a in self.operators(n_max))
        return float(np.max(np.abs(total - np.eye(n_max + 1))))


def _label_prefactor(gamma, k, label):
    """A_k coherent prefactor e^{-(1-g)|l|^2/2} (sqrt(1-g) l)^k / sqrt(k!)."""
    if gamma == 1.0:
        return 1.0 + 0j if k == 0 else 0.0j
    mag = abs(label)
    if mag == 0.0:
        return 1.0 + 0j if k == 0 else 0.0j
    log_mag = (
        -(1.0 - gamma) * mag * mag / 2.0
        + k * (0.5 * np.log1p(-gamma) + np.log(mag))
        - 0.5 * gammaln(k + 1)
    )
    return np.exp(log_mag + 1j * k * np.angle(label))


def apply_loss_branch(state, gamma, k):
    """A_k on mode a of a branch state (unnormalized result)."""
    root = np.sqrt(gamma)
    out = []
    for coeff, factors in state.branches:
        f = factors[0]
        if isinstance(f, engine.Coherent):
            pref = _label_prefactor(gamma, k, f.label)
            if pref == 0.0:
                continue
            nf = engine.Coherent(root * f.label, f.phase)
            out.append((coeff * pref, (nf,) + factors[1:]))
        else:
            mat = kraus_operator(gamma, k, len(f.vec) - 1)
            out.append((coeff, (engine.Explicit(mat @ f.vec),) + factors[1:]))
    return engine.BranchState(tuple(out))


def apply_loss_dense(state, gamma, k):
    mat = kraus_operator(gamma, k, state.dims[0] - 1)
    amps = np.tensordot(mat, state.amps, axes=(1, 0))
    return engine.DenseState(amps)


def _max_occupation(state):
    if isinstance(state, engine.BranchState):
        occ = 0.0
        for _, factors in state.branches:
            f = factors[0]
            if isinstance(f, engine.Coherent):
                occ = max(occ, abs(f.label) ** 2)
            else:
                occ = max(occ, float(len(f.vec) - 1))
        return occ
    return float(state.dims[0] - 1)


def lossy_run(cfg, gamma, outcomes=None):
    """Kraus-resolved teleportation: returns (f_av, weights, fidelities) with
    weights p_k = <psi|A_k^dag A_k|psi> on the post-parity state and f_av =
    sum_k p_k F^k. The k sum stops at collected weight 1 - 1e-10."""
    _check_gamma(gamma)
    if cfg.variant != 1:
        raise ConfigError("the loss average is defined for variant 1")
    if outcomes is None:
        outcomes = protocol.Outcomes(sigma_a=1, sigma_b=1)
    if outcomes.sigma_a is None or outcomes.sigma_b is None:
        raise ConfigError("variant 1 needs sigma_a and sigma_b outcomes")

    state = protocol.second_bs(
        protocol.entangle_resource(protocol.prepare_initial(cfg))
    )
    state, p_parity = protocol.measure_variant1(
        state, outcomes.sigma_a, outcomes.sigma_b
    )
    n0 = state.norm_sq()
    is_branch = isinstance(state, engine.BranchState)

    mean_lost = (1.0 - gamma) * _max_occupation(state)
    k_hard = int(np.ceil(mean_lost + 12 * np.sqrt(mean_lost + 1) + 30))
    weights = []
    fids = []
    collected = 0.0
    for k in range(k_hard + 1):
        lossy = (
            apply_loss_branch(state, gamma, k)
            if is_branch
            else apply_loss_dense(state, gamma, k)
        )
        p_k = lossy.norm_sq() / n0
        if p_k > 0.0:
            scale = 1.0 / np.sqrt(p_k * n0)
            if is_branch:
                lossy = engine.BranchState(
                    tuple((c * scale, f) for c, f in lossy.branches)
                )
                lossy = engine.prune_branches(lossy)
            else:
                lossy = engine.DenseState(lossy.amps * scale)
            fid = protocol.finish_teleport(lossy, cfg, outcomes, p_parity).fidelity
        else:
            fid = 0.0
        weights.append(p_k)
        fids.append(fid)
        collected += p_k
        if collected > 1.0 - KRAUS_WEIGHT_TOL:
            break
    else:
        raise CutoffTooSmallError(
            f"Kraus sum collected only {collected:.12f} of the weight by k={k_hard}"
        )
    weights = np.asarray(weights)
    fids = np.asarray(fids)
    return float(weights @ fids), weights, fids


def lossy_fidelity(cfg, gamma, outcomes=None):
    """Loss-averaged fidelity F_av = sum_k p_k F^k (variant 1, loss on mode a
    right after the parity measurement)."""
    return lossy_run(cfg, gamma, outcomes)[0]
