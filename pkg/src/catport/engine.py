"""Three-mode state engines.

BranchState is the production engine: a weighted sum of product branches
whose mode factors are exact coherent labels (or explicit Fock vectors
once a measurement forces expansion). All coherent-label operations are
exact in amplitude; truncation enters only at explicit expansion.

DenseState is the oracle engine: an explicit amplitude tensor, usable at
small amplitudes, against which the branch engine is cross-validated.
"""

import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import focknum
from .errors import UnsupportedRepresentationError, ZeroNormError

PRUNE_WEIGHT = 1e-14
LABEL_MERGE_TOL = 1e-12

# Test hook: set CATPORT_FAULT=bs-sign (or flip the module flag) to drop the
# second-mode phase of the dense beam splitter. The result is still unitary,
# so only the cross-engine equivalence check can catch it.
FAULT_BS_SIGN = False


def _bs_fault_active():
    return FAULT_BS_SIGN or os.environ.get("CATPORT_FAULT") == "bs-sign"


# ------------------------------------------------------------- mode factors

class Coherent(NamedTuple):
    label: complex
    phase: complex = 1.0 + 0j  # unit-modulus scalar riding on the normalized ket


class Explicit(NamedTuple):
    vec: np.ndarray


def factor_overlap(bra, ket):
    """<bra|ket> for any factor pair; mixed pairs expand the label at the
    explicit factor's cutoff so truncation is never silently mismatched."""
    if isinstance(bra, Coherent) and isinstance(ket, Coherent):
        return (
            np.conj(bra.phase)
            * ket.phase
            * focknum.coherent_overlap(bra.label, ket.label)
        )
    bv = _factor_vector_like(bra, ket)
    kv = _factor_vector_like(ket, bra)
    n = min(len(bv), len(kv))
    return complex(np.vdot(bv[:n], kv[:n]))


def _factor_vector_like(f, other):
    if isinstance(f, Explicit):
        return f.vec
    dim = len(other.vec) if isinstance(other, Explicit) else 1
    return f.phase * focknum.coherent_vector(f.label, dim - 1, leak_check=False)


def factor_vector(f, dim):
    """Factor as an explicit vector of the given dimension."""
    if isinstance(f, Coherent):
        return f.phase * focknum.coherent_vector(f.label, dim - 1, leak_check=False)
    if len(f.vec) > dim:
        raise ValueError("explicit factor longer than requested dimension")
    out = np.zeros(dim, dtype=complex)
    out[: len(f.vec)] = f.vec
    return out


def factor_norm(f):
    if isinstance(f, Coherent):
        return 1.0
    return float(np.linalg.norm(f.vec))


# ------------------------------------------------------------- branch state

@dataclass(frozen=True)
class BranchState:
    """branches: tuple of (coeff, (factor_a, factor_b, factor_c))."""

    branches: tuple

    @property
    def branch_count(self):
        return len(self.branches)

    def gram(self, other):
        """G[i,j] = <self_i|other_j> over all modes (per branch pair)."""
        g = np.empty((len(self.branches), len(other.branches)), dtype=complex)
        for i, (_, fi) in enumerate(self.branches):
            for j, (_, fj) in enumerate(other.branches):
                v = 1.0 + 0j
                for m in range(len(fi)):
                    v *= factor_overlap(fi[m], fj[m])
                g[i, j] = v
        return g

    def inner(self, other):
        ci = np.array([c for c, _ in self.branches])
        cj = np.array([c for c, _ in other.branches])
        if len(ci) == 0 or len(cj) == 0:
            return 0.0 + 0j
        return complex(np.conj(ci) @ self.gram(other) @ cj)

    def norm_sq(self):
        return max(self.inner(self).real, 0.0)


def bs_labels(gamma1, gamma2):
    """50/50 beam-splitter action on a pair of coherent labels."""
    s = 1.0 / np.sqrt(2.0)
    return ((gamma1 + gamma2) * s, (gamma1 - gamma2) * s)


def apply_bs_branch(state, modes):
    """Beam splitter on two coherent-label factors; no phase is introduced."""
    i, j = modes
    out = []
    for coeff, factors in state.branches:
        fi, fj = factors[i], factors[j]
        if not (isinstance(fi, Coherent) and isinstance(fj, Coherent)):
            raise UnsupportedRepresentationError(
                "beam splitter on the branch engine needs coherent labels"
            )
        li, lj = bs_labels(fi.label, fj.label)
        new = list(factors)
        new[i] = Coherent(li, fi.phase)
        new[j] = Coherent(lj, fj.phase)
        out.append((coeff, tuple(new)))
    return BranchState(tuple(out))


def displace_branch(state, mode, delta):
    """Exact displacement on coherent labels with the tracked scalar phase:
    D(delta)|g> = e^{i Im(delta conj(g))} |g + delta>."""
    out = []
    for coeff, factors in state.branches:
        f = factors[mode]
        if isinstance(f, Coherent):
            phase = f.phase * np.exp(1j * (delta * np.conj(f.label)).imag)
            nf = Coherent(f.label + delta, phase)
        else:
            d = focknum.displacement(delta, len(f.vec) - 1)
            nf = Explicit(d @ f.vec)
        out.append((coeff, tuple(factors[:mode] + (nf,) + factors[mode + 1 :])))
    return BranchState(tuple(out))


def apply_parity_branch(state, mode, sigma):
    """Ideal parity projector: a coherent-label branch splits into the exact
    (|g> + sigma|-g>)/2 pair; explicit factors are masked levelwise."""
    out = []
    for coeff, factors in state.branches:
        f = factors[mode]
        if isinstance(f, Coherent):
            base = coeff * f.phase * 0.5
            for sgn, lbl in ((1.0, f.label), (sigma, -f.label)):
                nf = Coherent(lbl, 1.0 + 0j)
                out.append(
                    (base * sgn, tuple(factors[:mode] + (nf,) + factors[mode + 1 :]))
                )
        else:
            diag = focknum.parity_projector(sigma, len(f.vec) - 1)
            nf = Explicit(diag * f.vec)
            out.append((coeff, tuple(factors[:mode] + (nf,) + factors[mode + 1 :])))
    return prune_branches(BranchState(tuple(out)))


def apply_joint_parity_branch(state, modes, sigma):
    """Joint parity projector (I + sigma P_i P_j)/2 on two coherent factors."""
    i, j = modes
    out = []
    for coeff, factors in state.branches:
        fi, fj = factors[i], factors[j]
        if not (isinstance(fi, Coherent) and isinstance(fj, Coherent)):
            raise UnsupportedRepresentationError(
                "joint parity on the branch engine needs coherent labels"
            )
        base = coeff * fi.phase * fj.phase * 0.5
        for sgn, flip in ((1.0, 1.0), (sigma, -1.0)):
            new = list(factors)
            new[i] = Coherent(flip * fi.label, 1.0 + 0j)
            new[j] = Coherent(flip * fj.label, 1.0 + 0j)
            out.append((base * sgn, tuple(new)))
    return prune_branches(BranchState(tuple(out)))


def apply_diag_branch(state, mode, diag):
    """Diagonal operator; coherent factors are expanded first (leak-checked).

    Returns (state, leak) where leak is the worst expansion tail fraction.
    """
    dim = len(diag)
    leak = 0.0
    out = []
    for coeff, factors in state.branches:
        f = factors[mode]
        if isinstance(f, Coherent):
            vec = factor_vector(f, dim)
            leak = max(leak, focknum.leak_fraction(vec))
            focknum.check_leak(vec, f"expansion of label {f.label:.6g}")
        else:
            vec = factor_vector(f, dim)
        nf = Explicit(diag[: len(vec)] * vec)
        out.append((coeff, tuple(factors[:mode] + (nf,) + factors[mode + 1 :])))
    return BranchState(tuple(out)), leak


def cosine_split_branch(state, mode, tau):
    """cos(n tau) applied exactly on labels: |g> -> (|g e^{i tau}> + |g e^{-i tau}>)/2."""
    rot = np.exp(1j * tau)
    out = []
    for coeff, factors in state.branches:
        f = factors[mode]
        if isinstance(f, Coherent):
            for lbl in (f.label * rot, f.label * np.conj(rot)):
                nf = Coherent(lbl, f.phase)
                out.append(
                    (coeff * 0.5, tuple(factors[:mode] + (nf,) + factors[mode + 1 :]))
                )
        else:
            diag = np.cos(np.arange(len(f.vec)) * tau)
            nf = Explicit(diag * f.vec)
            out.append((coeff, tuple(factors[:mode] + (nf,) + factors[mode + 1 :])))
    return prune_branches(BranchState(tuple(out)))


def apply_matrix_branch(state, mode, matrix):
    """General single-mode operator; coherent factors expand (leak-checked)
    at the matrix dimension. Returns (state, leak)."""
    dim = matrix.shape[1]
    leak = 0.0
    out = []
    for coeff, factors in state.branches:
        f = factors[mode]
        vec = factor_vector(f, dim)
        if isinstance(f, Coherent):
            leak = max(leak, focknum.leak_fraction(vec))
            focknum.check_leak(vec, f"expansion of label {f.label:.6g}")
        nf = Explicit(matrix @ vec)
        out.append((coeff, tuple(factors[:mode] + (nf,) + factors[mode + 1 :])))
    return BranchState(tuple(out)), leak


def scale_branch_phase_diag(state, mode):
    """e^{-i pi n} (parity phase) applied exactly: labels negate, phases keep."""
    out = []
    for coeff, factors in state.branches:
        f = factors[mode]
        if isinstance(f, Coherent):
            nf = Coherent(-f.label, f.phase)
        else:
            nf = Explicit(focknum.parity_phase_diag(len(f.vec) - 1) * f.vec)
        out.append((coeff, tuple(factors[:mode] + (nf,) + factors[mode + 1 :])))
    return BranchState(tuple(out))


def prune_branches(state):
    """Fold factor phases into coefficients, merge coinciding all-coherent
    label tuples, and drop branches below the weight threshold."""
    folded = []
    for coeff, factors in state.branches:
        c = coeff
        new = []
        for f in factors:
            if isinstance(f, Coherent) and f.phase != 1.0:
                c *= f.phase
                f = Coherent(f.label, 1.0 + 0j)
            new.append(f)
        folded.append([c, tuple(new)])

    merged = []
    for c, factors in folded:
        if all(isinstance(f, Coherent) for f in factors):
            hit = False
            for entry in merged:
                c2, f2 = entry
                if all(isinstance(g, Coherent) for g in f2) and all(
                    abs(f.label - g.label) <= LABEL_MERGE_TOL
                    for f, g in zip(factors, f2)
                ):
                    entry[0] = c2 + c
                    hit = True
                    break
            if hit:
                continue
        merged.append([c, factors])

    kept = []
    for c, factors in merged:
        weight = abs(c)
        for f in factors:
            weight *= factor_norm(f)
        if weight >= PRUNE_WEIGHT:
            kept.append((c, factors))
    return BranchState(tuple(kept))


def reduced_density_branch(state, mode, dim):
    """Normalized reduced density matrix on one mode via the branch Gram
    matrix of the remaining modes. Raises on zero norm."""
    branches = state.branches
    n = len(branches)
    if n == 0:
        raise ZeroNormError("state has no branches")
    coeffs = np.array([c for c, _ in branches])
    m = np.outer(coeffs, np.conj(coeffs))
    for mm in range(len(branches[0][1])):
        if mm == mode:
            continue
        o = np.empty((n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                # <factor_j | factor_i>
                o[i, j] = factor_overlap(branches[j][1][mm], branches[i][1][mm])
        m *= o
    v = np.column_stack([factor_vector(f[1][mode], dim) for f in branches])
    rho = v @ m @ v.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    tr = float(np.trace(rho).real)
    if tr <= 1e-200:
        raise ZeroNormError("reduced state has zero norm")
    return rho / tr


# --------------------------------------------------------------- dense state

@dataclass(frozen=True)
class DenseState:
    amps: np.ndarray

    @property
    def dims(self):
        return self.amps.shape

    def norm_sq(self):
        return float(np.vdot(self.amps, self.amps).real)


def branch_to_dense(state, dims):
    amps = np.zeros(dims, dtype=complex)
    for coeff, factors in state.branches:
        term = np.array([coeff], dtype=complex).reshape((1,) * len(dims))
        for ax, (f, d) in enumerate(zip(factors, dims)):
            shape = [1] * len(dims)
            shape[ax] = d
            term = term * factor_vector(f, d).reshape(shape)
        amps += term
    return DenseState(amps)


def dense_inner(s1, s2):
    """<s1|s2> with zero-padding to common dims."""
    dims = tuple(max(a, b) for a, b in zip(s1.dims, s2.dims))
    a1 = np.zeros(dims, dtype=complex)
    a1[tuple(slice(0, d) for d in s1.dims)] = s1.amps
    a2 = np.zeros(dims, dtype=complex)
    a2[tuple(slice(0, d) for d in s2.dims)] = s2.amps
    return complex(np.vdot(a1, a2))


def mutual_fidelity(s1, s2):
    """|<s1|s2>|^2 / (|s1|^2 |s2|^2) across representations."""
    if isinstance(s1, BranchState) and isinstance(s2, BranchState):
        ov = s1.inner(s2)
        n1 = s1.norm_sq()
        n2 = s2.norm_sq()
    else:
        dims = s2.dims if isinstance(s2, DenseState) else s1.dims
        d1 = s1 if isinstance(s1, DenseState) else branch_to_dense(s1, dims)
        d2 = s2 if isinstance(s2, DenseState) else branch_to_dense(s2, dims)
        ov = dense_inner(d1, d2)
        n1 = d1.norm_sq()
        n2 = d2.norm_sq()
    if n1 <= 0 or n2 <= 0:
        raise ZeroNormError("mutual fidelity of a zero-norm state")
    return abs(ov) ** 2 / (n1 * n2)


_bs_block_cache = {}


def _bs_block(s_total):
    """exp((pi/4)(a^dag b - a b^dag)) restricted to the total-photon-s block."""
    cached = _bs_block_cache.get(s_total)
    if cached is None:
        m = np.arange(s_total)
        k = np.zeros((s_total + 1, s_total + 1))
        off = np.sqrt((m + 1.0) * (s_total - m))
        k[m + 1, m] = off
        k[m, m + 1] = -off
        w, v = np.linalg.eigh(1j * k)  # iK is Hermitian for antisymmetric real K
        block = (v * np.exp(-1j * (np.pi / 4) * w)) @ v.conj().T
        cached = np.ascontiguousarray(block.real)
        _bs_block_cache[s_total] = cached
    return cached


def apply_bs_dense(state, modes):
    """Exact beam splitter: block rotation per total photon number with output
    dims grown to d_i + d_j - 1 (no truncation), then the second-mode parity
    phase that fixes the label convention (g1,g2) -> ((g1+g2), (g1-g2))/sqrt(2)."""
    i, j = modes
    amps = np.moveaxis(state.amps, (i, j), (0, 1))
    di, dj = amps.shape[:2]
    rest = amps.shape[2:]
    flat = amps.reshape(di, dj, -1)
    d_out = di + dj - 1
    out = np.zeros((d_out, d_out, flat.shape[2]), dtype=complex)
    for s in range(di + dj - 1):
        v = np.zeros((s + 1, flat.shape[2]), dtype=complex)
        ns = np.arange(max(0, s - (dj - 1)), min(s, di - 1) + 1)
        v[ns] = flat[ns, s - ns]
        w = _bs_block(s) @ v
        ns_out = np.arange(s + 1)
        out[ns_out, s - ns_out] = w
    if not _bs_fault_active():
        out *= ((-1.0) ** np.arange(d_out))[None, :, None]
    out = out.reshape((d_out, d_out) + rest)
    return DenseState(np.moveaxis(out, (0, 1), (i, j)))


def pad_mode_dense(state, mode, dim):
    if state.dims[mode] >= dim:
        return state
    shape = list(state.dims)
    shape[mode] = dim
    amps = np.zeros(shape, dtype=complex)
    amps[tuple(slice(0, d) for d in state.dims)] = state.amps
    return DenseState(amps)


def _apply_matrix_dense(state, mode, matrix):
    amps = np.moveaxis(state.amps, mode, 0)
    out = np.tensordot(matrix, amps, axes=(1, 0))
    return DenseState(np.moveaxis(out, 0, mode))


def displace_dense(state, mode, delta, n_max):
    """Pad the mode to n_max+1 then apply the unitary displacement block."""
    n_max = max(n_max, state.dims[mode] - 1)
    state = pad_mode_dense(state, mode, n_max + 1)
    return _apply_matrix_dense(state, mode, focknum.displacement(delta, n_max))


def apply_diag_dense(state, mode, diag):
    d = state.dims[mode]
    if len(diag) < d:
        raise ValueError("diagonal shorter than the mode dimension")
    shape = [1] * len(state.dims)
    shape[mode] = d
    return DenseState(state.amps * np.asarray(diag)[:d].reshape(shape))


def apply_parity_dense(state, mode, sigma):
    return apply_diag_dense(
        state, mode, focknum.parity_projector(sigma, state.dims[mode] - 1)
    )


def apply_joint_parity_dense(state, modes, sigma):
    i, j = modes
    ni = np.arange(state.dims[i])
    nj = np.arange(state.dims[j])
    shape_i = [1] * len(state.dims)
    shape_i[i] = state.dims[i]
    shape_j = [1] * len(state.dims)
    shape_j[j] = state.dims[j]
    total = ni.reshape(shape_i) + nj.reshape(shape_j)
    mask = ((total % 2 == 0) == (sigma > 0)).astype(float)
    return DenseState(state.amps * mask)


def reduced_density_dense(state, mode):
    a = np.moveaxis(state.amps, mode, -1).reshape(-1, state.dims[mode])
    rho = np.einsum("rp,rq->pq", a, a.conj())
    tr = float(np.trace(rho).real)
    if tr <= 1e-200:
        raise ZeroNormError("reduced state has zero norm")
    return rho / tr


def fidelity_c(rho, target):
    """<target|rho|target> for a normalized target vector."""
    d = min(len(target), rho.shape[0])
    val = np.vdot(target[:d], rho[:d, :d] @ target[:d]).real
    return float(val)
