"""Classical and quantum Fisher information for the (phi, Delta) pair.

The classical matrix integrates (d_i p)(d_j p)/p over the homodyne outcome
grid.  The quantum matrix comes from symmetric logarithmic derivatives (SLDs)
evaluated blockwise in the eigenbasis of each loss block,

    L_ab = 2 <a|d rho|b> / (lambda_a + lambda_b),

restricted to lambda_a + lambda_b above a support threshold; loss blocks are
mutually orthogonal with parameter-independent weights, so there are no
cross-block terms.

Deep in the diffusive regime the parameter derivatives shrink like
exp(-Delta^2/2) factors and their quadratic contractions underflow long
before the information ratios degenerate.  All contractions are therefore
done on power-of-two rescaled derivative blocks; a FisherPair keeps both the
plain matrices and the rescaled ones together with the log scales, and the
figure-of-merit layer consumes whichever representation stays finite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import exp, inf, log, sqrt

import numpy as np

from .channels import BlockedDensity
from .homodyne import JointPdfField, QuadGrid, joint_pdf

__all__ = [
    "RANK_EPS",
    "PDF_SKIP",
    "FisherPair",
    "SldOperators",
    "classical_fisher",
    "qfi_and_slds",
    "commutation_diagnostics",
    "hcr_bound",
    "compute_fisher_pair",
]

RANK_EPS = 1e-10   # support threshold on lambda_a + lambda_b
PDF_SKIP = 1e-12   # outcome cells below this carry no usable information


@dataclass(eq=False)
class SldOperators:
    """Blockwise SLDs for both parameters, keyed like the density blocks."""

    phi: dict = field(repr=False)
    delta: dict = field(repr=False)


@dataclass(eq=False)
class FisherPair:
    """2x2 classical and quantum Fisher matrices, parameter order (phi, Delta).

    f_c, f_q, w and sld_commutator_norm are in plain units and may underflow
    to zero deep in the diffusive regime; the *_scaled companions are finite
    and relate to them through exp(log_scale_i + log_scale_j) factors.
    """

    f_c: np.ndarray
    f_q: np.ndarray
    w: np.ndarray
    sld_commutator_norm: float
    f_c_scaled: np.ndarray
    f_q_scaled: np.ndarray
    w_scaled: np.ndarray
    sld_commutator_norm_scaled: float
    log_scale_phi: float
    log_scale_delta: float
    pdf_norm_error: float = 0.0

    @property
    def log_scales(self):
        return (self.log_scale_phi, self.log_scale_delta)


def classical_fisher(fieldv: JointPdfField, grid: QuadGrid = None) -> np.ndarray:
    """Fisher matrix of the outcome distribution by Simpson quadrature.

    Cells with p below PDF_SKIP are skipped; their contribution is bounded
    by the squared derivative over p and vanishes in the Gaussian tails.
    """
    grid = grid if grid is not None else fieldv.grid
    mask = fieldv.p > PDF_SKIP
    w = grid.weights_2d[mask]
    pm = fieldv.p[mask]
    d = (fieldv.dp_dphi[mask], fieldv.dp_ddelta[mask])
    out = np.empty((2, 2))
    for i in range(2):
        for j in range(i, 2):
            out[i, j] = out[j, i] = float(np.sum(w * d[i] * d[j] / pm))
    return out


def _check_hermitian(blk: np.ndarray, what: str) -> None:
    scale = max(1.0, float(np.max(np.abs(blk))) if blk.size else 0.0)
    dev = float(np.max(np.abs(blk - blk.conj().T))) if blk.size else 0.0
    if dev > 1e-9 * scale:
        raise ValueError(f"{what} block is not Hermitian: max deviation {dev}")


def qfi_and_slds(rho: BlockedDensity, drho_phi: BlockedDensity, drho_delta: BlockedDensity):
    """Quantum Fisher matrix and SLD operators from the blocked state.

    Returns (F_Q, SldOperators); the SLD blocks are expressed in the same
    Fock-sector basis as the density blocks.
    """
    f_q = np.zeros((2, 2))
    sld_phi, sld_delta = {}, {}
    for key, blk in rho.block_items():
        _check_hermitian(blk, f"density {key}")
        lam, vec = np.linalg.eigh(blk)
        lam = np.clip(lam, 0.0, None)
        lam_sum = lam[:, None] + lam[None, :]
        on_support = lam_sum > RANK_EPS
        inv_sum = np.where(on_support, 1.0 / np.where(on_support, lam_sum, 1.0), 0.0)
        rotated = []
        for dop in (drho_phi, drho_delta):
            dblk = dop.blocks[key]
            _check_hermitian(dblk, f"derivative {key}")
            rotated.append(vec.conj().T @ dblk @ vec)
        for i in range(2):
            for j in range(i, 2):
                v = float(np.sum(2.0 * (rotated[i] * rotated[j].conj()).real * inv_sum))
                f_q[i, j] = v
                f_q[j, i] = v
        lp = 2.0 * rotated[0] * inv_sum
        ld = 2.0 * rotated[1] * inv_sum
        sld_phi[key] = vec @ lp @ vec.conj().T
        sld_delta[key] = vec @ ld @ vec.conj().T
    return f_q, SldOperators(sld_phi, sld_delta)


def commutation_diagnostics(rho: BlockedDensity, sld_phi: dict, sld_delta: dict):
    """Tr(rho [L_phi, L_Delta]) and the Frobenius norm of the commutator.

    The trace can vanish while the commutator itself does not; the pair
    separates asymptotic attainability from measurement compatibility.
    """
    trace = 0.0 + 0.0j
    norm_sq = 0.0
    for key, blk in rho.block_items():
        comm = sld_phi[key] @ sld_delta[key] - sld_delta[key] @ sld_phi[key]
        trace += complex(np.trace(blk @ comm))
        norm_sq += float(np.sum(np.abs(comm) ** 2))
    return trace, sqrt(norm_sq)


def _psd_sqrt(g: np.ndarray) -> np.ndarray:
    lam, vec = np.linalg.eigh(g)
    if lam.min() < -1e-12:
        raise ValueError(f"cost matrix must be positive semidefinite, eigenvalues {lam}")
    return vec @ np.diag(np.sqrt(np.clip(lam, 0.0, None))) @ vec.conj().T


def hcr_bound(g: np.ndarray, f_q: np.ndarray, w: np.ndarray) -> float:
    """Holevo bound for D-invariant models with cost matrix g.

    Tr(g F_Q^-1) plus the trace norm of sqrt(g) F_Q^-1 ImZ F_Q^-1 sqrt(g),
    where ImZ = W / (2i) is the imaginary part of the SLD covariance and
    W_ij = Tr(rho [L_i, L_j]).  Collapses to Tr(g F_Q^-1) when W vanishes.
    """
    f_q = np.asarray(f_q, dtype=float)
    names = ("phi", "Delta")
    for i in range(2):
        if f_q[i, i] <= 1e-300:
            raise ValueError(
                f"quantum Fisher information is singular: diagonal entry "
                f"[{names[i]}, {names[i]}] = {f_q[i, i]} (bound undefined)"
            )
    det = f_q[0, 0] * f_q[1, 1] - f_q[0, 1] * f_q[1, 0]
    if det <= 0:
        raise ValueError(f"quantum Fisher matrix not invertible: det = {det}")
    f_inv = np.linalg.inv(f_q)
    g = np.asarray(g, dtype=float)
    root = _psd_sqrt(g)
    im_z = np.asarray(w, dtype=complex) / 2j
    middle = root @ f_inv @ im_z @ f_inv @ root
    nuclear = float(np.sum(np.linalg.svd(middle, compute_uv=False)))
    return float(np.trace(g @ f_inv)) + nuclear


def _pow2_scale(ops: BlockedDensity) -> float:
    top = max((float(np.max(np.abs(b))) for b in ops.blocks.values()), default=0.0)
    if top == 0.0:
        return 0.0
    return 2.0 ** round(np.log2(top))


def _rescaled(ops: BlockedDensity, scale: float) -> BlockedDensity:
    if scale == 0.0:
        return ops
    return ops.map_blocks(lambda key, blk: blk / scale)


def compute_fisher_pair(
    rho: BlockedDensity,
    drho_phi: BlockedDensity,
    drho_delta: BlockedDensity,
    grid: QuadGrid = None,
) -> FisherPair:
    """Assemble the FisherPair from a parameter-encoded state.

    Derivative blocks are rescaled by exact powers of two before any
    quadratic contraction; plain matrices are reconstructed afterwards and
    flush to zero only where the true values lie below double precision.
    Passing grid=None skips the homodyne pipeline and leaves f_c as NaN for
    quantum-only figures of merit.
    """
    s_phi = _pow2_scale(drho_phi)
    s_delta = _pow2_scale(drho_delta)
    dphi_s = _rescaled(drho_phi, s_phi)
    ddelta_s = _rescaled(drho_delta, s_delta)

    norm_err = 0.0
    if grid is not None:
        fieldv = joint_pdf(rho, dphi_s, ddelta_s, grid)
        f_c_scaled = classical_fisher(fieldv, grid)
        norm_err = abs(fieldv.integral(fieldv.p) - 1.0)
    else:
        f_c_scaled = np.full((2, 2), np.nan)

    f_q_scaled, slds = qfi_and_slds(rho, dphi_s, ddelta_s)
    w_trace, comm_norm = commutation_diagnostics(rho, slds.phi, slds.delta)
    w_scaled = np.array([[0.0, w_trace], [-w_trace, 0.0]], dtype=complex)

    log_s = (
        log(s_phi) if s_phi > 0.0 else -inf,
        log(s_delta) if s_delta > 0.0 else -inf,
    )
    # exp(-inf) = 0: a vanished derivative honestly zeroes its plain entries
    plain_factor = np.array(
        [[exp(log_s[i] + log_s[j]) for j in range(2)] for i in range(2)]
    )
    with np.errstate(under="ignore"):
        f_c = f_c_scaled * plain_factor
        f_q = f_q_scaled * plain_factor
        w = w_scaled * plain_factor
        plain_comm = comm_norm * plain_factor[0, 1]
    return FisherPair(
        f_c=f_c,
        f_q=f_q,
        w=w,
        sld_commutator_norm=float(plain_comm),
        f_c_scaled=f_c_scaled,
        f_q_scaled=f_q_scaled,
        w_scaled=w_scaled,
        sld_commutator_norm_scaled=comm_norm,
        log_scale_phi=log_s[0],
        log_scale_delta=log_s[1],
        pdf_norm_error=norm_err,
    )
