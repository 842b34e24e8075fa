"""Phase, diffusion and photon-loss channels on two-mode Fock states.

A probe picks up a relative phase phi (generator n_a), suffers Gaussian phase
diffusion of standard deviation Delta, and loses photons to fictitious beam
splitters of transmission eta_a, eta_b placed after the phase shift.  The
result is block diagonal over the loss record (k, l) = (photons lost from
mode a, photons lost from mode b); block (k, l) acts on the sector with
M = N - k - l photons.

The diffusion channel has the closed form

    rho_pq -> rho_pq * exp(-i (p-q) phi - Delta^2 (p-q)^2 / 2),

which is the production path; a Gauss-Hermite quadrature of the defining
integral over the diffused phase is kept as a test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, sqrt

import numpy as np

from .fock import ProbeState

__all__ = [
    "BlockedDensity",
    "apply_phase_diffusion",
    "diffusion_integral_oracle",
    "apply_loss",
    "parameter_derivatives",
]


@dataclass(eq=False)
class BlockedDensity:
    """Mixed state stored as a direct sum of Hermitian blocks over loss records.

    blocks maps (k, l) to an (M+1)x(M+1) matrix on basis {|m, M-m>},
    M = input_photons - k - l.  Entry (m, m') descends from input-sector
    indices (p, q) = (m + k, m' + k).
    """

    input_photons: int
    blocks: dict = field(repr=False)
    phase: float
    diffusion: float
    transmissions: tuple = (1.0, 1.0)

    def block_items(self):
        return sorted(self.blocks.items())

    def sector_photons(self, key) -> int:
        k, l = key
        return self.input_photons - k - l

    def total_trace(self) -> float:
        return float(sum(np.trace(b).real for b in self.blocks.values()))

    def map_blocks(self, fn) -> "BlockedDensity":
        """New container with fn applied to every block; metadata preserved."""
        return BlockedDensity(
            self.input_photons,
            {key: fn(key, blk) for key, blk in self.blocks.items()},
            self.phase,
            self.diffusion,
            self.transmissions,
        )


def _phase_damping(size: int, phi: float, delta: float) -> np.ndarray:
    p = np.arange(size)
    dpq = p[:, None] - p[None, :]
    return np.exp(-1j * dpq * phi - 0.5 * delta**2 * dpq.astype(float) ** 2)


def apply_phase_diffusion(state: ProbeState, phi: float, delta: float) -> BlockedDensity:
    """Phase shift followed by Gaussian phase diffusion, in closed form."""
    if delta < 0:
        raise ValueError(f"diffusion strength must be nonnegative, got {delta}")
    c = state.amplitudes
    rho = np.outer(c, c.conj()) * _phase_damping(len(c), phi, delta)
    return BlockedDensity(state.total_photons, {(0, 0): rho}, phi, delta)


def diffusion_integral_oracle(
    state: ProbeState, phi: float, delta: float, nodes: int = 60
) -> BlockedDensity:
    """Diffusion channel as the Gaussian average of rotated states.

    Evaluates integral dphi' p_{phi,Delta}(phi') U_phi' rho U_phi'^dag by
    Gauss-Hermite quadrature in the standardized variable.  Test oracle for
    apply_phase_diffusion; degenerate at Delta = 0 where the closed form
    must be used.
    """
    if delta <= 0:
        raise ValueError("quadrature oracle requires Delta > 0; use the closed form at 0")
    if nodes < 20:
        raise ValueError(f"need at least 20 quadrature nodes, got {nodes}")
    c = state.amplitudes
    rho0 = np.outer(c, c.conj())
    na = np.arange(len(c))
    t, w = np.polynomial.hermite.hermgauss(nodes)
    rho = np.zeros_like(rho0)
    for ti, wi in zip(t, w):
        ph = np.exp(-1j * (phi + sqrt(2.0) * delta * ti) * na)
        rho = rho + (wi / sqrt(np.pi)) * (ph[:, None] * rho0 * ph.conj()[None, :])
    return BlockedDensity(state.total_photons, {(0, 0): rho}, phi, delta)


def _loss_weights(N: int, k: int, l: int, eta_a: float, eta_b: float) -> np.ndarray:
    """B^p_{kl} for p = 0..N; zero where the record (k, l) is impossible."""
    b = np.zeros(N + 1)
    for p in range(k, N - l + 1):
        b[p] = (
            comb(p, k)
            * comb(N - p, l)
            * eta_a ** (p - k)
            * (1.0 - eta_a) ** k
            * eta_b ** (N - p - l)
            * (1.0 - eta_b) ** l
        )
    return b


def apply_loss(rho: BlockedDensity, eta_a: float, eta_b: float) -> BlockedDensity:
    """Photon loss through fictitious beam splitters on both arms.

    Block (k, l) entry (m, m') equals rho_pq sqrt(B^p_{kl} B^q_{kl}) with
    p = m + k, q = m' + k.  Blocks that carry no weight are dropped, so the
    lossless channel returns the single (0, 0) block unchanged.
    """
    if set(rho.blocks) != {(0, 0)}:
        raise ValueError("loss channel expects the single pre-loss (0, 0) block")
    for name, eta in (("eta_a", eta_a), ("eta_b", eta_b)):
        if not 0.0 <= eta <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {eta}")
    N = rho.input_photons
    source = rho.blocks[(0, 0)]
    blocks = {}
    for k in range(N + 1):
        for l in range(N + 1 - k):
            b = _loss_weights(N, k, l, eta_a, eta_b)
            pidx = np.arange(k, N - l + 1)
            blk = source[np.ix_(pidx, pidx)] * np.sqrt(np.outer(b[pidx], b[pidx]))
            if np.any(blk != 0.0):
                blocks[(k, l)] = blk
    return BlockedDensity(N, blocks, rho.phase, rho.diffusion, (eta_a, eta_b))


def parameter_derivatives(rho: BlockedDensity):
    """Analytic partial derivatives of the blocked state in (phi, Delta).

    The loss weights carry no parameter dependence and in-block index
    differences coincide with pre-loss ones, so entrywise

        d/dphi   : -i (m - m') rho_mm'
        d/dDelta : -Delta (m - m')^2 rho_mm'

    Both outputs are Hermitian, traceless block sets.
    """
    delta = rho.diffusion

    def dphi(key, blk):
        m = np.arange(blk.shape[0])
        mm = m[:, None] - m[None, :]
        return -1j * mm * blk

    def ddelta(key, blk):
        m = np.arange(blk.shape[0])
        mm = m[:, None] - m[None, :]
        return -delta * mm.astype(float) ** 2 * blk

    return rho.map_blocks(dphi), rho.map_blocks(ddelta)
