"""Double homodyne detection model.

The interferometer is closed by a balanced beam splitter and the two output
modes are measured jointly: the X quadrature on mode a and the P quadrature
on mode b (convention hbar = 1, x = (a + a^dag)/sqrt(2)).  Equivalently the
scheme projects onto the eigenbasis of the commuting pair
((X_a - X_b)/sqrt(2), (P_a + P_b)/sqrt(2)), which makes the outcome
distribution covariant: a phase shift only rotates the (x, p) plane, so all
Fisher information derived from it is phase independent.

The closing rotation is applied in the real (Kravchuk) phase convention;
any other balanced-splitter phase convention differs only by quadrature
relabelings that leave the extracted information unchanged.

Position-basis Fock wavefunctions psi_n enter through the stable three-term
recurrence; the momentum-basis ones pick up the Fourier phase (-i)^n.
Quadrature integrals use composite Simpson weights on a symmetric grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import sqrt

import numpy as np

from .channels import BlockedDensity
from .fock import kravchuk_matrix

__all__ = [
    "QuadGrid",
    "JointPdfField",
    "make_grid",
    "default_halfwidth",
    "hermite_wavefunction",
    "joint_pdf",
]

PDF_FLOOR = -1e-14


@dataclass(eq=False)
class QuadGrid:
    """Symmetric 1D quadrature grid with composite Simpson weights."""

    half_width: float
    points_per_axis: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def weights_2d(self) -> np.ndarray:
        return np.outer(self.weights, self.weights)

    def key(self):
        return (float(self.half_width), int(self.points_per_axis))


@dataclass(eq=False)
class JointPdfField:
    """Joint outcome density p(x, p) and its analytic parameter derivatives."""

    p: np.ndarray = field(repr=False)
    dp_dphi: np.ndarray = field(repr=False)
    dp_ddelta: np.ndarray = field(repr=False)
    grid: QuadGrid = None

    def integral(self, values: np.ndarray) -> float:
        return float(np.sum(self.grid.weights_2d * values))


def default_halfwidth(total_photons: int) -> float:
    """Classical turning point of the highest Fock state plus four widths."""
    return sqrt(2.0 * total_photons + 1.0) + 4.0


def make_grid(half_width: float, points_per_axis: int = 401) -> QuadGrid:
    if points_per_axis < 3 or points_per_axis % 2 == 0:
        raise ValueError(
            f"composite Simpson needs an odd point count >= 3, got {points_per_axis}"
        )
    if half_width <= 0:
        raise ValueError(f"half width must be positive, got {half_width}")
    nodes = np.linspace(-half_width, half_width, points_per_axis)
    h = 2.0 * half_width / (points_per_axis - 1)
    w = np.full(points_per_axis, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return QuadGrid(half_width, points_per_axis, nodes, w * (h / 3.0))


def hermite_wavefunction(n: int, x) -> np.ndarray:
    """Harmonic oscillator eigenfunction psi_n(x), orthonormal on the line.

    psi_0 = pi^-1/4 exp(-x^2/2) and
    psi_{n+1} = sqrt(2/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1}.
    """
    if n < 0:
        raise ValueError(f"order must be nonnegative, got {n}")
    x = np.asarray(x, dtype=float)
    return _hermite_basis_array(n, x)[n]


def _hermite_basis_array(nmax: int, x: np.ndarray) -> np.ndarray:
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x**2)
    if nmax >= 1:
        out[1] = sqrt(2.0) * x * out[0]
    for n in range(1, nmax):
        out[n + 1] = sqrt(2.0 / (n + 1)) * x * out[n] - sqrt(n / (n + 1)) * out[n - 1]
    return out


@lru_cache(maxsize=64)
def _povm_tensor(sector_photons: int, grid_key) -> np.ndarray:
    """U[m, ix, iy] = <x| m>_a <p| M-m>_b after the closing rotation is folded out.

    Cached per (sector, grid); scenario sweeps over channel parameters reuse it.
    """
    M = sector_photons
    half_width, npts = grid_key
    x = np.linspace(-half_width, half_width, npts)
    psi = _hermite_basis_array(M, x)
    momentum_phase = (-1j) ** np.arange(M + 1)
    U = np.empty((M + 1, npts, npts), dtype=complex)
    for m in range(M + 1):
        U[m] = np.outer(psi[m], momentum_phase[M - m] * psi[M - m])
    return U


@lru_cache(maxsize=64)
def _closing_rotation(sector_photons: int) -> np.ndarray:
    return kravchuk_matrix(sector_photons)


def _contract_blocks(op: BlockedDensity, grid: QuadGrid) -> np.ndarray:
    total = np.zeros((grid.points_per_axis, grid.points_per_axis))
    for key, blk in op.block_items():
        M = op.sector_photons(key)
        if blk.shape != (M + 1, M + 1):
            raise ValueError(
                f"block {key} has shape {blk.shape}, expected {(M + 1, M + 1)}"
            )
        K = _closing_rotation(M)
        sigma = K @ blk @ K.T
        U = _povm_tensor(M, grid.key())
        total += np.einsum("mxy,mn,nxy->xy", U.conj(), sigma, U, optimize=True).real
    return total


def joint_pdf(
    rho: BlockedDensity,
    drho_phi: BlockedDensity,
    drho_delta: BlockedDensity,
    grid: QuadGrid,
) -> JointPdfField:
    """Outcome density of the double homodyne measurement plus derivatives.

    Each block is rotated through the closing beam splitter and contracted
    against the product quadrature projectors; the same linear map is applied
    to the parameter-derivative blocks.  The grid must cover the classical
    turning point of the largest populated sector.
    """
    if grid.half_width < default_halfwidth(rho.input_photons) - 1e-9:
        raise ValueError(
            f"grid half width {grid.half_width} too small for N = {rho.input_photons}; "
            f"need at least {default_halfwidth(rho.input_photons):.3f}"
        )
    p = _contract_blocks(rho, grid)
    if p.min() < PDF_FLOOR:
        raise ValueError(f"joint density has entries below {PDF_FLOOR}: min = {p.min()}")
    np.clip(p, 0.0, None, out=p)
    return JointPdfField(
        p=p,
        dp_dphi=_contract_blocks(drho_phi, grid),
        dp_ddelta=_contract_blocks(drho_delta, grid),
        grid=grid,
    )
