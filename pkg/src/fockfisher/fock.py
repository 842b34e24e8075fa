"""Two-mode fixed-photon-number probe states and the balanced beam splitter.

The probe states live on the N-photon sector of two optical modes, spanned by
{|p, N-p>: p = 0..N}.  A state is stored as the complex amplitude vector c with
c_p multiplying |p, N-p>.  The generalized Holland-Burnett (gHB) family is the
image of a two-mode Fock state |n, N-n> under a balanced beam splitter; its
amplitudes are the Kravchuk coefficients

    A_N(n, p) = (-1)^n sqrt(2^-N C(N,n) C(N,p)) 2F1(-n, -p; -N; 2),

where the terminating hypergeometric sum is a rational number and is evaluated
exactly.  The beam splitter unitary exp[-i pi/4 (a'^dag b' + b'^dag a')]
restricted to a photon-number sector is also provided; it doubles as an
independent oracle for the Kravchuk coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import exp, lgamma, log, sqrt

import numpy as np
from scipy.linalg import expm

MAX_PHOTONS = 40

__all__ = [
    "MAX_PHOTONS",
    "ProbeState",
    "SectorUnitary",
    "kravchuk_coeff",
    "kravchuk_matrix",
    "ghb_state",
    "hb_state",
    "noon_state",
    "balanced_bs_unitary",
]


@dataclass(eq=False)
class ProbeState:
    """Pure two-mode state with fixed total photon number.

    amplitudes[p] is the coefficient of |p, N-p>; the vector has length N+1
    and unit norm.
    """

    total_photons: int
    amplitudes: np.ndarray
    label: str

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.total_photons + 1,):
            raise ValueError(
                f"amplitude vector must have length N+1 = {self.total_photons + 1}, "
                f"got {self.amplitudes.shape}"
            )
        norm = np.sum(np.abs(self.amplitudes) ** 2)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state not normalized: sum |c_p|^2 = {norm!r}")

    @property
    def occupation_probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def mode_a_photon_variance(self) -> float:
        """Variance of the photon number in mode a, Var(n_a) = <n_a^2>-<n_a>^2."""
        probs = self.occupation_probabilities
        na = np.arange(self.total_photons + 1)
        mean = float(np.dot(probs, na))
        return float(np.dot(probs, na**2)) - mean**2


@dataclass(eq=False)
class SectorUnitary:
    """Beam splitter unitary restricted to the M-photon sector."""

    sector_photons: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        d = self.sector_photons + 1
        if self.matrix.shape != (d, d):
            raise ValueError(f"sector matrix must be {d}x{d}, got {self.matrix.shape}")


def _check_indices(N: int, n: int, p: int) -> None:
    if N < 0 or N > MAX_PHOTONS:
        raise ValueError(f"total photon number N must be in [0, {MAX_PHOTONS}], got {N}")
    if not 0 <= n <= N:
        raise ValueError(f"input index n must satisfy 0 <= n <= N, got n={n}, N={N}")
    if not 0 <= p <= N:
        raise ValueError(f"output index p must satisfy 0 <= p <= N, got p={p}, N={N}")


def _terminating_2f1(N: int, n: int, p: int) -> Fraction:
    """2F1(-n, -p; -N; 2) as an exact rational via the terminating sum.

    Exactness matters: the sum has alternating terms and its zeros (e.g. the
    Hong-Ou-Mandel zero at N=2, n=p=1) must come out exactly, otherwise the
    residue acquires slowly-damped spurious coherences under phase diffusion.
    """
    total = Fraction(1)
    term = Fraction(1)
    for j in range(1, min(n, p) + 1):
        term *= Fraction(2 * (n - j + 1) * (p - j + 1), -(N - j + 1) * j)
        total += term
    return total


def kravchuk_coeff(N: int, n: int, p: int) -> float:
    """Kravchuk coefficient A_N(n, p).

    The binomial prefactor sqrt(2^-N C(N,n) C(N,p)) is evaluated through
    log-factorials; the terminating hypergeometric sum is exact.
    """
    _check_indices(N, n, p)
    hyp = _terminating_2f1(N, n, p)
    if hyp == 0:
        return 0.0
    log_pref = 0.5 * (
        -N * log(2.0)
        + lgamma(N + 1) - lgamma(n + 1) - lgamma(N - n + 1)
        + lgamma(N + 1) - lgamma(p + 1) - lgamma(N - p + 1)
    )
    sign = -1.0 if n % 2 else 1.0
    return sign * float(hyp) * exp(log_pref)


def kravchuk_matrix(M: int) -> np.ndarray:
    """Real orthogonal matrix K with K[p, n] = A_M(n, p).

    Column n holds the amplitudes of the gHB state generated from |n, M-n>.
    This is the balanced beam splitter in the phase convention where all
    sector matrix elements are real.
    """
    if M < 0 or M > MAX_PHOTONS:
        raise ValueError(f"sector photon number must be in [0, {MAX_PHOTONS}], got {M}")
    K = np.empty((M + 1, M + 1))
    for n in range(M + 1):
        for p in range(M + 1):
            K[p, n] = kravchuk_coeff(M, n, p)
    return K


def ghb_state(N: int, n: int) -> ProbeState:
    """Generalized Holland-Burnett state: balanced beam splitter acting on |n, N-n>."""
    _check_indices(N, n, 0)
    c = np.array([kravchuk_coeff(N, n, p) for p in range(N + 1)])
    return ProbeState(N, c, f"ghb:{n},{N - n}")


def hb_state(N: int) -> ProbeState:
    """Holland-Burnett state, equal photon numbers in both input ports.

    For odd N the input is rounded down to |N//2, N - N//2>.
    """
    if N < 2:
        raise ValueError(f"HB state needs N >= 2, got {N}")
    state = ghb_state(N, N // 2)
    state.label = f"hb:{N}"
    return state


def noon_state(N: int) -> ProbeState:
    """N00N state (|N,0> + |0,N>)/sqrt(2) prepared inside the interferometer."""
    if N < 1:
        raise ValueError(f"N00N state needs N >= 1, got {N}")
    c = np.zeros(N + 1)
    c[0] = c[N] = 1.0 / sqrt(2.0)
    return ProbeState(N, c, f"noon:{N}")


def balanced_bs_unitary(M: int) -> SectorUnitary:
    """exp[-i pi/4 (a'^dag b' + b'^dag a')] on the M-photon sector.

    The sector matrix relates to the Kravchuk coefficients through local
    phase rotations:  U[p, n] = (-i)^p i^n A_M(n, p).
    """
    if M < 0 or M > MAX_PHOTONS:
        raise ValueError(f"sector photon number must be in [0, {MAX_PHOTONS}], got {M}")
    gen = np.zeros((M + 1, M + 1))
    for p in range(M):
        # <p+1, M-p-1| a'^dag b' |p, M-p> = sqrt((p+1)(M-p)); generator is symmetric
        gen[p + 1, p] = gen[p, p + 1] = sqrt((p + 1) * (M - p))
    return SectorUnitary(M, expm(-0.25j * np.pi * gen))
