"""Figures of merit and parameter-sweep drivers.

Two quantities summarize joint estimation of (phi, Delta):

    Upsilon = F_C[phi,phi]/F_Q[phi,phi] + F_C[Delta,Delta]/F_Q[Delta,Delta]
    Sigma^2 = 1/F_Q[phi,phi] + 1/F_Q[Delta,Delta]

Upsilon is the fraction of available quantum information the measurement
extracts (ceiling 2, single-qubit bound 1); Sigma^2 is the minimal sum of
estimator variances per run.  Both are evaluated from the rescaled Fisher
matrices so they stay finite deep in the diffusive regime where the plain
matrices underflow; Upsilon is a ratio in which the scales cancel exactly,
Sigma^2 is reconstructed in log space and may honestly overflow to inf.

Sweep drivers cover the trade-off versus diffusion strength, versus photon
number at fixed diffusion, and versus the input partition at fixed photon
number, with deterministic row order independent of worker parallelism.
"""

from __future__ import annotations

import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from math import exp, inf, isfinite, log, sqrt

import numpy as np

from .channels import apply_loss, apply_phase_diffusion, parameter_derivatives
from .fisher import FisherPair, compute_fisher_pair
from .fock import ProbeState, ghb_state, hb_state, noon_state
from .homodyne import default_halfwidth, make_grid

__all__ = [
    "UndefinedFigureError",
    "ScenarioConfig",
    "ScenarioResult",
    "SweepRow",
    "parse_state",
    "family_state",
    "build_blocked_state",
    "evaluate_scenario",
    "tradeoff_upsilon",
    "qcr_sum",
    "hcr_from_pair",
    "sensitivity_gain",
    "find_delta_cutoff",
    "sweep_delta",
    "sweep_photon_number",
    "sweep_family",
    "default_delta_grid",
]

DELTA_MIN = 0.02
SOFT_PHOTON_CAP = 20
OFFDIAG_TOL = 1e-6
CUTOFF_DELTA_MAX = 8.0
# single-coherence N00N states stop being representable in doubles once
# N^2 Delta^2 / 2 passes ~700; past that Upsilon is evaluated on the
# saturation plateau at a reduced, exactly rescalable diffusion value
NOON_DEEP_LOG = 700.0
NOON_SAFE_PRODUCT = 24.0


class UndefinedFigureError(ValueError):
    """A figure of merit is undefined at this parameter point."""


@dataclass
class ScenarioConfig:
    """One scenario: probe state, channel parameters and grid settings."""

    state: str = "ghb:0,6"
    phi: float = 0.3
    delta: float = 0.5
    eta_a: float = 1.0
    eta_b: float = 1.0
    grid_points: int = 401
    grid_halfwidth: float = None
    # sweep settings
    axis: str = "delta"
    families: tuple = ("ghb0", "hb", "noon")
    photon_numbers: tuple = (4, 5, 6)
    partitions: tuple = (0, 1, 2, 3, 4, 5, 6)
    etas: tuple = (1.0, 0.5)
    delta_range: tuple = (DELTA_MIN, 5.0, 60)
    delta_anchors: tuple = (0.6, 1.2)
    max_photons: int = 14

    def __post_init__(self):
        if self.delta_range[0] < DELTA_MIN:
            raise ValueError(
                f"sweep lower bound {self.delta_range[0]} below the singularity "
                f"guard {DELTA_MIN}"
            )
        if self.max_photons > SOFT_PHOTON_CAP:
            raise ValueError(
                f"photon numbers above {SOFT_PHOTON_CAP} are outside the supported "
                f"range, got {self.max_photons}"
            )


@dataclass(eq=False)
class ScenarioResult:
    label: str
    total_photons: int
    input_n: int          # -1 for states outside the gHB family
    delta_partition: int  # N - 2n, or -999 sentinel when undefined
    phi: float
    delta: float
    eta_a: float
    eta_b: float
    pair: FisherPair
    upsilon: float = None
    sigma2: float = None
    hcr: float = None
    flags: tuple = ()


@dataclass(eq=False)
class SweepRow:
    label: str
    total_photons: int
    input_n: int
    delta_partition: int
    delta: float
    eta_a: float
    eta_b: float
    upsilon: float
    sigma2: float
    fc_phi: float
    fc_delta: float
    fq_phi: float
    fq_delta: float
    hcr: float
    flags: str
    delta_cutoff: float = None


_STATE_RE = re.compile(r"^(ghb):(\d+),(\d+)$|^(hb):(\d+)$|^(noon):(\d+)$")


def parse_state(spec: str) -> ProbeState:
    """State mini-grammar: ghb:<n>,<N-n> | hb:<N> | noon:<N>."""
    m = _STATE_RE.match(spec.strip())
    if not m:
        raise ValueError(
            f"unrecognized state spec {spec!r}; expected ghb:<n>,<N-n>, hb:<N> or noon:<N>"
        )
    if m.group(1):
        n, rest = int(m.group(2)), int(m.group(3))
        return ghb_state(n + rest, n)
    if m.group(4):
        return hb_state(int(m.group(5)))
    return noon_state(int(m.group(7)))


def family_state(token: str, total_photons: int) -> ProbeState:
    """Family token for sweeps: ghb<k> | hb | noon, at given photon number."""
    token = token.strip()
    if token == "hb":
        return hb_state(total_photons)
    if token == "noon":
        return noon_state(total_photons)
    m = re.match(r"^ghb(\d+)$", token)
    if m:
        return ghb_state(total_photons, int(m.group(1)))
    raise ValueError(f"unrecognized family token {token!r}")


def build_blocked_state(state: ProbeState, phi: float, delta: float,
                        eta_a: float, eta_b: float):
    rho = apply_phase_diffusion(state, phi, delta)
    if eta_a < 1.0 or eta_b < 1.0:
        rho = apply_loss(rho, eta_a, eta_b)
    return rho


def _state_bookkeeping(state: ProbeState):
    kind, _, args = state.label.partition(":")
    if kind == "ghb":
        n = int(args.split(",")[0])
        return n, state.total_photons - 2 * n
    if kind == "hb":
        n = state.total_photons // 2
        return n, state.total_photons - 2 * n
    return -1, -999


def tradeoff_upsilon(pair: FisherPair) -> float:
    """Joint information extraction Upsilon = Tr(F_C F_Q^-1).

    Uses the per-parameter ratio form when the off-diagonal entries vanish;
    otherwise falls back to the full trace (the caller flags that case).
    Scale factors cancel, so the value survives plain-matrix underflow.
    """
    if not np.all(np.isfinite(pair.f_c_scaled)):
        raise UndefinedFigureError("classical Fisher matrix was not computed")
    names = ("phi", "Delta")
    logs = pair.log_scales
    for i in range(2):
        if logs[i] == -inf or pair.f_q_scaled[i, i] <= 1e-14:
            raise UndefinedFigureError(
                f"F_Q[{names[i]},{names[i]}] vanishes; Upsilon undefined here"
            )
    if _offdiagonals_small(pair):
        return float(
            pair.f_c_scaled[0, 0] / pair.f_q_scaled[0, 0]
            + pair.f_c_scaled[1, 1] / pair.f_q_scaled[1, 1]
        )
    # trace of F_C F_Q^-1 is invariant under the diagonal rescaling
    return float(np.trace(pair.f_c_scaled @ np.linalg.inv(pair.f_q_scaled)))


def _offdiagonals_small(pair: FisherPair) -> bool:
    return (
        abs(pair.f_c[0, 1]) < OFFDIAG_TOL and abs(pair.f_q[0, 1]) < OFFDIAG_TOL
    )


def qcr_sum(pair: FisherPair) -> float:
    """Quantum Cramer-Rao sum Sigma^2 = Tr(F_Q^-1), reconstructed in log space."""
    names = ("phi", "Delta")
    logs = pair.log_scales
    total = 0.0
    for i in range(2):
        if logs[i] == -inf or pair.f_q_scaled[i, i] <= 0.0:
            raise UndefinedFigureError(
                f"F_Q[{names[i]},{names[i]}] vanishes; Sigma^2 undefined here"
            )
        log_term = -2.0 * logs[i] - log(pair.f_q_scaled[i, i])
        try:
            total += exp(log_term)
        except OverflowError:
            return inf
    return total


def hcr_from_pair(pair: FisherPair) -> float:
    """Holevo bound with identity cost, log-safe against derivative underflow.

    For W = [[0, w], [-w, 0]] the trace-norm correction reduces to
    |w| / det(F_Q) exactly (F_Q^-1 J F_Q^-1 = det(F_Q)^-1 J for symmetric
    F_Q), which factorizes over the rescaling.
    """
    sigma2 = qcr_sum(pair)
    if not isfinite(sigma2):
        return inf
    w = abs(pair.w_scaled[0, 1]) / 2.0
    if w == 0.0:
        return sigma2
    det_scaled = float(np.linalg.det(pair.f_q_scaled))
    if det_scaled <= 0.0:
        raise UndefinedFigureError("quantum Fisher matrix not invertible")
    log_corr = log(2.0 * w) - log(det_scaled) - pair.log_scale_phi - pair.log_scale_delta
    try:
        return sigma2 + exp(log_corr)
    except OverflowError:
        return inf


def sensitivity_gain(upsilon_test: float, upsilon_baseline: float) -> float:
    """Relative improvement in percent, 100 (test/baseline - 1)."""
    if upsilon_baseline <= 0.0:
        raise ValueError(f"baseline must be positive, got {upsilon_baseline}")
    if upsilon_test <= 0.0:
        raise ValueError(f"test value must be positive, got {upsilon_test}")
    return 100.0 * (upsilon_test / upsilon_baseline - 1.0)


def _noon_deep_rescale(pair: FisherPair, total_photons: int,
                       delta_true: float, delta_eff: float) -> FisherPair:
    """Restore true-Delta log scales after a plateau evaluation of a N00N state.

    The single (0, N) coherence scales exactly as exp(-N^2 Delta^2 / 2) and
    the Delta derivative carries one extra factor Delta, so the rescaled
    matrices are unchanged on the saturation plateau and only the log scales
    move.
    """
    shift = 0.5 * total_photons**2 * (delta_true**2 - delta_eff**2)
    new_phi = pair.log_scale_phi - shift
    new_delta = pair.log_scale_delta - shift + log(delta_true / delta_eff)
    factor = np.array(
        [
            [exp(2 * new_phi), exp(new_phi + new_delta)],
            [exp(new_phi + new_delta), exp(2 * new_delta)],
        ]
    )
    with np.errstate(under="ignore"):
        return replace(
            pair,
            f_c=pair.f_c_scaled * factor,
            f_q=pair.f_q_scaled * factor,
            w=pair.w_scaled * factor,
            sld_commutator_norm=pair.sld_commutator_norm_scaled * factor[0, 1],
            log_scale_phi=new_phi,
            log_scale_delta=new_delta,
        )


def evaluate_scenario(config: ScenarioConfig, with_classical: bool = True) -> ScenarioResult:
    """Run the full pipeline for one parameter point and attach figures of merit."""
    state = parse_state(config.state)
    flags = []
    delta_eval = config.delta
    is_noon = state.label.startswith("noon")
    if is_noon and 0.5 * (state.total_photons * config.delta) ** 2 > NOON_DEEP_LOG:
        delta_eval = NOON_SAFE_PRODUCT / state.total_photons
        flags.append(f"noon-plateau-eval:delta={delta_eval:.6g}")

    rho = build_blocked_state(state, config.phi, delta_eval, config.eta_a, config.eta_b)
    dphi, ddelta = parameter_derivatives(rho)
    grid = None
    if with_classical:
        half = config.grid_halfwidth or default_halfwidth(state.total_photons)
        grid = make_grid(half, config.grid_points)
    pair = compute_fisher_pair(rho, dphi, ddelta, grid)
    if delta_eval != config.delta:
        pair = _noon_deep_rescale(pair, state.total_photons, config.delta, delta_eval)

    upsilon = sigma2 = hcr = None
    if with_classical:
        try:
            upsilon = tradeoff_upsilon(pair)
            if not _offdiagonals_small(pair):
                flags.append("offdiag-coupling")
        except UndefinedFigureError as err:
            flags.append(f"upsilon-undefined:{err}")
    try:
        sigma2 = qcr_sum(pair)
        hcr = hcr_from_pair(pair)
    except UndefinedFigureError as err:
        flags.append(f"qcr-undefined:{err}")

    n, partition = _state_bookkeeping(state)
    return ScenarioResult(
        label=state.label,
        total_photons=state.total_photons,
        input_n=n,
        delta_partition=partition,
        phi=config.phi,
        delta=config.delta,
        eta_a=config.eta_a,
        eta_b=config.eta_b,
        pair=pair,
        upsilon=upsilon,
        sigma2=sigma2,
        hcr=hcr,
        flags=tuple(flags),
    )


def _worker_count() -> int:
    env = os.environ.get("FOCKFISHER_THREADS", "").strip()
    if env:
        count = int(env)
        if count < 1:
            raise ValueError(f"FOCKFISHER_THREADS must be >= 1, got {env!r}")
        return count
    return min(8, os.cpu_count() or 1)


def _evaluate_many(configs, with_classical=True):
    workers = _worker_count()
    if workers == 1 or len(configs) <= 1:
        return [evaluate_scenario(c, with_classical) for c in configs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: evaluate_scenario(c, with_classical), configs))


def default_delta_grid(config: ScenarioConfig) -> np.ndarray:
    lo, hi, count = config.delta_range
    grid = np.geomspace(lo, hi, int(count))
    anchors = [a for a in config.delta_anchors if lo <= a <= hi]
    return np.unique(np.round(np.concatenate([grid, anchors, [hi]]), 12))


def _result_to_row(res: ScenarioResult) -> SweepRow:
    return SweepRow(
        label=res.label,
        total_photons=res.total_photons,
        input_n=res.input_n,
        delta_partition=res.delta_partition,
        delta=res.delta,
        eta_a=res.eta_a,
        eta_b=res.eta_b,
        upsilon=res.upsilon,
        sigma2=res.sigma2,
        fc_phi=float(res.pair.f_c[0, 0]),
        fc_delta=float(res.pair.f_c[1, 1]),
        fq_phi=float(res.pair.f_q[0, 0]),
        fq_delta=float(res.pair.f_q[1, 1]),
        hcr=res.hcr,
        flags=";".join(res.flags),
    )


def sweep_delta(config: ScenarioConfig):
    """Trade-off and error-bound table over the diffusion axis."""
    deltas = default_delta_grid(config)
    configs = []
    for eta in config.etas:
        for family in config.families:
            for total in config.photon_numbers:
                state = family_state(family, total)
                for delta in deltas:
                    configs.append(
                        replace(
                            config,
                            state=state.label,
                            delta=float(delta),
                            eta_a=eta,
                            eta_b=eta,
                        )
                    )
    return [_result_to_row(r) for r in _evaluate_many(configs)]


def sweep_photon_number(config: ScenarioConfig):
    """Table over photon number at fixed diffusion, gHB partitions plus N00N."""
    configs = []
    for eta in config.etas:
        for k in config.partitions:
            for total in range(max(1, k), config.max_photons + 1):
                state = ghb_state(total, k)
                configs.append(
                    replace(config, state=state.label, eta_a=eta, eta_b=eta)
                )
        for total in range(1, config.max_photons + 1):
            configs.append(
                replace(config, state=f"noon:{total}", eta_a=eta, eta_b=eta)
            )
    return [_result_to_row(r) for r in _evaluate_many(configs)]


def sweep_family(config: ScenarioConfig):
    """Per-partition diffusion sweep at fixed N, with saturation cutoffs."""
    rows = []
    deltas = default_delta_grid(config)
    extension = np.unique(
        np.round(np.geomspace(deltas[-1], CUTOFF_DELTA_MAX, 10), 12)
    )
    full_grid = np.unique(np.concatenate([deltas, extension]))
    for eta in config.etas:
        for total in config.photon_numbers:
            for n in range(total + 1):
                state = ghb_state(total, n)
                configs = [
                    replace(config, state=state.label, delta=float(d),
                            eta_a=eta, eta_b=eta)
                    for d in full_grid
                ]
                results = _evaluate_many(configs)
                upsilons = {r.delta: r.upsilon for r in results}
                cutoff = _cutoff_from_curve(full_grid, upsilons)
                for res in results:
                    if res.delta <= deltas[-1] + 1e-12:
                        row = _result_to_row(res)
                        row.delta_cutoff = cutoff
                        rows.append(row)
    return rows


def _cutoff_from_curve(grid, upsilons, tol: float = 1e-3):
    ref = upsilons.get(float(grid[-1]))
    if ref is None or not isfinite(ref) or ref == 0.0:
        return None
    for d in grid[:-1]:
        u = upsilons.get(float(d))
        if u is not None and abs(u - ref) / abs(ref) < tol:
            return float(d)
    return None


def find_delta_cutoff(state_label: str, eta: float, tol: float = 1e-3,
                      config: ScenarioConfig = None) -> float:
    """Smallest grid Delta whose trade-off already sits on the plateau.

    The plateau reference is the trade-off at Delta = 8; returns None when
    the curve never settles within the relative tolerance.
    """
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    config = config or ScenarioConfig()
    deltas = default_delta_grid(config)
    full_grid = np.unique(
        np.concatenate([deltas, np.geomspace(deltas[-1], CUTOFF_DELTA_MAX, 10),
                        [CUTOFF_DELTA_MAX]])
    )
    configs = [
        replace(config, state=state_label, delta=float(d), eta_a=eta, eta_b=eta)
        for d in full_grid
    ]
    results = _evaluate_many(configs)
    upsilons = {r.delta: r.upsilon for r in results}
    return _cutoff_from_curve(full_grid, upsilons, tol)
