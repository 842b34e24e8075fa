"""Classical/quantum Fisher matrices, SLD diagnostics and the Holevo bound."""

from math import exp, sqrt

import numpy as np
import numpy.testing as npt
import pytest

from fockfisher import (
    BlockedDensity,
    apply_loss,
    apply_phase_diffusion,
    commutation_diagnostics,
    compute_fisher_pair,
    default_halfwidth,
    ghb_state,
    hb_state,
    hcr_bound,
    make_grid,
    noon_state,
    parameter_derivatives,
    qfi_and_slds,
)


def pair_for(state, phi=0.3, delta=0.5, eta=1.0, points=401, with_grid=True):
    rho = apply_phase_diffusion(state, phi, delta)
    if eta < 1.0:
        rho = apply_loss(rho, eta, eta)
    dphi, ddelta = parameter_derivatives(rho)
    grid = make_grid(default_halfwidth(state.total_photons), points) if with_grid else None
    return compute_fisher_pair(rho, dphi, ddelta, grid)


class TestQubitClosedForms:
    """The single-photon probe admits closed forms for every entry:
    with v = exp(-Delta^2/2) and s = sqrt(1 - v^2),

        F_Q = diag(v^2, Delta^2 v^2 / (1 - v^2))
        F_C = diag(1 - s,  Delta^2 (1 - s) / s)

    so the double homodyne extracts Upsilon = 1 at every diffusion strength.
    """

    @pytest.mark.parametrize("delta", [0.3, 0.7, 1.5])
    def test_quantum_entries(self, delta):
        pair = pair_for(ghb_state(1, 0), delta=delta, with_grid=False)
        v2 = exp(-delta**2)
        assert pair.f_q[0, 0] == pytest.approx(v2, abs=1e-10)
        assert pair.f_q[1, 1] == pytest.approx(delta**2 * v2 / (1 - v2), abs=1e-10)
        assert abs(pair.f_q[0, 1]) < 1e-10

    @pytest.mark.parametrize("delta", [0.3, 0.7, 1.5])
    def test_classical_entries(self, delta):
        pair = pair_for(ghb_state(1, 0), delta=delta)
        s = sqrt(1 - exp(-delta**2))
        assert pair.f_c[0, 0] == pytest.approx(1 - s, abs=5e-6)
        assert pair.f_c[1, 1] == pytest.approx(delta**2 * (1 - s) / s, abs=5e-6)
        assert abs(pair.f_c[0, 1]) < 1e-8

    def test_zero_diffusion_optimality(self):
        pair = pair_for(ghb_state(1, 0), delta=0.0)
        assert pair.f_c[0, 0] == pytest.approx(1.0, abs=1e-6)
        assert pair.f_q[0, 0] == pytest.approx(1.0, abs=1e-12)
        assert pair.f_q[1, 1] == 0.0


class TestPureStateQfi:
    @pytest.mark.parametrize(
        "maker,expected",
        [
            (lambda: ghb_state(2, 0), 2.0),
            (lambda: ghb_state(6, 0), 6.0),
            (lambda: noon_state(4), 16.0),
            (lambda: noon_state(6), 36.0),
            (lambda: hb_state(4), 12.0),
            (lambda: hb_state(6), 24.0),
        ],
    )
    def test_phase_qfi_is_four_photon_variances(self, maker, expected):
        state = maker()
        pair = pair_for(state, delta=0.0, with_grid=False)
        assert pair.f_q[0, 0] == pytest.approx(expected, abs=1e-8)
        assert pair.f_q[0, 0] == pytest.approx(
            4.0 * state.mode_a_photon_variance(), abs=1e-8
        )

    def test_delta_row_vanishes_at_zero_diffusion(self):
        pair = pair_for(ghb_state(4, 0), delta=0.0, with_grid=False)
        assert pair.f_q[1, 1] == 0.0
        assert pair.log_scale_delta == -np.inf


class TestInformationOrdering:
    @pytest.mark.parametrize("delta", [0.05, 0.5, 5.0])
    @pytest.mark.parametrize("eta", [1.0, 0.5])
    @pytest.mark.parametrize("maker", [lambda: ghb_state(4, 0), lambda: hb_state(6),
                                       lambda: noon_state(4), lambda: ghb_state(2, 1)])
    def test_quantum_dominates_classical(self, maker, delta, eta):
        pair = pair_for(maker(), delta=delta, eta=eta)
        gap = np.linalg.eigvalsh(pair.f_q_scaled - pair.f_c_scaled).min()
        assert gap > -1e-8

    @pytest.mark.parametrize("eta", [1.0, 0.5])
    def test_phi_independence(self, eta):
        entries = []
        for phi in (0.0, 0.4, 1.3):
            pair = pair_for(ghb_state(2, 0), phi=phi, delta=0.7, eta=eta)
            entries.append(
                [pair.f_c[0, 0], pair.f_c[1, 1], pair.f_q[0, 0], pair.f_q[1, 1]]
            )
        entries = np.asarray(entries)
        spread = np.max(np.abs(entries - entries[0]) / np.abs(entries[0]))
        assert spread < 1e-6


class TestSldDiagnostics:
    def test_diagonal_state_has_vanishing_diagnostics(self):
        rho = BlockedDensity(2, {(0, 0): np.diag([0.5, 0.3, 0.2]).astype(complex)},
                             0.0, 1.0)
        dphi, ddelta = parameter_derivatives(rho)
        _, slds = qfi_and_slds(rho, dphi, ddelta)
        trace, norm = commutation_diagnostics(rho, slds.phi, slds.delta)
        assert trace == 0.0
        assert norm == 0.0

    @pytest.mark.parametrize("eta", [1.0, 0.5])
    def test_ghb_trace_condition_vanishes(self, eta):
        state = ghb_state(4, 0)
        rho = apply_phase_diffusion(state, 0.3, 0.7)
        if eta < 1.0:
            rho = apply_loss(rho, eta, eta)
        dphi, ddelta = parameter_derivatives(rho)
        _, slds = qfi_and_slds(rho, dphi, ddelta)
        trace, norm = commutation_diagnostics(rho, slds.phi, slds.delta)
        assert abs(trace) < 1e-8
        assert norm > 1e-3

    def test_non_hermitian_rejected(self):
        bad = np.array([[0.5, 0.4], [0.1, 0.5]], dtype=complex)
        rho = BlockedDensity(1, {(0, 0): bad}, 0.0, 0.5)
        dphi, ddelta = parameter_derivatives(rho)
        with pytest.raises(ValueError):
            qfi_and_slds(rho, dphi, ddelta)


class TestHolevoBound:
    def test_collapses_to_qcr_sum_without_incompatibility(self):
        f_q = np.array([[2.0, 0.0], [0.0, 4.0]])
        assert hcr_bound(np.eye(2), f_q, np.zeros((2, 2))) == pytest.approx(0.75)

    def test_two_by_two_closed_form(self):
        a, b, w = 2.0, 5.0, 0.3
        f_q = np.diag([a, b])
        w_mat = np.array([[0.0, 1j * w], [-1j * w, 0.0]])
        expected = 1 / a + 1 / b + w / (a * b)
        assert hcr_bound(np.eye(2), f_q, w_mat) == pytest.approx(expected, abs=1e-12)

    def test_singular_rejected_with_named_entry(self):
        f_q = np.diag([1.0, 0.0])
        with pytest.raises(ValueError, match="Delta"):
            hcr_bound(np.eye(2), f_q, np.zeros((2, 2)))


class TestBlockStructure:
    def test_qfi_additive_over_blocks(self):
        """Blocked QFI equals a dense computation on the full direct sum."""
        state = ghb_state(3, 0)
        rho = apply_loss(apply_phase_diffusion(state, 0.3, 0.5), 0.6, 0.6)
        dphi, ddelta = parameter_derivatives(rho)
        f_blocked, _ = qfi_and_slds(rho, dphi, ddelta)

        def direct_sum(op):
            keys = sorted(op.blocks)
            dim = sum(op.blocks[k].shape[0] for k in keys)
            out = np.zeros((dim, dim), dtype=complex)
            pos = 0
            for k in keys:
                b = op.blocks[k]
                out[pos:pos + b.shape[0], pos:pos + b.shape[0]] = b
                pos += b.shape[0]
            return out

        big = direct_sum(rho)
        derivs = [direct_sum(dphi), direct_sum(ddelta)]
        lam, vec = np.linalg.eigh(big)
        lam = np.clip(lam, 0.0, None)
        lam_sum = lam[:, None] + lam[None, :]
        on = lam_sum > 1e-10
        inv = np.where(on, 1.0 / np.where(on, lam_sum, 1.0), 0.0)
        f_dense = np.empty((2, 2))
        rot = [vec.conj().T @ d @ vec for d in derivs]
        for i in range(2):
            for j in range(2):
                f_dense[i, j] = float(np.sum(2.0 * (rot[i] * rot[j].conj()).real * inv))
        npt.assert_allclose(f_blocked, f_dense, atol=1e-10)


class TestScaling:
    def test_plain_matches_unscaled_at_moderate_diffusion(self):
        """The rescaled pipeline must reproduce a direct computation exactly
        up to the float division by a power of two (which is lossless)."""
        from fockfisher import classical_fisher, joint_pdf

        state = ghb_state(3, 1)
        rho = apply_phase_diffusion(state, 0.4, 0.9)
        dphi, ddelta = parameter_derivatives(rho)
        grid = make_grid(default_halfwidth(3), 401)
        pair = compute_fisher_pair(rho, dphi, ddelta, grid)
        direct = classical_fisher(joint_pdf(rho, dphi, ddelta, grid), grid)
        npt.assert_allclose(pair.f_c, direct, rtol=1e-12)
        f_direct, _ = qfi_and_slds(rho, dphi, ddelta)
        npt.assert_allclose(pair.f_q, f_direct, rtol=1e-12)

    def test_scales_survive_deep_diffusion(self):
        pair = pair_for(noon_state(6), delta=5.0, with_grid=False)
        # plain entries underflow, rescaled ones stay O(1)
        assert pair.f_q[0, 0] == 0.0
        assert pair.f_q_scaled[0, 0] > 1e-3
        assert np.isfinite(pair.log_scale_phi)

    def test_norm_error_recorded(self):
        pair = pair_for(ghb_state(2, 0), delta=0.5)
        assert pair.pdf_norm_error < 1e-6
