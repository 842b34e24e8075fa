"""Figures of merit and sweep drivers."""

import numpy as np
import pytest

from fockfisher import (
    ScenarioConfig,
    UndefinedFigureError,
    evaluate_scenario,
    find_delta_cutoff,
    hcr_from_pair,
    parse_state,
    qcr_sum,
    sensitivity_gain,
    sweep_delta,
    sweep_family,
    sweep_photon_number,
    tradeoff_upsilon,
)
from fockfisher.fisher import FisherPair
from fockfisher.metrics import _cutoff_from_curve, default_delta_grid

FAST = dict(grid_points=201, delta_range=(0.02, 5.0, 8), delta_anchors=())


def manual_pair(f_c, f_q):
    f_c = np.asarray(f_c, dtype=float)
    f_q = np.asarray(f_q, dtype=float)
    zeros = np.zeros((2, 2), dtype=complex)
    return FisherPair(
        f_c=f_c, f_q=f_q, w=zeros, sld_commutator_norm=0.0,
        f_c_scaled=f_c, f_q_scaled=f_q, w_scaled=zeros,
        sld_commutator_norm_scaled=0.0, log_scale_phi=0.0, log_scale_delta=0.0,
    )


class TestStateParsing:
    def test_grammar(self):
        assert parse_state("ghb:0,6").label == "ghb:0,6"
        assert parse_state("ghb:2,3").total_photons == 5
        assert parse_state("hb:4").label == "hb:4"
        assert parse_state("noon:6").label == "noon:6"

    @pytest.mark.parametrize("bad", ["ghb:6", "hb:2,2", "noon", "xyz:3", "ghb:-1,2"])
    def test_rejects_malformed(self, bad):
        with pytest.raises(ValueError):
            parse_state(bad)


class TestTradeoff:
    def test_saturation_value(self):
        pair = manual_pair(np.diag([2.0, 4.0]), np.diag([2.0, 4.0]))
        assert tradeoff_upsilon(pair) == pytest.approx(2.0)

    def test_undefined_when_quantum_row_vanishes(self):
        pair = manual_pair(np.diag([1.0, 1.0]), np.diag([1.0, 0.0]))
        with pytest.raises(UndefinedFigureError):
            tradeoff_upsilon(pair)

    @pytest.mark.parametrize("delta", [0.1, 1.0, 4.0])
    @pytest.mark.parametrize("eta", [1.0, 0.5])
    def test_qubit_bound(self, delta, eta):
        res = evaluate_scenario(
            ScenarioConfig(state="ghb:0,1", delta=delta, eta_a=eta, eta_b=eta)
        )
        assert res.upsilon <= 1.0 + 1e-6

    def test_lossless_qubit_saturates_bound(self):
        res = evaluate_scenario(ScenarioConfig(state="ghb:0,1", delta=0.8))
        assert res.upsilon == pytest.approx(1.0, abs=1e-6)

    def test_noon_saturates_bound_at_plateau(self):
        res = evaluate_scenario(ScenarioConfig(state="noon:6", delta=5.0))
        assert res.upsilon == pytest.approx(1.0, abs=0.02)


class TestQcrSum:
    def test_arithmetic(self):
        pair = manual_pair(np.eye(2), np.diag([2.0, 4.0]))
        assert qcr_sum(pair) == pytest.approx(0.75)

    def test_singular_rejected(self):
        pair = manual_pair(np.eye(2), np.diag([2.0, 0.0]))
        with pytest.raises(UndefinedFigureError):
            qcr_sum(pair)

    def test_zero_diffusion_flagged_in_scenario(self):
        res = evaluate_scenario(ScenarioConfig(state="ghb:0,2", delta=0.0))
        assert res.sigma2 is None and res.upsilon is None
        assert any("undefined" in f for f in res.flags)

    def test_hcr_matches_qcr_sum_for_ghb(self):
        res = evaluate_scenario(ScenarioConfig(state="ghb:0,4", delta=0.7))
        assert res.hcr == pytest.approx(res.sigma2, abs=1e-8)


class TestSensitivityGain:
    def test_examples(self):
        assert sensitivity_gain(1.4497, 1.0) == pytest.approx(44.97)
        assert sensitivity_gain(0.73, 0.73) == 0.0

    def test_zero_baseline_rejected(self):
        with pytest.raises(ValueError):
            sensitivity_gain(1.0, 0.0)


class TestDeltaCutoff:
    def test_constant_curve_returns_grid_minimum(self):
        grid = np.array([0.1, 0.5, 1.0, 8.0])
        curve = {d: 1.5 for d in grid}
        assert _cutoff_from_curve(grid, curve) == pytest.approx(0.1)

    def test_never_settling_curve_is_not_found(self):
        grid = np.array([0.1, 0.5, 1.0, 8.0])
        curve = {0.1: 0.2, 0.5: 0.8, 1.0: 1.2, 8.0: 2.0}
        assert _cutoff_from_curve(grid, curve) is None

    def test_hb_cutoff_is_early(self):
        cutoff = find_delta_cutoff("hb:4", 1.0, config=ScenarioConfig(**FAST))
        assert cutoff is not None
        assert cutoff <= 1.6

    def test_tolerance_validation(self):
        with pytest.raises(ValueError):
            find_delta_cutoff("hb:4", 1.0, tol=0.0)


class TestPinnedOutputs:
    """Frozen outputs of this implementation; guards against regressions.

    The values were cross-validated against a dense two-mode simulation,
    fidelity-based quantum-information differences and the qubit closed
    forms.
    """

    def test_ghb06_plateau(self):
        res = evaluate_scenario(ScenarioConfig(state="ghb:0,6", delta=5.0))
        assert res.upsilon == pytest.approx(1.380083, abs=5e-4)

    def test_lossy_plateau_pair(self):
        g = evaluate_scenario(
            ScenarioConfig(state="ghb:0,6", delta=5.0, eta_a=0.5, eta_b=0.5)
        )
        h = evaluate_scenario(
            ScenarioConfig(state="hb:6", delta=5.0, eta_a=0.5, eta_b=0.5)
        )
        assert g.upsilon == pytest.approx(1.138509, abs=5e-4)
        assert h.upsilon == pytest.approx(0.535112, abs=5e-4)


class TestNoonDeepDiffusion:
    def test_plateau_evaluation_flagged(self):
        res = evaluate_scenario(ScenarioConfig(state="noon:10", delta=5.0))
        assert any(f.startswith("noon-plateau-eval") for f in res.flags)
        assert res.upsilon == pytest.approx(1.0, abs=0.02)
        assert res.sigma2 == np.inf

    def test_continuous_with_direct_evaluation(self):
        # N=7 at Delta=5 is directly representable; N=7 at a slightly larger
        # Delta crosses into plateau evaluation and must agree
        direct = evaluate_scenario(ScenarioConfig(state="noon:7", delta=5.0))
        routed = evaluate_scenario(ScenarioConfig(state="noon:7", delta=5.5))
        assert not any(f.startswith("noon") for f in direct.flags)
        assert any(f.startswith("noon") for f in routed.flags)
        assert routed.upsilon == pytest.approx(direct.upsilon, rel=1e-6)


class TestSweeps:
    def test_delta_sweep_shape_and_determinism(self, monkeypatch):
        monkeypatch.setenv("FOCKFISHER_THREADS", "2")
        cfg = ScenarioConfig(families=("ghb0",), photon_numbers=(2,),
                             etas=(1.0,), **FAST)
        rows_a = sweep_delta(cfg)
        rows_b = sweep_delta(cfg)
        grid = default_delta_grid(cfg)
        assert len(rows_a) == len(grid)
        assert [r.delta for r in rows_a] == [r.delta for r in rows_b]
        assert [r.upsilon for r in rows_a] == [r.upsilon for r in rows_b]
        assert all(r.label == "ghb:0,2" for r in rows_a)

    def test_photon_sweep_rows(self):
        cfg = ScenarioConfig(partitions=(0, 2), etas=(1.0,), delta=5.0,
                             max_photons=3, **FAST)
        rows = sweep_photon_number(cfg)
        labels = [(r.label, r.total_photons) for r in rows]
        # k=0 -> N in 1..3, k=2 -> N in 2..3, noon -> N in 1..3
        assert ("ghb:0,1", 1) in labels and ("ghb:0,3", 3) in labels
        assert ("ghb:2,0", 2) in labels and ("ghb:2,1", 3) in labels
        assert ("noon:1", 1) in labels and ("noon:3", 3) in labels
        assert len(rows) == 8

    def test_family_sweep_carries_cutoffs(self):
        cfg = ScenarioConfig(photon_numbers=(2,), etas=(1.0,), **FAST)
        rows = sweep_family(cfg)
        assert {r.input_n for r in rows} == {0, 1, 2}
        assert all(r.delta <= 5.0 + 1e-9 for r in rows)
        partitions = {r.input_n: r.delta_cutoff for r in rows}
        assert all(c is None or c > 0 for c in partitions.values())

    def test_partition_symmetry(self):
        """Conjugate partitions n and N-n differ by a phase-like relabeling
        and must extract identical information."""
        cfg = ScenarioConfig(photon_numbers=(4,), etas=(1.0,),
                             partitions=(0, 4), delta=2.0, max_photons=4, **FAST)
        rows = sweep_photon_number(cfg)
        up = {r.label: r.upsilon for r in rows if r.total_photons == 4}
        assert up["ghb:0,4"] == pytest.approx(up["ghb:4,0"], rel=1e-9)


class TestConfigValidation:
    def test_delta_floor(self):
        with pytest.raises(ValueError):
            ScenarioConfig(delta_range=(0.001, 5.0, 10))

    def test_photon_cap(self):
        with pytest.raises(ValueError):
            ScenarioConfig(max_photons=25)


class TestHcrDeepScale:
    def test_hcr_overflow_is_honest(self):
        res = evaluate_scenario(ScenarioConfig(state="noon:6", delta=5.0))
        assert res.sigma2 == np.inf
        assert res.hcr == np.inf

    def test_hcr_from_pair_matches_plain_bound(self):
        from fockfisher import hcr_bound

        res = evaluate_scenario(ScenarioConfig(state="ghb:0,3", delta=0.8))
        pair = res.pair
        plain = hcr_bound(np.eye(2), pair.f_q, pair.w)
        # plain bound uses the full inverse; diagonal-dominant cases agree
        assert hcr_from_pair(pair) == pytest.approx(plain, rel=1e-6)
