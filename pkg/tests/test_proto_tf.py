"""Relay-session tests: flip rule, click model, announcements, accounting."""

import math
from dataclasses import replace

import numpy as np
import pytest

from qkdeff.errors import ParameterError
from qkdeff.proto_tf import TfConfig, run_tf_session, tf_ledger

IDEAL = TfConfig(
    n_pulses=50_000, p_x=0.999, p_click_match=1.0,
    p_click_conflict=0.0, p_dark_relay=0.0, rng_seed=1,
)


def three_sigma(p: float, n: int) -> float:
    return 3.0 * math.sqrt(p * (1.0 - p) / n)


class TestIdealClicks:
    def test_flip_rule_gives_identical_keys(self):
        rep = run_tf_session(IDEAL)
        assert rep.qber_x == 0.0
        assert np.array_equal(rep.alice_key, rep.bob_key)
        assert rep.matched_disagreement_rate == 0.0
        assert rep.final_key_bits == rep.alice_key.size  # H(0) = 0 stub

    def test_relay_outcome_bits_exactly_two_per_pulse(self):
        rep = run_tf_session(IDEAL)
        assert rep.ledger.reception_ack == 2 * IDEAL.n_pulses
        assert tf_ledger(rep)["relay_outcomes"] == 2 * IDEAL.n_pulses

    def test_every_pair_single_clicks(self):
        rep = run_tf_session(IDEAL)
        assert rep.n_detected == IDEAL.n_pulses
        expect = IDEAL.p_x**2 + (1 - IDEAL.p_x) ** 2
        assert abs(rep.empirical_sift_rate - expect) < three_sigma(
            expect, IDEAL.n_pulses
        )


class TestClickModel:
    def test_sift_rate_scales_with_click_probability(self):
        cfg = replace(IDEAL, p_click_match=0.9, rng_seed=2, n_pulses=200_000)
        rep = run_tf_session(cfg)
        expect = 0.9 * (cfg.p_x**2 + (1 - cfg.p_x) ** 2)
        assert abs(rep.empirical_sift_rate - expect) < three_sigma(
            expect, cfg.n_pulses
        )

    def test_conflict_clicks_raise_qber(self):
        cfg = replace(IDEAL, p_click_match=0.9, p_click_conflict=0.05,
                      n_pulses=400_000, pe_frac=0.5, rng_seed=3)
        rep = run_tf_session(cfg)
        # wrong-port clicks flip the correlation; among single-click X pairs
        # the error odds are p_conflict*(1-p_match) : p_match*(1-p_conflict)
        err = 0.05 * 0.1 / (0.05 * 0.1 + 0.9 * 0.95)
        assert abs(rep.qber_x - err) < three_sigma(err, rep.v_prime)

    def test_saturated_dark_counts_kill_sifting(self):
        cfg = replace(IDEAL, p_dark_relay=1.0, rng_seed=4, n_pulses=10_000)
        rep = run_tf_session(cfg)  # both detectors always click -> no singles
        assert rep.n_detected == 0
        assert rep.f_card == 0
        assert rep.final_key_bits == 0


class TestAnnouncements:
    def test_compressed_basis_sizes(self):
        cfg = replace(IDEAL, n_pulses=100_000, degree_k=8, rng_seed=5)
        rep = run_tf_session(cfg)
        target = 2 * cfg.n_pulses / 8
        combined = rep.ledger.alice_match + rep.ledger.bob_bases
        assert abs(combined - target) / target < 0.05
        assert combined <= 2 * cfg.n_pulses  # never worse than raw

    def test_announcement_symmetry(self):
        sizes_a, sizes_b = [], []
        for seed in range(6, 11):
            rep = run_tf_session(replace(IDEAL, n_pulses=50_000, rng_seed=seed))
            sizes_a.append(rep.ledger.alice_match)
            sizes_b.append(rep.ledger.bob_bases)
        # identical distributions: means agree within a few expected codewords
        assert abs(np.mean(sizes_a) - np.mean(sizes_b)) < 0.01 * np.mean(sizes_a)

    def test_ledger_table_fields(self):
        rep = run_tf_session(replace(IDEAL, n_pulses=10_000, rng_seed=11))
        table = tf_ledger(rep)
        assert set(table) == {
            "relay_outcomes", "alice_bases_compressed", "bob_bases_compressed",
            "pe_sacrifice", "ec_bits", "pa_bits", "total",
        }
        assert table["total"] == pytest.approx(rep.ledger.total(), rel=1e-12)

    def test_empty_session_all_zero(self):
        rep = run_tf_session(replace(IDEAL, n_pulses=0))
        assert rep.ledger.total() == 0.0
        assert tf_ledger(rep)["relay_outcomes"] == 0
        assert rep.final_key_bits == 0


class TestDeterminismAndValidation:
    def test_deterministic_given_seed(self):
        cfg = replace(IDEAL, n_pulses=20_000, p_click_match=0.8, rng_seed=12)
        a, b = run_tf_session(cfg), run_tf_session(cfg)
        assert a.as_dict() == b.as_dict()

    def test_domains(self):
        with pytest.raises(ParameterError):
            TfConfig(n_pulses=-1)
        with pytest.raises(ParameterError):
            TfConfig(n_pulses=10, p_x=0.4)
        with pytest.raises(ParameterError):
            TfConfig(n_pulses=10, amplitudes=(0.1,), amplitude_probs=(1.0,))
        with pytest.raises(ParameterError):
            TfConfig(n_pulses=10, amplitude_probs=(0.7, 0.7))
        with pytest.raises(ParameterError):
            TfConfig(n_pulses=10, p_click_match=1.5)
        with pytest.raises(ParameterError):
            TfConfig(n_pulses=10, f_ec=0.5)
