"""Acceptance suite: one test per release criterion, each printing a status line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion lines.
Frozen reference numbers come from an independent 40-digit mpmath evaluation
of the closed forms.
"""

import math
import time
from contextlib import contextmanager
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from qkdeff.cli import main as cli_main
from qkdeff.core import (
    ChannelParams,
    ProtocolParams,
    classical_bits,
    determine_optimality,
    optimality_bb84,
    qber,
    total_efficiency,
)
from qkdeff.proto_bb84 import SessionConfig, run_session
from qkdeff.proto_tf import TfConfig, run_tf_session
from qkdeff.squeeze import build_codebook, decode, encode, sigma_curve

OPT_FIG2_L0 = 0.07383725278977086559877699974772215181614  # 40-digit oracle
FIG2 = ChannelParams(alpha=0.2, length_km=0.0, eta_det=0.3,
                     p_dark=1e-8, e_opt=0.03, e0=0.5, f=1.0)


@contextmanager
def criterion(name: str, budget_s: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL ({time.perf_counter() - start:.2f}s)")
        raise
    elapsed = time.perf_counter() - start
    print(f"ACCEPTANCE {name}: PASS ({elapsed:.2f}s, budget {budget_s:g}s)")
    assert elapsed < budget_s, f"{name} exceeded its {budget_s}s runtime budget"


def sample_channel(rng) -> ChannelParams:
    return ChannelParams(
        alpha=rng.uniform(0.0, 0.5),
        length_km=rng.uniform(0.0, 100.0),
        eta_det=rng.uniform(0.05, 1.0),
        p_dark=rng.uniform(0.0, 1e-5),
        e_opt=rng.uniform(0.0, 0.1),
        e0=0.5,
        f=rng.uniform(1.0, 1.2),
    )


def test_appendix_golden_vectors():
    build_codebook(2, 0.999)  # warm-up outside the timed region
    with criterion("appendix-golden-vectors", budget_s=1.0):
        t0 = time.perf_counter()
        cb = build_codebook(2, 0.999)
        build_ms = (time.perf_counter() - t0) * 1e3
        got = [(e.block, e.probability, e.codeword) for e in cb.entries]
        assert got == [
            (0b00, 0.998001, "0"),
            (0b01, 0.000999, "10"),
            (0b10, 0.000999, "110"),
            (0b11, 1e-06, "111"),
        ], "codebook does not reproduce the published k=2, p(Z)=0.999 tables"
        assert build_ms < 1.0, f"codebook build took {build_ms:.3f} ms"


def test_asymptotic_compression_law():
    with criterion("asymptotic-compression-law", budget_s=1.0):
        ks = range(2, 25)
        analytic = sigma_curve(ks, 1 - 1e-12)
        for k, sig in analytic:
            law = (1 - 1 / k) * 100
            assert abs(sig - law) / law < 1e-9

        finite = sigma_curve(ks, 0.999999)
        for (k, sig), (_, ref) in zip(finite, analytic):
            assert abs(sig - ref) < 0.1  # percentage points

        values = [sig for _, sig in finite]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert values[0] == pytest.approx(50.0, abs=0.1)  # Fig-1 shape:
        assert values[-1] > 95.0                          # 50% rising toward 100%


def test_codec_properties():
    with criterion("codec-properties", budget_s=30.0):
        for k in range(1, 13):
            cb = build_codebook(k, 0.999)
            size = 1 << k
            lengths = [len(e.codeword) for e in cb.entries]
            assert lengths == list(range(1, size)) + [size - 1]
            # prefix-freeness: any prefix pair appears adjacent in sorted order
            words = sorted(e.codeword for e in cb.entries)
            assert len(set(words)) == size
            assert not any(b.startswith(a) for a, b in zip(words, words[1:]))
            # Kraft equality, exact
            assert sum(Fraction(1, 2**l) for l in lengths) == 1

        for k in range(1, 13):
            cb = build_codebook(k, 0.999)
            rng = np.random.default_rng(7000 + k)
            big = (rng.random(10_000) < 0.01).astype(np.uint8)
            out, _ = encode(big, cb)
            assert np.array_equal(decode(out, cb, big.size), big)
            for i in range(10_000):
                n = int(rng.integers(1, 97))
                if i % 100 == 0:
                    bits = np.ones(n, dtype=np.uint8)  # adversarial input
                else:
                    bias = 0.02 if i % 3 else 0.5
                    bits = (rng.random(n) < bias).astype(np.uint8)
                out, _ = encode(bits, cb)
                assert np.array_equal(decode(out, cb, n), bits)


def test_fig2_reproduction(tmp_path):
    with criterion("fig2-reproduction", budget_s=1.0):
        out = tmp_path / "curve.csv"
        assert cli_main(["curve", "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "L_km,eff_standard,eff_optimal"
        rows = [line.split(",") for line in lines[1:]]
        assert len(rows) == 101 and rows[0][0] == "0" and rows[-1][0] == "100"

        std = [float(r[1]) for r in rows]
        opt = [float(r[2]) for r in rows]
        assert abs(opt[0] - OPT_FIG2_L0) < 1e-3
        assert all(o >= s for o, s in zip(opt, std))
        assert all(b < a for a, b in zip(opt, opt[1:]))
        assert all(b < a for a, b in zip(std, std[1:]))


def test_algebraic_identity():
    with criterion("algebraic-identity", budget_s=1.0):
        rng = np.random.default_rng(11)
        corner = ProtocolParams(s=1.0, sigma=1.0, xi=1.0, delta=0.0)
        for _ in range(1000):
            ch = sample_channel(rng)
            via_limit = total_efficiency(ch, corner).efficiency
            closed = optimality_bb84(ch)
            if closed == 0.0:
                assert via_limit == 0.0
            else:
                assert abs(via_limit - closed) / closed <= 1e-12


def test_monotonicity_sweep():
    with criterion("monotonicity-sweep", budget_s=5.0):
        rng = np.random.default_rng(13)
        accepted = 0
        while accepted < 10_000:
            ch = sample_channel(rng)
            pp = ProtocolParams(
                s=rng.uniform(0.05, 1.0),
                sigma=rng.uniform(0.0, 1.0),
                xi=rng.uniform(0.0, 1.0),
            )
            base = total_efficiency(ch, pp)
            if base.extinct:
                continue
            for knob in ("s", "sigma", "xi"):
                bumped = replace(pp, **{knob: min(1.0, getattr(pp, knob) + 0.01)})
                assert total_efficiency(ch, bumped).efficiency >= base.efficiency, (
                    f"efficiency decreased when bumping {knob} at {ch} {pp}"
                )
            accepted += 1


def test_simulation_analytic_bridge():
    with criterion("simulation-analytic-bridge", budget_s=60.0):
        n = 1_000_000
        ch = replace(FIG2, length_km=50.0)
        cfg = SessionConfig(n_qubits=n, p_b=0.999, degree_k=8,
                            channel=ch, lossless=False, rng_seed=314)
        rep = run_session(cfg)

        p_match = 0.999**2 + 0.001**2
        se = math.sqrt(p_match * (1 - p_match) / rep.n_detected)
        assert abs(rep.empirical_sift_rate - p_match) <= 3 * se

        e_model = qber(ch)
        se_e = math.sqrt(e_model * (1 - e_model) / rep.f_card)
        assert abs(rep.matched_disagreement_rate - e_model) <= 3 * se_e

        pp = ProtocolParams(
            s=rep.empirical_sift_rate,
            sigma=rep.empirical_sigma,
            delta=rep.ledger.pe_sacrifice / n,
            xi=1.0,
            n_qubits=float(n),
        )
        analytic = classical_bits(ch, pp).total()
        empirical = rep.ledger.total()
        assert abs(empirical - analytic) / analytic < 0.02


def test_tf_flip_rule_correctness():
    with criterion("tf-flip-rule", budget_s=10.0):
        cfg = TfConfig(n_pulses=100_000, p_x=0.999, p_click_match=1.0,
                       p_click_conflict=0.0, p_dark_relay=0.0, rng_seed=99)
        rep = run_tf_session(cfg)
        assert np.array_equal(rep.alice_key, rep.bob_key)
        assert rep.alice_key.size > 0
        assert rep.qber_x == 0.0
        assert rep.ledger.reception_ack == 2 * cfg.n_pulses


def test_simulation_determinism(tmp_path):
    with criterion("simulation-determinism", budget_s=30.0):
        for cmd, extra in (
            ("simulate-bb84", ["--set", "n_qubits=50000"]),
            ("simulate-tf", ["--set", "n_pulses=50000"]),
        ):
            blobs = []
            for i in range(3):
                out = tmp_path / f"{cmd}-{i}.json"
                code = cli_main(
                    [cmd, "--format", "json", "--seed", "2024",
                     *extra, "--out", str(out)]
                )
                assert code == 0
                blobs.append(out.read_bytes())
            assert blobs[0] == blobs[1] == blobs[2]
