"""Event-level simulation of the relay-mediated (twin-field style) session.

Both parties send pulse pairs to a middle node that announces which of its two
interference detectors clicked.  The optics are abstracted into a click model:
for pairs where both parties chose the key (X) basis, equal key bits fire the
constructive-port detector with probability p_click_match and the destructive
port with p_click_conflict (reversed for unequal bits); pairs involving the
decoy (Z) basis or a basis mismatch carry a random relative phase, modeled as a
fair coin between the two cases.  Relay dark counts are OR-ed onto each
detector independently.

Basis announcements encode the dominant X basis as bit 0 so the squeeze codec
sees a 0-biased stream.  Decoy-state analysis is out of scope: Z-basis events
are generated, announced, and sifted, but contribute only to the accounting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import squeeze
from .core import SessionLedger, binary_entropy
from .errors import ParameterError, SimulationIntegrityError
from .proto_bb84 import SessionReport, _announce


@dataclass(frozen=True)
class TfConfig:
    """Relay session parameters; click-model knobs live under the tf.* keys.

    p_x is the probability of the key-generation X basis (p_x -> 1 in the
    optimal regime).  ``amplitudes`` is the finite set of decoy intensities
    for Z-basis pulses with selection distribution ``amplitude_probs``.
    pe_frac is the fraction of sifted X events sacrificed for the error-rate
    estimate; f_ec feeds the error-correction bit-count stub.
    """

    n_pulses: int
    p_x: float = 0.999
    amplitudes: tuple[float, ...] = (0.1, 0.2)
    amplitude_probs: tuple[float, ...] = (0.5, 0.5)
    degree_k: int = 8
    p_click_match: float = 0.9
    p_click_conflict: float = 0.0
    p_dark_relay: float = 0.0
    pe_frac: float = 0.01
    f_ec: float = 1.1
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_pulses < 0:
            raise ParameterError("n_pulses must be >= 0")
        if not 0.5 < self.p_x < 1.0:
            raise ParameterError(f"p_x must lie in (0.5, 1), got {self.p_x}")
        if len(self.amplitudes) < 2:
            raise ParameterError("amplitude set must hold at least 2 values")
        if any(a < 0 for a in self.amplitudes):
            raise ParameterError("amplitudes must be nonnegative")
        if len(self.amplitude_probs) != len(self.amplitudes):
            raise ParameterError("amplitude_probs must match amplitudes")
        if abs(sum(self.amplitude_probs) - 1.0) > 1e-9:
            raise ParameterError("amplitude_probs must sum to 1")
        for name in ("p_click_match", "p_click_conflict", "p_dark_relay"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1], got {v}")
        if not 0.0 < self.pe_frac < 1.0:
            raise ParameterError("pe_frac must lie in (0, 1)")
        if self.f_ec < 1.0:
            raise ParameterError("f_ec must be >= 1")
        if self.degree_k < 1:
            raise ParameterError("degree_k must be >= 1")
        if self.rng_seed < 0:
            raise ParameterError("rng_seed must be nonnegative")

    def stage_rngs(self) -> tuple[np.random.Generator, ...]:
        seqs = np.random.SeedSequence(self.rng_seed).spawn(2)
        return tuple(np.random.Generator(np.random.PCG64(s)) for s in seqs)


def _empty_tf_report() -> SessionReport:
    zero = SessionLedger(0, 0, 0, 0, 0, 0, qubits_sent=0, qubits_detected=0)
    empty = np.zeros(0, np.uint8)
    return SessionReport(
        n_qubits=0, n_detected=0, f_card=0, v_card=0, w_card=0,
        v_prime=0, w_prime=0, v_dprime=0, w_dprime=0,
        qber_x=None, qber_z=None, aborted=False,
        alice_key=empty, bob_key=empty, final_key_bits=0,
        empirical_sift_rate=0.0, matched_disagreement_rate=0.0,
        empirical_sigma=0.0, classical_bits_per_qubit=0.0,
        empirical_efficiency=0.0, ledger=zero, ledger_raw=zero,
    )


def run_tf_session(cfg: TfConfig) -> SessionReport:
    """Simulate one relay session and account for every announcement.

    Report-field mapping for the relay scheme: f_card counts basis-matched
    single-click events, v_card the sifted X (key) events, w_card the sifted Z
    (decoy) events; qber_x is estimated on the sacrificed X subset after the
    flip rule (destructive-port click means Bob's bit is the complement).
    The ledger maps relay outcome announcements (2 bits per pulse pair) onto
    the reception_ack slot and the two compressed basis announcements onto the
    bob_bases / alice_match slots; qubits_sent counts pulses from both
    parties (2N quantum-channel uses).
    """
    n = cfg.n_pulses
    if n == 0:
        return _empty_tf_report()
    rng_events, rng_pe = cfg.stage_rngs()

    # basis bit: 0 = X (dominant, key), 1 = Z (decoy)
    h_a = (rng_events.random(n) >= cfg.p_x).astype(np.uint8)
    h_b = (rng_events.random(n) >= cfg.p_x).astype(np.uint8)
    bits_a = (rng_events.random(n) < 0.5).astype(np.uint8)
    bits_b = (rng_events.random(n) < 0.5).astype(np.uint8)
    # decoy intensities are drawn per pulse but not analyzed further
    _amp_a = rng_events.choice(len(cfg.amplitudes), size=n, p=cfg.amplitude_probs)
    _amp_b = rng_events.choice(len(cfg.amplitudes), size=n, p=cfg.amplitude_probs)

    both_x = (h_a == 0) & (h_b == 0)
    equal_bits = bits_a == bits_b
    coin = rng_events.random(n) < 0.5  # random relative phase for non-key pairs
    constructive = np.where(both_x, equal_bits, coin)

    u = rng_events.random(n)
    v = rng_events.random(n)
    click_c = np.where(constructive, u < cfg.p_click_match, u < cfg.p_click_conflict)
    click_d = np.where(constructive, v < cfg.p_click_conflict, v < cfg.p_click_match)
    click_c |= rng_events.random(n) < cfg.p_dark_relay
    click_d |= rng_events.random(n) < cfg.p_dark_relay

    relay_bits = 2 * n  # one bit per detector per pulse pair

    # both parties announce their basis sequences in the container format
    cb = squeeze.build_codebook(cfg.degree_k, cfg.p_x)
    decoded_a, bits_a_announced = _announce(h_a, cb)
    decoded_b, bits_b_announced = _announce(h_b, cb)
    if not np.array_equal(decoded_a, h_a):
        raise SimulationIntegrityError("alice basis announcement decode mismatch")
    if not np.array_equal(decoded_b, h_b):
        raise SimulationIntegrityError("bob basis announcement decode mismatch")

    single_click = click_c ^ click_d
    basis_match = h_a == h_b
    keep = basis_match & single_click
    f_card = int(np.count_nonzero(keep))

    x_keep = np.flatnonzero(keep & (h_a == 0))
    z_keep = np.flatnonzero(keep & (h_a == 1))
    v_card, w_card = x_keep.size, z_keep.size

    # flip rule: a destructive-port click announces anticorrelated key bits
    key_a = bits_a[x_keep]
    key_b = (bits_b[x_keep] ^ click_d[x_keep]).astype(np.uint8)

    # error-rate estimate on a sacrificed X subset (decoy analysis out of scope)
    v_prime = int(cfg.pe_frac * v_card)
    warnings = []
    if v_prime == 0:
        warnings.append("x-basis parameter-estimation sample is empty")
        qber_x = None
        rest = np.arange(v_card)
    else:
        chosen = rng_pe.choice(v_card, size=v_prime, replace=False)
        qber_x = float(np.count_nonzero(key_a[chosen] != key_b[chosen]) / v_prime)
        rest = np.setdiff1d(np.arange(v_card), chosen, assume_unique=True)
    alice_key = key_a[rest]
    bob_key = key_b[rest]
    k_rem = alice_key.size

    e_est = qber_x if qber_x is not None else 0.0
    h_est = binary_entropy(e_est)
    if k_rem == 0:
        ec_bits = pa_bits = 0.0
        final_key = 0
        feasible = True
    else:
        ec_bits = k_rem * cfg.f_ec * h_est
        final_key = max(0, int(k_rem * (1.0 - h_est - cfg.f_ec * h_est)))
        pa_raw = k_rem - ec_bits + final_key - 1.0
        feasible = pa_raw >= 0.0
        pa_bits = max(0.0, pa_raw)

    def ledger(bases_a: float, bases_b: float) -> SessionLedger:
        return SessionLedger(
            reception_ack=relay_bits,
            bob_bases=bases_b,
            alice_match=bases_a,
            pe_sacrifice=v_prime,
            ec_bits=ec_bits,
            pa_bits=pa_bits,
            qubits_sent=2 * n,
            qubits_detected=int(np.count_nonzero(single_click)),
            feasible=feasible,
        )

    led = ledger(bits_a_announced, bits_b_announced)
    led_raw = ledger(n, n)
    compressed = bits_a_announced + bits_b_announced

    return SessionReport(
        n_qubits=n,
        n_detected=int(np.count_nonzero(single_click)),
        f_card=f_card,
        v_card=v_card,
        w_card=w_card,
        v_prime=v_prime,
        w_prime=0,
        v_dprime=v_card - v_prime,
        w_dprime=w_card,
        qber_x=qber_x,
        qber_z=None,
        aborted=False,
        alice_key=alice_key,
        bob_key=bob_key,
        final_key_bits=final_key,
        empirical_sift_rate=f_card / n,
        matched_disagreement_rate=(
            float(np.mean(key_a != key_b)) if v_card else 0.0
        ),
        empirical_sigma=1.0 - compressed / (2.0 * n),
        classical_bits_per_qubit=led.total() / (2 * n),
        empirical_efficiency=final_key / (2 * n + led.total()),
        ledger=led,
        ledger_raw=led_raw,
        warnings=tuple(warnings),
    )


def tf_ledger(report: SessionReport) -> dict[str, float]:
    """Per-procedure announced-bit table for a relay session report."""
    led = report.ledger
    return {
        "relay_outcomes": led.reception_ack,
        "alice_bases_compressed": led.alice_match,
        "bob_bases_compressed": led.bob_bases,
        "pe_sacrifice": led.pe_sacrifice,
        "ec_bits": led.ec_bits,
        "pa_bits": led.pa_bits,
        "total": led.total(),
    }
