"""Monte-Carlo simulation of the biased-basis, squeezed-announcement BB84 session.

The quantum layer is modeled classically at the record level: preparation and
measurement happen in the Z (bit 0) or X (bit 1) basis, matched-basis outcomes
flip with the channel QBER, mismatched-basis outcomes are uniform.  This is
statistically exact for Z/X prepare-and-measure protocols.  Announcements run
through the real squeeze codec (encode -> decode with integrity checks), so the
ledger carries actually-achieved compressed sizes.

Naming of the sifted subsets: V collects records where both parties used the X
basis, W where both used the Z basis.  With the dominant basis being Z
(probability p_b -> 1), W is the large subset (~p_b^2 N) and V the small one
(~(1-p_b)^2 N).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import squeeze
from .core import ChannelParams, SessionLedger, binary_entropy, qber, transmittance
from .errors import ParameterError, SimulationIntegrityError

BB84_XI = 1.0  # confidential capacity ceiling of BB84


@dataclass(frozen=True)
class SessionConfig:
    """One simulated session: channel, basis bias, codec degree, PE fractions.

    p_b is the probability of preparing/measuring in basis 0 (Z); the optimal
    regime takes p_b -> 1.  epsilon_frac and lambda_frac are the fractions of
    the both-X and both-Z subsets sacrificed for parameter estimation.  In
    lossless mode every qubit is detected and no acknowledgment round is
    announced; lossy mode detects with probability eta~ and announces N
    acknowledgment bits.  The abort rule follows the protocol text (abort only
    when BOTH error rates exceed the threshold) unless abort_on_either is set.
    """

    n_qubits: int
    p_b: float = 0.999
    degree_k: int = 8
    epsilon_frac: float = 0.01
    lambda_frac: float = 0.01
    qber_threshold: float = 0.11
    channel: ChannelParams = ChannelParams()
    rng_seed: int = 0
    lossless: bool = False
    abort_on_either: bool = False

    def __post_init__(self):
        if self.n_qubits < 0:
            raise ParameterError("n_qubits must be >= 0")
        if not 0.5 < self.p_b < 1.0:
            raise ParameterError(f"p_b must lie in (0.5, 1), got {self.p_b}")
        if not 0.0 < self.epsilon_frac < 1.0:
            raise ParameterError("epsilon_frac must lie in (0, 1)")
        if not 0.0 < self.lambda_frac < 1.0:
            raise ParameterError("lambda_frac must lie in (0, 1)")
        if not 0.0 < self.qber_threshold < 0.5:
            raise ParameterError("qber_threshold must lie in (0, 0.5)")
        if self.degree_k < 1:
            raise ParameterError("degree_k must be >= 1")
        if self.rng_seed < 0:
            raise ParameterError("rng_seed must be nonnegative")

    def stage_rngs(self) -> tuple[np.random.Generator, ...]:
        """Per-stage generators (transfer+measure, estimation), reproducibly split."""
        seqs = np.random.SeedSequence(self.rng_seed).spawn(2)
        return tuple(np.random.Generator(np.random.PCG64(s)) for s in seqs)


class QubitRecord(NamedTuple):
    q: int          # Alice's key bit
    b: int          # preparation basis (0 = Z, 1 = X)
    b_prime: int    # measurement basis
    detected: bool
    k_b: int        # Bob's raw-key bit


@dataclass(frozen=True)
class QubitRecords:
    """Column-wise batch of per-qubit records (struct-of-arrays for speed)."""

    q: np.ndarray
    b: np.ndarray
    b_prime: np.ndarray
    detected: np.ndarray
    k_b: np.ndarray

    def __len__(self) -> int:
        return self.q.size

    def __getitem__(self, i: int) -> QubitRecord:
        return QubitRecord(
            int(self.q[i]), int(self.b[i]), int(self.b_prime[i]),
            bool(self.detected[i]), int(self.k_b[i]),
        )


def prepare_and_measure(
    cfg: SessionConfig, rng: np.random.Generator | None = None
) -> QubitRecords:
    """Simulate qubit preparation, transfer, and measurement for one session.

    Key bits are uniform; bases are drawn independently with bias p_b toward
    basis 0.  Matched-basis outcomes flip with the channel QBER; mismatched
    outcomes are uniform.  Detection is Bernoulli(eta~) unless lossless.
    """
    if rng is None:
        rng = cfg.stage_rngs()[0]
    n = cfg.n_qubits
    q = (rng.random(n) < 0.5).astype(np.uint8)
    b = (rng.random(n) >= cfg.p_b).astype(np.uint8)
    b_prime = (rng.random(n) >= cfg.p_b).astype(np.uint8)
    if cfg.lossless:
        detected = np.ones(n, dtype=bool)
    else:
        detected = rng.random(n) < transmittance(cfg.channel)

    e_flip = qber(cfg.channel)
    flips = (rng.random(n) < e_flip).astype(np.uint8)
    random_outcome = (rng.random(n) < 0.5).astype(np.uint8)
    matched = b == b_prime
    k_b = np.where(matched, q ^ flips, random_outcome).astype(np.uint8)
    return QubitRecords(q=q, b=b, b_prime=b_prime, detected=detected, k_b=k_b)


@dataclass(frozen=True)
class SiftResult:
    alice_key: np.ndarray       # q on retained records
    bob_key: np.ndarray         # k_b on retained records
    basis: np.ndarray           # shared basis of retained records (0=Z, 1=X)
    n_detected: int
    n_sifted: int
    bob_bits_raw: int           # uncompressed size of each basis announcement
    bob_bits_compressed: int
    alice_bits_compressed: int
    empirical_sigma: float      # achieved compression across both announcements


def _announce(bits: np.ndarray, cb) -> tuple[np.ndarray, int]:
    """Squeeze a bit sequence, frame it, and read it back as the peer would.

    Returns the decoded bits and the announced payload size (container header
    framing is not counted; the protocol messages carry counts anyway).
    """
    payload, stats = squeeze.encode(bits, cb)
    blob = squeeze.write_container(payload, cb.degree_k, bits.size)
    k_hdr, true_len, payload_bits = squeeze.read_container(blob)
    decoded = squeeze.decode(payload_bits, squeeze.build_codebook(k_hdr, cb.bias_p),
                             true_len)
    return decoded, stats.output_bits


def sift(records: QubitRecords, cfg: SessionConfig) -> SiftResult:
    """Run the announcement round: bases out, match bits back, keys reduced.

    Bob's measured bases and Alice's match/discard sequence are squeezed with
    the degree-k codec and exchanged in the container format; both directions
    are decoded and verified, so a codec fault surfaces as
    SimulationIntegrityError rather than key damage.
    """
    det = np.flatnonzero(records.detected)
    b_det = records.b[det]
    bprime_det = records.b_prime[det]
    n_det = det.size

    if n_det == 0:
        return SiftResult(
            alice_key=np.zeros(0, np.uint8), bob_key=np.zeros(0, np.uint8),
            basis=np.zeros(0, np.uint8), n_detected=0, n_sifted=0,
            bob_bits_raw=0, bob_bits_compressed=0, alice_bits_compressed=0,
            empirical_sigma=0.0,
        )

    cb = squeeze.build_codebook(cfg.degree_k, cfg.p_b)
    bprime_alice, bob_bits = _announce(bprime_det, cb)
    if not np.array_equal(bprime_alice, bprime_det):
        raise SimulationIntegrityError("basis announcement decode mismatch")

    d = (b_det != bprime_alice).astype(np.uint8)  # 1 = discard
    d_bob, alice_bits = _announce(d, cb)
    if not np.array_equal(d_bob, d):
        raise SimulationIntegrityError("match announcement decode mismatch")

    keep = det[d == 0]
    compressed = bob_bits + alice_bits
    return SiftResult(
        alice_key=records.q[keep],
        bob_key=records.k_b[keep],
        basis=records.b[keep],
        n_detected=n_det,
        n_sifted=keep.size,
        bob_bits_raw=n_det,
        bob_bits_compressed=bob_bits,
        alice_bits_compressed=alice_bits,
        empirical_sigma=1.0 - compressed / (2.0 * n_det),
    )


@dataclass(frozen=True)
class PeResult:
    qber_x: float | None
    qber_z: float | None
    aborted: bool
    alice_remaining: np.ndarray
    bob_remaining: np.ndarray
    v_card: int
    w_card: int
    v_prime: int
    w_prime: int
    announced_bits: int
    warnings: tuple[str, ...] = ()


def parameter_estimation(
    sifted: SiftResult, cfg: SessionConfig, rng: np.random.Generator | None = None
) -> PeResult:
    """Estimate per-basis error rates on sacrificed subsets and decide abort.

    Alice announces epsilon*V bits of the both-X subset and lambda*W bits of
    the both-Z subset (plus Bob's one-bit proceed/terminate message, which is
    counted).  A subset whose sacrifice rounds to zero yields no estimate; the
    condition is reported in ``warnings`` instead of being silently skipped.
    """
    if rng is None:
        rng = cfg.stage_rngs()[1]
    x_idx = np.flatnonzero(sifted.basis == 1)
    z_idx = np.flatnonzero(sifted.basis == 0)
    v_card, w_card = x_idx.size, z_idx.size
    v_prime = int(cfg.epsilon_frac * v_card)
    w_prime = int(cfg.lambda_frac * w_card)

    warnings = []
    if v_prime == 0:
        warnings.append("x-basis parameter-estimation sample is empty")
    if w_prime == 0:
        warnings.append("z-basis parameter-estimation sample is empty")

    def sample_rate(idx: np.ndarray, count: int) -> tuple[float | None, np.ndarray]:
        if count == 0:
            return None, idx
        chosen = rng.choice(idx, size=count, replace=False)
        mism = np.count_nonzero(
            sifted.alice_key[chosen] != sifted.bob_key[chosen]
        )
        remaining = np.setdiff1d(idx, chosen, assume_unique=True)
        return mism / count, remaining

    qber_x, x_rest = sample_rate(x_idx, v_prime)
    qber_z, z_rest = sample_rate(z_idx, w_prime)

    exceed_x = qber_x is not None and qber_x > cfg.qber_threshold
    exceed_z = qber_z is not None and qber_z > cfg.qber_threshold
    aborted = (exceed_x or exceed_z) if cfg.abort_on_either else (exceed_x and exceed_z)

    keep = np.concatenate([x_rest, z_rest])  # V'' then W'' order
    if aborted:
        alice_rem = np.zeros(0, np.uint8)
        bob_rem = np.zeros(0, np.uint8)
    else:
        alice_rem = sifted.alice_key[keep]
        bob_rem = sifted.bob_key[keep]
    return PeResult(
        qber_x=qber_x,
        qber_z=qber_z,
        aborted=aborted,
        alice_remaining=alice_rem,
        bob_remaining=bob_rem,
        v_card=v_card,
        w_card=w_card,
        v_prime=v_prime,
        w_prime=w_prime,
        announced_bits=v_prime + w_prime + 1,  # + proceed/terminate bit
        warnings=tuple(warnings),
    )


@dataclass(frozen=True)
class SessionReport:
    """Outcome of one simulated session, with both-sided bit accounting.

    ``ledger`` counts the announcements as actually made (squeezed bases);
    ``ledger_raw`` is the sigma = 0 counterpart with uncompressed bases.
    Error correction and privacy amplification enter as bit-count stubs: the
    EC leakage is f*H(e_est) per remaining key bit and the PA announcement is
    the Toeplitz seed (input length + output length - 1).
    """

    n_qubits: int
    n_detected: int
    f_card: int
    v_card: int
    w_card: int
    v_prime: int
    w_prime: int
    v_dprime: int
    w_dprime: int
    qber_x: float | None
    qber_z: float | None
    aborted: bool
    alice_key: np.ndarray
    bob_key: np.ndarray
    final_key_bits: int
    empirical_sift_rate: float
    matched_disagreement_rate: float
    empirical_sigma: float
    classical_bits_per_qubit: float
    empirical_efficiency: float
    ledger: SessionLedger
    ledger_raw: SessionLedger
    warnings: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        d = {
            "n_qubits": self.n_qubits,
            "n_detected": self.n_detected,
            "f_card": self.f_card,
            "v_card": self.v_card,
            "w_card": self.w_card,
            "v_prime": self.v_prime,
            "w_prime": self.w_prime,
            "v_dprime": self.v_dprime,
            "w_dprime": self.w_dprime,
            "qber_x": self.qber_x,
            "qber_z": self.qber_z,
            "aborted": self.aborted,
            "final_key_bits": self.final_key_bits,
            "empirical_sift_rate": self.empirical_sift_rate,
            "matched_disagreement_rate": self.matched_disagreement_rate,
            "empirical_sigma": self.empirical_sigma,
            "classical_bits_per_qubit": self.classical_bits_per_qubit,
            "empirical_efficiency": self.empirical_efficiency,
            "alice_key_hex": squeeze.pack_bits(self.alice_key).hex(),
            "bob_key_hex": squeeze.pack_bits(self.bob_key).hex(),
            "key_bit_length": int(self.alice_key.size),
            "warnings": list(self.warnings),
        }
        d.update({f"ledger.{k}": v for k, v in self.ledger.as_dict().items()})
        d.update({f"ledger_raw.{k}": v for k, v in self.ledger_raw.as_dict().items()})
        return d


def _empty_report(cfg: SessionConfig) -> SessionReport:
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


def run_session(cfg: SessionConfig) -> SessionReport:
    """Full session pipeline: transfer, sift, estimate, account, report."""
    if cfg.n_qubits == 0:
        return _empty_report(cfg)

    rng_prep, rng_pe = cfg.stage_rngs()
    records = prepare_and_measure(cfg, rng=rng_prep)
    sifted = sift(records, cfg)
    pe = parameter_estimation(sifted, cfg, rng=rng_pe)

    n = cfg.n_qubits
    ack_bits = 0 if cfg.lossless else n

    # EC/PA bit-count stubs on the post-estimation key
    k_rem = pe.alice_remaining.size
    if pe.qber_x is None and pe.qber_z is None:
        e_est = qber(cfg.channel)  # no sample survived; fall back to the model
    else:
        mism = (pe.qber_x or 0.0) * pe.v_prime + (pe.qber_z or 0.0) * pe.w_prime
        e_est = mism / (pe.v_prime + pe.w_prime)
    h_est = binary_entropy(e_est)
    f = cfg.channel.f
    if pe.aborted or k_rem == 0:
        ec_bits = pa_bits = 0.0
        final_key = 0
        feasible = True
    else:
        ec_bits = k_rem * f * h_est
        final_key = max(0, int(k_rem * (BB84_XI - h_est - f * h_est)))
        pa_raw = k_rem - ec_bits + final_key - 1.0
        feasible = pa_raw >= 0.0
        pa_bits = max(0.0, pa_raw)

    def ledger(bob_bits: float, alice_bits: float) -> SessionLedger:
        return SessionLedger(
            reception_ack=ack_bits,
            bob_bases=bob_bits,
            alice_match=alice_bits,
            pe_sacrifice=pe.announced_bits,
            ec_bits=ec_bits,
            pa_bits=pa_bits,
            qubits_sent=n,
            qubits_detected=sifted.n_detected,
            feasible=feasible,
        )

    led = ledger(sifted.bob_bits_compressed, sifted.alice_bits_compressed)
    led_raw = ledger(sifted.bob_bits_raw, sifted.bob_bits_raw)

    alice_key = pe.alice_remaining
    bob_key = pe.bob_remaining
    n_det = sifted.n_detected
    disagree = (
        float(np.mean(sifted.alice_key != sifted.bob_key)) if sifted.n_sifted else 0.0
    )
    return SessionReport(
        n_qubits=n,
        n_detected=n_det,
        f_card=sifted.n_sifted,
        v_card=pe.v_card,
        w_card=pe.w_card,
        v_prime=pe.v_prime,
        w_prime=pe.w_prime,
        v_dprime=pe.v_card - pe.v_prime,
        w_dprime=pe.w_card - pe.w_prime,
        qber_x=pe.qber_x,
        qber_z=pe.qber_z,
        aborted=pe.aborted,
        alice_key=alice_key,
        bob_key=bob_key,
        final_key_bits=0 if pe.aborted else final_key,
        empirical_sift_rate=sifted.n_sifted / n_det if n_det else 0.0,
        matched_disagreement_rate=disagree,
        empirical_sigma=sifted.empirical_sigma,
        classical_bits_per_qubit=led.total() / n,
        empirical_efficiency=(0 if pe.aborted else final_key) / (n + led.total()),
        ledger=led,
        ledger_raw=led_raw,
        warnings=pe.warnings,
    )
