"""Closed-form resource accounting for BB84-style QKD.

Per transmitted qubit the protocol consumes one quantum-channel use plus the
classical announcements of sifting, parameter estimation, error correction and
privacy amplification.  The total efficiency is the ratio of secret key bits to
that combined budget,

    E = R*N / (N + M),

with the secret key rate R = eta~ * s * (xi - H(e) - f*H(e)) and M the sum of
announced classical bits.  All operations here are pure functions; the
asymptotic regime (N -> infinity, delta = 0) drops the -1/N Toeplitz-seed term
and works in per-qubit units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import DegenerateChannelError, ParameterError

INFINITE = math.inf  # sentinel for the asymptotic qubit count


def _check_prob(name: str, x: float) -> None:
    if not 0.0 <= x <= 1.0:
        raise ParameterError(f"{name} must lie in [0, 1], got {x}")


@dataclass(frozen=True)
class ChannelParams:
    """Physical description of the QKD link.

    alpha      attenuation in dB/km
    length_km  link length L >= 0
    eta_det    detector efficiency in [0, 1]
    p_dark     dark count probability in [0, 1]
    e_opt      optical misalignment error in [0, 1]
    e0         background error (dark-count outcomes are random), default 0.5
    f          error-correction inefficiency factor >= 1
    """

    alpha: float = 0.2
    length_km: float = 0.0
    eta_det: float = 0.3
    p_dark: float = 1e-8
    e_opt: float = 0.03
    e0: float = 0.5
    f: float = 1.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ParameterError(f"alpha must be >= 0, got {self.alpha}")
        if self.length_km < 0:
            raise ParameterError(f"length_km must be >= 0, got {self.length_km}")
        for name in ("eta_det", "p_dark", "e_opt", "e0"):
            _check_prob(name, getattr(self, name))
        if self.f < 1:
            raise ParameterError(f"f must be >= 1, got {self.f}")


@dataclass(frozen=True)
class ProtocolParams:
    """Tunable protocol knobs the efficiency is maximized over.

    s         sifting coefficient in (0, 1]
    sigma     classical-channel compression coefficient in [0, 1]
    xi        confidential capacity in [0, 1] (1 for BB84)
    delta     parameter-estimation sacrifice fraction in [0, 1)
    n_qubits  transferred qubit count N; math.inf selects the asymptotic
              formulas (which require delta = 0)
    """

    s: float = 0.5
    sigma: float = 0.0
    xi: float = 1.0
    delta: float = 0.0
    n_qubits: float = INFINITE

    def __post_init__(self):
        if not 0.0 < self.s <= 1.0:
            raise ParameterError(f"s must lie in (0, 1], got {self.s}")
        _check_prob("sigma", self.sigma)
        _check_prob("xi", self.xi)
        if not 0.0 <= self.delta < 1.0:
            raise ParameterError(f"delta must lie in [0, 1), got {self.delta}")
        if self.n_qubits != INFINITE and self.n_qubits < 1:
            raise ParameterError("n_qubits must be >= 1 or math.inf")
        if self.asymptotic and self.delta != 0.0:
            raise ParameterError("asymptotic mode requires delta = 0")

    @property
    def asymptotic(self) -> bool:
        return self.n_qubits == INFINITE


@dataclass(frozen=True)
class SessionLedger:
    """Announced classical bits per procedure, plus qubit counts.

    Counts are per session of N qubits in finite mode and per transmitted
    qubit in asymptotic mode.  ``feasible`` is False when the privacy-
    amplification entry would be negative (rate extinction); the raw value is
    kept so that total() still satisfies the collapsed-sum identity.
    """

    reception_ack: float
    bob_bases: float
    alice_match: float
    pe_sacrifice: float
    ec_bits: float
    pa_bits: float
    qubits_sent: float
    qubits_detected: float
    feasible: bool = True

    def total(self) -> float:
        return (self.reception_ack + self.bob_bases + self.alice_match
                + self.pe_sacrifice + self.ec_bits + self.pa_bits)

    def as_dict(self) -> dict[str, float]:
        return {
            "reception_ack": self.reception_ack,
            "bob_bases": self.bob_bases,
            "alice_match": self.alice_match,
            "pe_sacrifice": self.pe_sacrifice,
            "ec_bits": self.ec_bits,
            "pa_bits": self.pa_bits,
        }


@dataclass(frozen=True)
class EfficiencyReport:
    """Efficiency of one parameter point with its intermediate quantities.

    R is the secret key rate per transmitted qubit, clamped to 0 under rate
    extinction; ``r_unclamped`` keeps the raw value for diagnostics.
    """

    eta_tilde: float
    y1: float
    e: float
    h_e: float
    R: float
    r_unclamped: float
    M_per_qubit: float
    efficiency: float
    extinct: bool
    ledger: SessionLedger

    def as_dict(self) -> dict:
        d = {
            "eta_tilde": self.eta_tilde,
            "y1": self.y1,
            "e": self.e,
            "h_e": self.h_e,
            "R": self.R,
            "r_unclamped": self.r_unclamped,
            "M_per_qubit": self.M_per_qubit,
            "efficiency": self.efficiency,
            "extinct": self.extinct,
        }
        d.update({f"ledger.{k}": v for k, v in self.ledger.as_dict().items()})
        return d


def binary_entropy(x: float) -> float:
    """Shannon entropy of a Bernoulli(x) bit, with 0*log(0) = 0."""
    if not 0.0 <= x <= 1.0:
        raise ParameterError(f"entropy argument must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def transmittance(ch: ChannelParams) -> float:
    """Total transmittance eta~ = eta_det * 10^(-alpha*L/10)."""
    return ch.eta_det * 10.0 ** (-ch.alpha * ch.length_km / 10.0)


def single_photon_yield(ch: ChannelParams) -> float:
    """Probability y1 that a transmitted photon produces a detection event."""
    eta = transmittance(ch)
    return ch.p_dark + eta - ch.p_dark * eta


def qber(ch: ChannelParams) -> float:
    """Quantum bit error rate e = (e0*p_dark + e_opt*eta~) / y1.

    The ratio can formally exceed 1 when dark-count and misalignment errors
    coincide (e0 + e_opt near 2); the error model does not apply there and
    the channel is treated as degenerate.
    """
    y1 = single_photon_yield(ch)
    if y1 <= 0.0:
        raise DegenerateChannelError("no detection events: y1 = 0")
    e = (ch.e0 * ch.p_dark + ch.e_opt * transmittance(ch)) / y1
    if e > 1.0:
        raise DegenerateChannelError(
            f"error model breakdown: computed error rate {e:.3f} > 1"
        )
    return e


def secret_key_rate(ch: ChannelParams, pp: ProtocolParams) -> float:
    """Secret key rate per transmitted qubit; may be negative (extinction).

    Finite mode carries the (1 - delta) parameter-estimation loss; the
    asymptotic rate is eta~ * s * (xi - H(e) - f*H(e)).
    """
    h = binary_entropy(qber(ch))
    r = transmittance(ch) * pp.s * (pp.xi - h - ch.f * h)
    return (1.0 - pp.delta) * r


def classical_bits(ch: ChannelParams, pp: ProtocolParams) -> SessionLedger:
    """Announced-bit ledger of one BB84 session.

    Entries (finite mode, per session of N qubits):
      reception_ack  N             detection acknowledgments
      bob_bases      (1-sigma)*eta~*N   compressed measurement bases
      alice_match    (1-sigma)*eta~*N   compressed match announcements
      pe_sacrifice   delta*N       parameter-estimation sample
      ec_bits        (1-delta)*s*eta~*N * f*H(e)
      pa_bits        (1-delta)*s*eta~*N * (1 - f*H(e)) + R*N - 1   Toeplitz seed

    The total collapses to N + 2(1-sigma)*eta~*N + delta*N + (1-delta)*s*eta~*N
    + R*N - 1 with R the asymptotic rate.  Asymptotic mode divides by N and
    drops the -1 seed term.
    """
    eta = transmittance(ch)
    h = binary_entropy(qber(ch))
    r_asym = eta * pp.s * (pp.xi - h - ch.f * h)
    n = 1.0 if pp.asymptotic else float(pp.n_qubits)

    basis_bits = (1.0 - pp.sigma) * eta * n
    sifted = (1.0 - pp.delta) * pp.s * eta * n
    ec = sifted * ch.f * h
    pa = sifted - ec + r_asym * n
    if not pp.asymptotic:
        pa -= 1.0
    return SessionLedger(
        reception_ack=n,
        bob_bases=basis_bits,
        alice_match=basis_bits,
        pe_sacrifice=pp.delta * n,
        ec_bits=ec,
        pa_bits=pa,
        qubits_sent=n,
        qubits_detected=eta * n,
        feasible=pa >= 0.0,
    )


def total_efficiency(ch: ChannelParams, pp: ProtocolParams) -> EfficiencyReport:
    """Total efficiency E = R*N / (N + M) for one parameter point.

    Under rate extinction (xi - H(e) - f*H(e) <= 0) the reported R and E are
    clamped to 0 and the report is flagged.
    """
    eta = transmittance(ch)
    y1 = single_photon_yield(ch)
    e = qber(ch)
    h = binary_entropy(e)
    r_asym = eta * pp.s * (pp.xi - h - ch.f * h)
    r_mode = (1.0 - pp.delta) * r_asym

    ledger = classical_bits(ch, pp)
    n = 1.0 if pp.asymptotic else float(pp.n_qubits)
    m_per_qubit = ledger.total() / n

    extinct = r_asym <= 0.0
    eff = 0.0 if extinct else r_asym / (1.0 + m_per_qubit)
    return EfficiencyReport(
        eta_tilde=eta,
        y1=y1,
        e=e,
        h_e=h,
        R=max(0.0, r_mode),
        r_unclamped=r_mode,
        M_per_qubit=m_per_qubit,
        efficiency=eff,
        extinct=extinct,
        ledger=ledger,
    )


def optimality_bb84(ch: ChannelParams) -> float:
    """Efficiency ceiling of BB84 on this channel (s -> 1, sigma -> 1, xi = 1).

    Closed form (1 - H(e) - f*H(e)) / (2/eta~ + 2 - H(e) - f*H(e)), clamped to
    0 under rate extinction.
    """
    eta = transmittance(ch)
    if eta <= 0.0:
        raise DegenerateChannelError("optimality undefined for eta~ = 0")
    h = binary_entropy(qber(ch))
    num = 1.0 - h - ch.f * h
    if num <= 0.0:
        return 0.0
    return num / (2.0 / eta + 2.0 - h - ch.f * h)


def determine_optimality(
    ch: ChannelParams, xi_max: float, eps: float = 0.0
) -> EfficiencyReport:
    """Evaluate the efficiency at the optimal parameter corner.

    Fixes xi at the supplied capacity ceiling, takes the biased-bases limit
    s -> 1 and the full-compression limit sigma -> 1 (substituted exactly when
    eps = 0; eps > 0 evaluates at 1 - eps for sensitivity studies), and
    evaluates the asymptotic efficiency there.  With xi_max = 1 the result
    equals :func:`optimality_bb84`.
    """
    _check_prob("xi_max", xi_max)
    if not 0.0 <= eps < 0.5:
        raise ParameterError(f"eps must lie in [0, 0.5), got {eps}")
    pp = ProtocolParams(s=1.0 - eps, sigma=1.0 - eps, xi=xi_max)
    return total_efficiency(ch, pp)


@dataclass(frozen=True)
class CurvePoint:
    length_km: float
    standard: EfficiencyReport
    optimal: EfficiencyReport


def efficiency_curve(
    ch: ChannelParams, pp: ProtocolParams, lengths: Sequence[float]
) -> list[CurvePoint]:
    """Standard vs optimal efficiency over a grid of link lengths.

    The standard setting evaluates pp with s = 1/2 and sigma = 0; the optimal
    setting takes the s, sigma -> 1 limit at the same capacity xi.
    """
    if len(lengths) == 0:
        raise ParameterError("lengths must be nonempty")
    if any(b <= a for a, b in zip(lengths, lengths[1:])):
        raise ParameterError("lengths must be strictly increasing")
    std_pp = replace(pp, s=0.5, sigma=0.0)
    points = []
    for length in lengths:
        ch_l = replace(ch, length_km=float(length))
        points.append(
            CurvePoint(
                length_km=float(length),
                standard=total_efficiency(ch_l, std_pp),
                optimal=determine_optimality(ch_l, pp.xi),
            )
        )
    return points
