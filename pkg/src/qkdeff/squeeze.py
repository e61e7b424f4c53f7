"""Classical-channel squeezing: block-wise prefix coding of biased binary announcements.

The compressor chunks an announced bit sequence into k-bit blocks ("preparing"),
then maps each block to a truncated-unary codeword ("coding"): blocks sorted by
descending probability receive codewords 0, 10, 110, ..., 1...10, 1...1 with
lengths 1, 2, ..., 2^k-1, 2^k-1.  For a biased source (dominant symbol 0 with
probability p > 0.5) the expected codeword length tends to 1 as p -> 1, so the
per-input-bit cost tends to 1/k and the achievable compression percent tends to
(1 - 1/k) * 100.

The block -> codeword assignment depends only on k, not on the numeric value of
p: block probability p^(k-g) * (1-p)^g is strictly decreasing in the popcount g
whenever p > 0.5, and ties (equal popcount) are broken by ascending block value.
A decoder therefore only needs k, which is what the container header carries.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from decimal import Decimal
from math import comb
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

from .errors import MalformedStreamError, ParameterError

# Explicit codebooks materialize 2^k codeword strings (total size ~2^(2k-1) bits);
# analytics (sigma_expected / sigma_curve) use the closed form and have no cap.
MAX_EXPLICIT_DEGREE = 12

CONTAINER_MAGIC = b"SQZ1"
_HEADER = struct.Struct(">4sBQQ")  # magic, k, true_bit_length, payload_bit_length

BitsLike = Union[str, bytes, Sequence[int], np.ndarray]


def as_bits(bits: BitsLike) -> np.ndarray:
    """Coerce a bit sequence ('0101', [0,1,...], ndarray) to a uint8 0/1 array."""
    if isinstance(bits, str):
        arr = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1:
        raise ParameterError("bit sequence must be one-dimensional")
    if arr.size and arr.max() > 1:
        raise ParameterError("bit sequence may contain only 0 and 1")
    return arr


def bits_to_string(bits: BitsLike) -> str:
    return "".join("01"[b] for b in as_bits(bits))


def pack_bits(bits: BitsLike) -> bytes:
    """Pack bits MSB-first into bytes; the final partial byte is zero-padded."""
    arr = as_bits(bits)
    return np.packbits(arr, bitorder="big").tobytes()


def unpack_bits(data: bytes, n_bits: int) -> np.ndarray:
    if n_bits > 8 * len(data):
        raise MalformedStreamError(
            f"need {n_bits} bits but payload holds only {8 * len(data)}"
        )
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="big")[:n_bits]


def gamma(i: int) -> int:
    """Number of 1s in the binary representation of i (block weight)."""
    if i < 0:
        raise ParameterError("block index must be nonnegative")
    return int(i).bit_count()


def gamma_recursive(i: int) -> int:
    """Block weight via the recurrence g(i) = 1 + g(i - 2^floor(log2 i)).

    Base cases g(0) = 0 and g(1) = 1.  Agrees with :func:`gamma` for all i;
    kept as an independent cross-check of the popcount implementation.
    """
    if i < 0:
        raise ParameterError("block index must be nonnegative")
    if i <= 1:
        return i
    return 1 + gamma_recursive(i - (1 << (i.bit_length() - 1)))


class PreparedBlocks(NamedTuple):
    """Result of chunking: an (m, k) array of bits plus the unpadded length."""

    blocks: np.ndarray
    true_bit_length: int


def prepare(bits: BitsLike, k: int) -> PreparedBlocks:
    """Chunk a bit sequence into m = ceil(n/k) blocks of k bits.

    When k does not divide n the final block is padded with the dominant
    symbol 0; the true length travels alongside so a decoder can strip it.
    """
    if k < 1:
        raise ParameterError("block size k must be a positive integer")
    arr = as_bits(bits)
    n = arr.size
    m = -(-n // k)
    padded = np.zeros(m * k, dtype=np.uint8)
    padded[:n] = arr
    return PreparedBlocks(padded.reshape(m, k), n)


def _probabilities_by_weight(k: int, p: float) -> list[float]:
    # Decimal keeps tabulated decimal probabilities exact: float(1 - 0.999)
    # carries rounding junk, Decimal("0.999") does not.
    dp = Decimal(repr(p))
    dq = 1 - dp
    return [float(dp ** (k - g) * dq**g) for g in range(k + 1)]


@dataclass(frozen=True)
class CodebookEntry:
    block: int  # numeric value of the k-bit block, MSB first
    probability: float
    codeword: str


@dataclass(frozen=True)
class Codebook:
    """Ordered block -> codeword map for degree k and source bias p = P(bit=0)."""

    degree_k: int
    bias_p: float
    entries: tuple[CodebookEntry, ...]
    # rank r is the position in the probability-sorted order; codeword length
    # is r+1 except the last rank, which shares length 2^k - 1
    _rank_of_block: np.ndarray = field(repr=False, compare=False)
    _block_of_rank: np.ndarray = field(repr=False, compare=False)

    @property
    def average_length(self) -> float:
        """Expected codeword length L_av,C under the block distribution."""
        return float(sum(e.probability * len(e.codeword) for e in self.entries))

    def codeword_for(self, block: int) -> str:
        rank = int(self._rank_of_block[block])
        return _codeword_for_rank(rank, self.degree_k)


def _codeword_for_rank(rank: int, k: int) -> str:
    last = (1 << k) - 1
    if rank < last:
        return "1" * rank + "0"
    return "1" * last


def build_codebook(k: int, p: float) -> Codebook:
    """Construct the degree-k codebook for a binary source with P(0) = p.

    Blocks are sorted by descending probability (ties by ascending block
    value) and assigned truncated-unary codewords in that order.
    """
    if k < 1:
        raise ParameterError("degree k must be a positive integer")
    if k > MAX_EXPLICIT_DEGREE:
        raise ParameterError(
            f"explicit codebooks are limited to k <= {MAX_EXPLICIT_DEGREE}; "
            "use sigma_expected/sigma_curve for larger degrees"
        )
    if not 0.5 < p < 1.0:
        raise ParameterError("bias p must lie in (0.5, 1): ordering is "
                             "degenerate for an unbiased source")

    size = 1 << k
    blocks = np.arange(size, dtype=np.int64)
    weights = np.array([gamma(int(b)) for b in blocks], dtype=np.int64)
    # probability is strictly decreasing in weight for p > 0.5, so sorting by
    # (weight, block) realizes "descending probability, ties ascending"
    order = np.lexsort((blocks, weights))
    prob_by_weight = _probabilities_by_weight(k, p)

    entries = tuple(
        CodebookEntry(
            block=int(blk),
            probability=prob_by_weight[int(weights[blk])],
            codeword=_codeword_for_rank(rank, k),
        )
        for rank, blk in enumerate(order)
    )
    rank_of_block = np.empty(size, dtype=np.int64)
    rank_of_block[order] = np.arange(size)
    return Codebook(
        degree_k=k,
        bias_p=p,
        entries=entries,
        _rank_of_block=rank_of_block,
        _block_of_rank=order.astype(np.int64),
    )


@dataclass(frozen=True)
class CompressionStats:
    n_input_bits: int
    m_blocks: int
    output_bits: int
    sigma_percent: float


def encode(bits: BitsLike, cb: Codebook) -> tuple[np.ndarray, CompressionStats]:
    """Encode a bit sequence: concatenated codewords of its k-bit blocks.

    The achieved compression percent is (1 - output_bits / n) * 100, i.e. the
    per-message baseline cost is one bit per announced bit.
    """
    k = cb.degree_k
    blocks, n = prepare(bits, k)
    m = blocks.shape[0]
    if m == 0:
        return np.zeros(0, dtype=np.uint8), CompressionStats(0, 0, 0, 0.0)

    pow2 = (1 << np.arange(k - 1, -1, -1)).astype(np.int64)
    values = blocks.astype(np.int64) @ pow2
    ranks = cb._rank_of_block[values]
    last = (1 << k) - 1
    lengths = np.where(ranks < last, ranks + 1, last)
    total = int(lengths.sum())

    out = np.ones(total, dtype=np.uint8)
    ends = np.cumsum(lengths) - 1
    out[ends[ranks < last]] = 0  # terminating 0 of each non-maximal codeword

    sigma = (1.0 - total / n) * 100.0
    return out, CompressionStats(n, m, total, sigma)


def decode(stream: BitsLike, cb: Codebook, true_length: int) -> np.ndarray:
    """Invert :func:`encode`, stripping padding beyond ``true_length`` bits.

    Raises MalformedStreamError when the stream is not a valid codeword
    concatenation for ``ceil(true_length / k)`` blocks.
    """
    if true_length < 0:
        raise ParameterError("true_length must be nonnegative")
    k = cb.degree_k
    arr = as_bits(stream)
    m_expect = -(-true_length // k)
    last = (1 << k) - 1

    ranks: list[int] = []
    zero_pos = np.flatnonzero(arr == 0)
    cursor = 0
    for z in zero_pos:
        run = int(z) - cursor
        while run >= last:  # maximal codewords carry no terminating 0
            ranks.append(last)
            run -= last
        ranks.append(run)
        cursor = int(z) + 1
    tail = arr.size - cursor
    while tail >= last:
        ranks.append(last)
        tail -= last
    if tail:
        raise MalformedStreamError("stream ends inside a codeword")

    if len(ranks) != m_expect:
        raise MalformedStreamError(
            f"stream holds {len(ranks)} codewords, expected {m_expect}"
        )
    if not ranks:
        return np.zeros(0, dtype=np.uint8)

    values = cb._block_of_rank[np.asarray(ranks, dtype=np.int64)]
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    bits = ((values[:, None] >> shifts[None, :]) & 1).astype(np.uint8).reshape(-1)
    if bits[true_length:].any():
        raise MalformedStreamError("nonzero padding bits beyond the true length")
    return bits[:true_length]


def expected_codeword_length(k: int, p: float) -> float:
    """Closed-form L_av,C for any degree k (no explicit codebook needed).

    Blocks of equal popcount share a probability, so the probability-sorted
    rank ranges can be summed per weight group with an arithmetic series.
    """
    if k < 1:
        raise ParameterError("degree k must be a positive integer")
    if not 0.5 < p < 1.0:
        raise ParameterError("bias p must lie in (0.5, 1)")
    prob = _probabilities_by_weight(k, p)
    total = 0.0
    start = 0
    for g in range(k + 1):
        cnt = comb(k, g)
        # ranks start..start+cnt-1 get lengths start+1..start+cnt
        total += prob[g] * (2 * start + cnt + 1) * cnt / 2.0
        start += cnt
    # the final rank keeps length 2^k - 1 instead of 2^k
    return total - prob[k]


def sigma_expected(k: int, p: float) -> float:
    """Analytic expected compression percent for degree k and bias p.

    Equals (1 - L_av,C / k) * 100 and converges to (1 - 1/k) * 100 as p -> 1.
    """
    return (1.0 - expected_codeword_length(k, p) / k) * 100.0


def sigma_asymptotic(k: int) -> float:
    """Compression percent in the fully biased limit: (1 - 1/k) * 100."""
    if k < 1:
        raise ParameterError("degree k must be a positive integer")
    return (1.0 - 1.0 / k) * 100.0


def sigma_curve(
    k_values: Iterable[int], p: float, n: int | None = None
) -> list[tuple[int, float]]:
    """Expected compression percent per degree k (k >= 2 per point).

    With a finite input length ``n`` the block count is ceil(n/k), which
    perturbs sigma by at most one block; ``n = None`` takes the n -> infinity
    limit m/n = 1/k.
    """
    ks = [int(k) for k in k_values]
    if not ks:
        raise ParameterError("k_values must be nonempty")
    out: list[tuple[int, float]] = []
    for k in ks:
        if k < 2:
            raise ParameterError("compression requires degree k >= 2")
        lav = expected_codeword_length(k, p)
        if n is None:
            sig = (1.0 - lav / k) * 100.0
        else:
            m = -(-n // k)
            sig = (1.0 - lav * m / n) * 100.0
        out.append((k, sig))
    return out


# --- container format -------------------------------------------------------
#
# header: magic "SQZ1" | k (1 byte) | true_bit_length (8 bytes BE)
#         | payload_bit_length (8 bytes BE), then the MSB-first packed payload.
# The map block -> codeword depends only on k, so the header suffices to decode.


def write_container(payload_bits: BitsLike, k: int, true_bit_length: int) -> bytes:
    arr = as_bits(payload_bits)
    header = _HEADER.pack(CONTAINER_MAGIC, k, true_bit_length, arr.size)
    return header + pack_bits(arr)


def read_container(data: bytes) -> tuple[int, int, np.ndarray]:
    """Split a container into (k, true_bit_length, payload bit array)."""
    if len(data) < _HEADER.size:
        raise MalformedStreamError("container shorter than its header")
    magic, k, true_len, payload_len = _HEADER.unpack_from(data)
    if magic != CONTAINER_MAGIC:
        raise MalformedStreamError(f"bad container magic {magic!r}")
    payload = data[_HEADER.size:]
    if len(payload) != (payload_len + 7) // 8:
        raise MalformedStreamError("container payload length mismatch")
    return k, true_len, unpack_bits(payload, payload_len)


def squeeze_bits(bits: BitsLike, k: int, p: float = 0.999) -> tuple[bytes, CompressionStats]:
    """Convenience: encode ``bits`` at degree k and frame them in a container."""
    cb = build_codebook(k, p)
    payload, stats = encode(bits, cb)
    return write_container(payload, k, stats.n_input_bits), stats


def unsqueeze_bits(data: bytes) -> np.ndarray:
    """Convenience: decode a container back to the original bit sequence."""
    k, true_len, payload = read_container(data)
    if not 1 <= k <= MAX_EXPLICIT_DEGREE:
        raise MalformedStreamError(f"container degree k={k} unsupported")
    cb = build_codebook(k, 0.999)  # mapping is p-independent
    return decode(payload, cb, true_len)
