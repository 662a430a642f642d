"""Single-bit watermark blocks: adaptive embedding and threshold detection.

A block is generated bit by bit with :func:`~ditsmark.sampler.wat_sample`
until the running score ``X`` (mean of per-bit detector outputs) satisfies
``exp(-2 n (X - 1/2)**2) < negl`` with ``negl = e**-lambda``. Detection
replays the same keyed stream from index 0 and stops at the first prefix
that passes, so an untouched block is recovered with its exact span.

Threshold tests are done in exact integer arithmetic on
``D = 2 * (sum of scores) - n``; the float bound is only reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import List, Optional, Tuple, Union

import numpy as np

from . import _scan
from .core import BitString, SecretKey, WatermarkSignal
from .model import NextBitDistribution, Predictor, SourceHalted
from .randomness import HALF, key_stream
from .sampler import wat_sample

EPSILON_STRICT = Fraction(1)
EPSILON_ROBUST = Fraction(1, 4)


class EntropyExhausted(RuntimeError):
    """The block hit ``max_block_len`` before the bound was met."""

    def __init__(self, n: int, score: float, bound: float, message: str = ""):
        super().__init__(message or f"no passing prefix within {n} bits (score={score:.4f}, bound={bound:.3g})")
        self.n = n
        self.score = score
        self.bound = bound


def _as_fraction(x: Union[int, float, str, Fraction]) -> Fraction:
    return Fraction(x).limit_denominator(1 << 20) if isinstance(x, float) else Fraction(x)


@dataclass(frozen=True)
class SchemeConfig:
    lambda_: int = 16
    epsilon: Fraction = EPSILON_STRICT
    exponent_scale: Fraction = Fraction(2)
    max_block_len: int = 4096
    # Longest prefix a detection may consider; None scans the whole suffix.
    max_detect_len: Optional[int] = None

    def __post_init__(self):
        if self.lambda_ < 1:
            raise ValueError("lambda must be at least 1")
        object.__setattr__(self, "epsilon", _as_fraction(self.epsilon))
        object.__setattr__(self, "exponent_scale", _as_fraction(self.exponent_scale))
        if self.epsilon <= 0 or self.exponent_scale <= 0:
            raise ValueError("epsilon and exponent_scale must be positive")
        if self.max_block_len < 2 * self.lambda_ + 1:
            raise ValueError(f"max_block_len must be at least {2 * self.lambda_ + 1}")

    @property
    def negl(self) -> float:
        return math.exp(-self.lambda_)

    def with_epsilon(self, eps) -> "SchemeConfig":
        return SchemeConfig(self.lambda_, _as_fraction(eps), self.exponent_scale, self.max_block_len, self.max_detect_len)

    def threshold(self, epsilon: Optional[Fraction] = None) -> Tuple[int, int]:
        """Integers ``(A, B)``: a prefix passes iff ``A * D**2 > B * n``.

        ``scale * n * (X - 1/2)**2 > lambda * eps`` with ``X - 1/2 = D/(2n)``.
        """
        eps = self.epsilon if epsilon is None else _as_fraction(epsilon)
        s = self.exponent_scale
        A = s.numerator * eps.denominator
        B = 4 * self.lambda_ * eps.numerator * s.denominator
        g = gcd(A, B)
        return A // g, B // g


def hoeffding_bound(n: int, score: float) -> float:
    """``exp(-2 n (score - 1/2)**2)``."""
    if n < 1:
        raise ValueError("n must be positive")
    return math.exp(-2.0 * n * (score - 0.5) ** 2)


def min_block_length(lambda_: int) -> int:
    """Smallest ``n`` with ``exp(-n/2) < e**-lambda``."""
    if lambda_ < 1:
        raise ValueError("lambda must be positive")
    return 2 * lambda_ + 1


@dataclass(frozen=True)
class BlockDetection:
    """A detected block; ``start``/``end`` are 0-based and inclusive."""

    signal: WatermarkSignal
    start: int
    end: int
    n: int
    score: float
    pvalue_bound: float

    @classmethod
    def bottom(cls, start: int = 0) -> "BlockDetection":
        return cls(WatermarkSignal.BOTTOM, start, start - 1, 0, 0.5, 1.0)

    @classmethod
    def from_counts(cls, start: int, n: int, d: int) -> "BlockDetection":
        score = (n + d) / (2 * n)
        sig = WatermarkSignal.ONE if d > 0 else WatermarkSignal.ZERO
        return cls(sig, start, start + n - 1, n, score, hoeffding_bound(n, score))

    @property
    def found(self) -> bool:
        return self.signal is not WatermarkSignal.BOTTOM


@dataclass
class BlockEmbedding:
    bits: BitString
    signal: WatermarkSignal
    score: float
    gap: float
    p0s: List[float] = field(default_factory=list, repr=False)

    @property
    def n(self) -> int:
        return len(self.bits)


def embed_block_traced(
    sk: SecretKey,
    m: Union[int, WatermarkSignal],
    source: Predictor,
    context: BitString,
    cfg: SchemeConfig,
) -> BlockEmbedding:
    """Embed one signal; also returns score and realized gap."""
    m = int(WatermarkSignal.embeddable(m))
    A, B = cfg.threshold(EPSILON_STRICT)
    rs = key_stream(sk, 64)
    ctx = bytearray(context.to_bytes_raw())
    out = bytearray()
    p0s: List[float] = []
    gap_sum = 0
    d = 0
    for i in range(1, cfg.max_block_len + 1):
        view = BitString._raw(bytes(ctx))
        if source.halted(view):
            exc = SourceHalted(f"source halted after {i - 1} bits of the block")
            exc.produced = i - 1
            raise exc
        dist: NextBitDistribution = source.next(view)
        if i > len(rs):
            rs = key_stream(sk, min(2 * len(rs), cfg.max_block_len))
        r = int(rs[i - 1])
        b = wat_sample(dist, m, r)
        out.append(b)
        ctx.append(b)
        d += 1 if ((r < HALF) ^ b) else -1
        gap_sum += min(dist.p0_fixed, dist.p1_fixed)
        p0s.append(dist.p0)
        if A * d * d > B * i:
            score = (i + d) / (2 * i)
            return BlockEmbedding(BitString._raw(bytes(out)), WatermarkSignal(m), score, gap_sum / i / 2.0**64, p0s)
    n = cfg.max_block_len
    score = (n + d) / (2 * n)
    raise EntropyExhausted(n, score, hoeffding_bound(n, score))


def embed_block(
    sk: SecretKey,
    m: Union[int, WatermarkSignal],
    source: Predictor,
    context: BitString,
    cfg: SchemeConfig,
) -> BitString:
    """Generate a watermark block carrying ``m``; the context grows bit by bit."""
    return embed_block_traced(sk, m, source, context, cfg).bits


def detect_block(sk: SecretKey, b: BitString, cfg: SchemeConfig, epsilon=None) -> BlockDetection:
    """First-passage detection on ``b`` with the stream restarted at 0.

    ``X > 1/2`` maps to ONE. Returns a BOTTOM detection when no prefix
    passes ``negl ** epsilon``.
    """
    if len(b) < 1:
        raise ValueError("empty input")
    A, B = cfg.threshold(epsilon)
    n = len(b)
    if cfg.max_detect_len is not None:
        n = min(n, cfg.max_detect_len)
    c = (key_stream(sk, n) < np.uint64(HALF)).astype(np.uint8)
    steps = np.where(c ^ b.to_numpy()[:n], 1, -1).astype(np.int64)
    ds = np.cumsum(steps)
    i = np.arange(1, n + 1, dtype=np.int64)
    # A * D^2 fits comfortably in int64 for any realistic block length.
    hits = np.flatnonzero(A * ds * ds > B * i)
    if hits.size == 0:
        return BlockDetection.bottom()
    k = int(hits[0])
    return BlockDetection.from_counts(0, k + 1, int(ds[k]))


def scores(sk: SecretKey, b: BitString) -> np.ndarray:
    """Per-bit detector outputs ``1(r_i < 1/2) xor b_i`` with the stream at 0."""
    c = (key_stream(sk, len(b)) < np.uint64(HALF)).astype(np.uint8)
    return c ^ b.to_numpy()


def suffix_scan(sk: SecretKey, b: BitString, cfg: SchemeConfig, epsilon=None) -> List[BlockDetection]:
    """Compiled left-to-right scan with skip-ahead (used by ``chain.udetect``)."""
    n = len(b)
    if n == 0:
        return []
    A, B = cfg.threshold(epsilon)
    max_len = cfg.max_detect_len if cfg.max_detect_len is not None else n
    cw = _scan.pack_bits((key_stream(sk, n) < np.uint64(HALF)).astype(np.uint8))
    bw = _scan.pack_bits(b.to_numpy())
    starts, lengths, ds = _scan.scan_all(bw, n, cw, n, A, B, max_len)
    return [BlockDetection.from_counts(int(s), int(k), int(d)) for s, k, d in zip(starts, lengths, ds)]
