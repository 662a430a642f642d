"""Dual inverse transform sampling and the per-bit detector.

The two interval arrangements on ``[0, 1)``::

    m = 0:  [0, p1) -> 1   [p1, 1) -> 0
    m = 1:  [0, p0) -> 0   [p0, 1) -> 1

Either arrangement alone is an inverse-transform sampler of ``(p0, p1)``.
Scoring a bit with ``1(r < 1/2) xor b`` returns ``m`` exactly when
``p0 = p1 = 1/2`` and errs with probability ``max(p0, p1) - 1/2``
otherwise.

All ``r`` and ``p`` values are 64-bit fixed point (see ``randomness``).
Comparisons are strict, so ties resolve deterministically.
"""

from __future__ import annotations

import numpy as np

from .model import NextBitDistribution
from .randomness import HALF


def wat_sample(dist: NextBitDistribution, m: int, r: int) -> int:
    if m == 0:
        return 1 if r < dist.p1_fixed else 0
    if m == 1:
        return 1 if r >= dist.p0_fixed else 0
    raise ValueError(f"watermark signal must be 0 or 1, got {m!r}")


def detect_1bit(b: int, r: int) -> int:
    return (1 if r < HALF else 0) ^ b


def plain_sample(dist: NextBitDistribution, r: int) -> int:
    return 0 if r < dist.p0_fixed else 1


# Vectorised forms over uint64 arrays, for Monte-Carlo work. A p0 of exactly
# 1 (2**64) does not fit in uint64; ``p0_array`` clips it.


def p0_array(p0_fixed) -> np.ndarray:
    """Clip fixed-point p0 into uint64 (``2**64`` becomes ``2**64 - 1``).

    The clipped value changes an outcome only for one ``r`` out of 2**64.
    """
    arr = np.asarray([min(int(x), (1 << 64) - 1) for x in np.ravel(p0_fixed)], dtype=np.uint64)
    return arr.reshape(np.shape(p0_fixed))


def wat_sample_array(p0: np.ndarray, m: np.ndarray, r: np.ndarray) -> np.ndarray:
    p0 = np.asarray(p0, dtype=np.uint64)
    r = np.asarray(r, dtype=np.uint64)
    m = np.asarray(m).astype(bool)
    # m=0: b = 1(r < p1) = 1(r < 2**64 - p0); 2**64 - p0 wraps in uint64 when p0 = 0.
    p1 = np.uint64(0) - p0
    b0 = np.where(p0 == 0, True, r < p1)
    b1 = r >= p0
    return np.where(m, b1, b0).astype(np.uint8)


def detect_1bit_array(b: np.ndarray, r: np.ndarray) -> np.ndarray:
    return ((np.asarray(r, dtype=np.uint64) < np.uint64(HALF)).astype(np.uint8)) ^ np.asarray(b, dtype=np.uint8)


def plain_sample_array(p0: np.ndarray, r: np.ndarray) -> np.ndarray:
    return (np.asarray(r, dtype=np.uint64) >= np.asarray(p0, dtype=np.uint64)).astype(np.uint8)
