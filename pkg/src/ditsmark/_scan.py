"""Compiled first-passage scans over bit-packed strings.

Scores are ``x_k = c_k xor b_{start+k}`` where ``c_k = 1(r_k < 1/2)`` is the
key's half-bit stream (restarting at 0 for every start offset). With
``D_i = 2 * sum(x_1..x_i) - i`` a prefix of length ``i`` passes the
threshold when ``A * D_i**2 > B * i``.

Bits are packed 64 per word, bit ``t`` at position ``t % 64`` of word
``t // 64``. Whenever ``(|D| + t)**2 <= (B/A) * (i + t)`` holds at both
``t = 1`` and ``t = 64`` (the gap is convex in ``t``) no crossing is
possible within the next 64 steps, so they are consumed with one popcount.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a 0/1 ``uint8`` array into ``uint64`` words plus two zero words."""
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    nwords = (len(bits) + 63) // 64 + 2
    buf = np.zeros(nwords * 8, dtype=np.uint8)
    packed = np.packbits(bits, bitorder="little")
    buf[: len(packed)] = packed
    return buf.view("<u8").astype(np.uint64)


@njit(cache=True, inline="always")
def _popcount(x):
    x = x - ((x >> np.uint64(1)) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return np.int64((x * _H01) >> np.uint64(56))


@njit(cache=True, inline="always")
def _window(words, p):
    w = p >> 6
    o = p & 63
    if o == 0:
        return words[w]
    return (words[w] >> np.uint64(o)) | (words[w + 1] << np.uint64(64 - o))


@njit(cache=True, inline="always")
def _bit(words, p):
    return np.int64((words[p >> 6] >> np.uint64(p & 63)) & np.uint64(1))


@njit(cache=True)
def first_passage(bw, nbits, start, cw, ncw, A, B, max_len):
    """Length and ``D`` of the first passing prefix of ``b[start:]``.

    Returns ``(0, D)`` when no prefix up to ``min(nbits - start, ncw,
    max_len)`` passes.
    """
    n = nbits - start
    if ncw < n:
        n = ncw
    if max_len < n:
        n = max_len
    i = 0
    D = 0
    while i < n:
        if n - i >= 64:
            a = D if D >= 0 else -D
            if A * (a + 1) * (a + 1) <= B * (i + 1) and A * (a + 64) * (a + 64) <= B * (i + 64):
                s = _popcount(_window(bw, start + i) ^ _window(cw, i))
                D += 2 * s - 64
                i += 64
                continue
        x = _bit(bw, start + i) ^ _bit(cw, i)
        D += 2 * x - 1
        i += 1
        if A * D * D > B * i:
            return i, D
    return 0, D


@njit(cache=True)
def scan_all(bw, nbits, cw, ncw, A, B, max_len):
    """Left-to-right scan with skip-ahead after each detection.

    Returns arrays ``(starts, lengths, D)`` of the detections found.
    """
    starts = np.empty(nbits, dtype=np.int64)
    lengths = np.empty(nbits, dtype=np.int64)
    ds = np.empty(nbits, dtype=np.int64)
    k = 0
    j = 0
    while j < nbits:
        i, D = first_passage(bw, nbits, j, cw, ncw, A, B, max_len)
        if i > 0:
            starts[k] = j
            lengths[k] = i
            ds[k] = D
            k += 1
            j += i
        else:
            j += 1
    return starts[:k], lengths[:k], ds[:k]


@njit(cache=True)
def count_detections_batch(packed, nbits, cw, ncw, A, B, max_len):
    """Number of detections ``scan_all`` finds in each row of ``packed``."""
    out = np.zeros(packed.shape[0], dtype=np.int64)
    for t in range(packed.shape[0]):
        s, _, _ = scan_all(packed[t], nbits, cw, ncw, A, B, max_len)
        out[t] = len(s)
    return out
