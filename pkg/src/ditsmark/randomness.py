"""Keyed stream of unit-interval reals shared by embedder and detector.

``r_i`` is the first 64 bits of HMAC-SHA-256(key, i as 8-byte big-endian),
read as a fraction of 2**64. Values are carried around as Python ints or
``uint64`` arrays in ``[0, 2**64)``; a probability ``p`` is compared after
the same scaling, so every sampling decision is an integer comparison.
"""

from __future__ import annotations

import hashlib
import hmac
from functools import lru_cache

import numpy as np

from .core import SecretKey

ONE = 1 << 64
HALF = 1 << 63


class InsufficientEntropy(ValueError):
    pass


def keygen(lambda_: int, entropy: bytes) -> SecretKey:
    """Derive a 256-bit key deterministically from caller-supplied entropy."""
    if lambda_ < 8:
        raise ValueError("lambda must be at least 8")
    if 8 * len(entropy) < lambda_:
        raise InsufficientEntropy(f"need {lambda_} bits of entropy, got {8 * len(entropy)}")
    material = hashlib.sha256(b"ditsmark-keygen\x00" + lambda_.to_bytes(4, "big") + entropy).digest()
    return SecretKey(material, lambda_)


def unit_real_at(sk: SecretKey, index: int) -> int:
    """Fixed-point ``r_index``; divide by 2**64 for the real value."""
    if index < 0:
        raise ValueError("index must be non-negative")
    digest = hmac.digest(sk.key_material, index.to_bytes(8, "big"), "sha256")
    return int.from_bytes(digest[:8], "big")


def as_float(r: int) -> float:
    return r / ONE


@lru_cache(maxsize=256)
def _stream_block(material: bytes, n: int) -> np.ndarray:
    out = np.empty(n, dtype=np.uint64)
    digest = hmac.digest
    buf = bytearray()
    for i in range(n):
        buf += digest(material, i.to_bytes(8, "big"), "sha256")[:8]
    out[:] = np.frombuffer(bytes(buf), dtype=">u8")
    out.flags.writeable = False
    return out


def key_stream(sk: SecretKey, n: int) -> np.ndarray:
    """``r_0 .. r_{n-1}`` as a read-only ``uint64`` array (cached per key)."""
    size = 64
    while size < n:
        size *= 2
    return _stream_block(sk.key_material, size)[:n]


def half_bits(sk: SecretKey, n: int) -> np.ndarray:
    """``1(r_i < 1/2)`` for i < n, as ``uint8``."""
    return (key_stream(sk, n) < np.uint64(HALF)).astype(np.uint8)


class RandomStream:
    """Cursor over the keyed stream; starts at 0 for every block attempt."""

    def __init__(self, sk: SecretKey, start: int = 0):
        self.sk = sk
        self.index = start

    def __iter__(self):
        return self

    def __next__(self) -> int:
        r = unit_real_at(self.sk, self.index)
        self.index += 1
        return r
