"""Bit strings, keys and watermark signals.

Indices are 0-based everywhere in code. Where a docstring talks about
``b_i`` or ``b_{i:j}`` it means the usual 1-based, inclusive notation, and
:meth:`BitString.substring` is the one method that takes it literally.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

import numpy as np


class LengthMismatch(ValueError):
    """Operands of a bitwise comparison have different lengths."""


class PaddingError(ValueError):
    """A bit string cannot be packed into whole bytes."""


class BitFormatError(ValueError):
    """Malformed textual bit string."""


class WatermarkSignal(enum.IntEnum):
    ZERO = 0
    ONE = 1
    BOTTOM = 2

    @classmethod
    def embeddable(cls, m: Union[int, "WatermarkSignal"]) -> "WatermarkSignal":
        """Coerce ``m`` to ZERO/ONE, rejecting BOTTOM (detection-only)."""
        sig = cls(int(m))
        if sig is cls.BOTTOM:
            raise ValueError("BOTTOM cannot be embedded")
        return sig

    def __str__(self) -> str:
        return "bot" if self is WatermarkSignal.BOTTOM else str(int(self))


class BitString:
    """Immutable sequence of bits.

    Stored as one byte per bit (values 0/1), which keeps slicing and
    concatenation in C and converts to numpy without copying.
    """

    __slots__ = ("_data",)

    def __init__(self, bits: Union[Iterable[int], bytes, bytearray, "BitString", None] = None):
        if bits is None:
            data = b""
        elif isinstance(bits, BitString):
            data = bits._data
        elif isinstance(bits, (bytes, bytearray)):
            data = bytes(bits)
        elif isinstance(bits, np.ndarray):
            data = np.asarray(bits, dtype=np.uint8).tobytes()
        else:
            data = bytes(int(x) for x in bits)
        if data.translate(None, b"\x00\x01"):
            raise BitFormatError("bits must be 0 or 1")
        self._data = data

    @classmethod
    def _raw(cls, data: bytes) -> "BitString":
        obj = cls.__new__(cls)
        obj._data = data
        return obj

    @classmethod
    def from_str(cls, text: str) -> "BitString":
        text = text.strip()
        if text.strip("01"):
            bad = next(i for i, ch in enumerate(text) if ch not in "01")
            raise BitFormatError(f"invalid bit character {text[bad]!r} at offset {bad}")
        return cls._raw(text.encode("ascii").translate(_ASCII_TO_BIT))

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls._raw(bytes(n))

    def __str__(self) -> str:
        return self._data.translate(_BIT_TO_ASCII).decode("ascii")

    def __repr__(self) -> str:
        s = str(self)
        if len(s) > 40:
            s = s[:37] + "..."
        return f"BitString('{s}', n={len(self)})"

    def __len__(self) -> int:
        return len(self._data)

    def __iter__(self):
        return iter(self._data)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return BitString._raw(self._data[idx])
        return self._data[idx]

    def __add__(self, other: "BitString") -> "BitString":
        if not isinstance(other, BitString):
            return NotImplemented
        return BitString._raw(self._data + other._data)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, BitString) and self._data == other._data

    def __hash__(self) -> int:
        return hash(self._data)

    def substring(self, i: int, j: int) -> "BitString":
        """``b_{i:j}`` in 1-based inclusive notation."""
        if i < 1 or j < i - 1 or j > len(self):
            raise IndexError(f"substring({i}, {j}) out of range for length {len(self)}")
        return BitString._raw(self._data[i - 1 : j])

    def flip(self, positions: Iterable[int]) -> "BitString":
        buf = bytearray(self._data)
        for p in positions:
            buf[p] ^= 1
        return BitString._raw(bytes(buf))

    def to_numpy(self) -> np.ndarray:
        return np.frombuffer(self._data, dtype=np.uint8)

    def to_bytes_raw(self) -> bytes:
        """One byte per bit; the internal representation."""
        return self._data

    def count(self) -> int:
        return self._data.count(1)


_ASCII_TO_BIT = bytes.maketrans(b"01", b"\x00\x01")
_BIT_TO_ASCII = bytes.maketrans(b"\x00\x01", b"01")


def hamming_distance(a: BitString, b: BitString) -> int:
    """Number of positions where ``a`` and ``b`` differ."""
    if len(a) != len(b):
        raise LengthMismatch(f"lengths differ: {len(a)} != {len(b)}")
    if not len(a):
        return 0
    return int(np.count_nonzero(a.to_numpy() != b.to_numpy()))


def bits_from_bytes(data: bytes) -> BitString:
    """Expand bytes MSB-first into a bit string of length ``8 * len(data)``."""
    arr = np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8), bitorder="big")
    return BitString._raw(arr.tobytes())


def bytes_from_bits(b: BitString) -> bytes:
    if len(b) % 8:
        raise PaddingError(f"bit length {len(b)} is not a multiple of 8")
    return np.packbits(b.to_numpy(), bitorder="big").tobytes()


def text_to_bits(text: str) -> BitString:
    """Canonical prompt encoding: UTF-8, then MSB-first bits."""
    return bits_from_bytes(text.encode("utf-8"))


@dataclass(frozen=True)
class SecretKey:
    key_material: bytes
    lambda_: int

    def __post_init__(self):
        if self.lambda_ < 1:
            raise ValueError("lambda must be positive")
        if 8 * len(self.key_material) < self.lambda_:
            raise ValueError("key material shorter than lambda bits")

    @property
    def nbits(self) -> int:
        return 8 * len(self.key_material)

    def fingerprint(self) -> str:
        import hashlib

        return hashlib.sha256(b"ditsmark-key-fp" + self.key_material).hexdigest()[:16]

    def dumps(self) -> str:
        return f"{self.key_material.hex()}\n{self.lambda_}\n"

    @classmethod
    def loads(cls, text: str) -> "SecretKey":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if len(lines) != 2:
            raise ValueError(f"key file must have 2 non-empty lines, found {len(lines)}")
        try:
            material = bytes.fromhex(lines[0])
        except ValueError as exc:
            raise ValueError(f"line 1: key material is not hex ({exc})") from None
        try:
            lam = int(lines[1])
        except ValueError:
            raise ValueError(f"line 2: lambda {lines[1]!r} is not an integer") from None
        return cls(material, lam)


def read_bits(path: Union[str, Path]) -> BitString:
    text = Path(path).read_text()
    try:
        return BitString.from_str(text)
    except BitFormatError as exc:
        raise BitFormatError(f"{path}: {exc}") from None


def write_bits(path: Union[str, Path], b: BitString) -> None:
    Path(path).write_text(str(b) + "\n")
