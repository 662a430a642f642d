import os

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ditsmark.core import (
    BitFormatError,
    BitString,
    LengthMismatch,
    PaddingError,
    SecretKey,
    WatermarkSignal,
    bits_from_bytes,
    bytes_from_bits,
    hamming_distance,
    text_to_bits,
)

bitstrings = st.lists(st.integers(0, 1), max_size=200).map(BitString)


def bs(s):
    return BitString.from_str(s)


class TestHammingDistance:
    @pytest.mark.parametrize(
        "a, b, expected",
        [("0000", "0000", 0), ("0000", "1111", 4), ("010110", "011100", 2)],
    )
    def test_examples(self, a, b, expected):
        assert hamming_distance(bs(a), bs(b)) == expected

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            hamming_distance(bs("01"), bs("011"))

    @given(bitstrings)
    def test_identity(self, a):
        assert hamming_distance(a, a) == 0

    @given(st.data())
    def test_symmetric_and_triangle(self, data):
        n = data.draw(st.integers(0, 64))
        draw = lambda: BitString(data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)))
        a, b, c = draw(), draw(), draw()
        assert hamming_distance(a, b) == hamming_distance(b, a)
        assert hamming_distance(a, c) <= hamming_distance(a, b) + hamming_distance(b, c)


class TestByteConversion:
    def test_examples(self):
        assert str(bits_from_bytes(b"\x00")) == "00000000"
        assert str(bits_from_bytes(b"\xa5")) == "10100101"
        assert str(bits_from_bytes(b"AB")) == "0100000101000010"
        assert bytes_from_bits(bs("00000000")) == b"\x00"
        assert bytes_from_bits(bs("10100101")) == b"\xa5"

    def test_round_trip_random(self):
        for _ in range(1000):
            x = os.urandom(int.from_bytes(os.urandom(1), "big") % 40)
            assert bytes_from_bits(bits_from_bytes(x)) == x

    @given(st.binary(max_size=64))
    def test_round_trip_property(self, x):
        b = bits_from_bytes(x)
        assert len(b) == 8 * len(x)
        assert bytes_from_bits(b) == x

    def test_padding_error(self):
        with pytest.raises(PaddingError):
            bytes_from_bits(bs("101"))

    def test_text_prompt_is_utf8(self):
        assert text_to_bits("é") == bits_from_bytes("é".encode("utf-8"))


class TestBitString:
    def test_substring_is_one_based_inclusive(self):
        b = bs("0110100")
        assert str(b.substring(2, 4)) == "110"
        assert str(b.substring(1, 7)) == "0110100"
        assert len(b.substring(3, 2)) == 0

    @given(bitstrings, bitstrings)
    def test_concat_lengths_add(self, a, b):
        assert len(a + b) == len(a) + len(b)
        assert str(a + b) == str(a) + str(b)

    def test_rejects_non_bits(self):
        with pytest.raises(BitFormatError):
            BitString.from_str("0102")
        with pytest.raises(BitFormatError):
            BitString([0, 2])

    def test_flip(self):
        assert str(bs("0000").flip([0, 3])) == "1001"


class TestKeyAndSignal:
    def test_key_round_trip(self):
        sk = SecretKey(os.urandom(32), 16)
        assert SecretKey.loads(sk.dumps()) == sk

    def test_key_too_short(self):
        with pytest.raises(ValueError):
            SecretKey(b"\x00", 16)

    def test_bottom_not_embeddable(self):
        assert WatermarkSignal.embeddable(1) is WatermarkSignal.ONE
        with pytest.raises(ValueError):
            WatermarkSignal.embeddable(WatermarkSignal.BOTTOM)
