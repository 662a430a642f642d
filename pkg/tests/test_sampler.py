import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ditsmark.model import NextBitDistribution
from ditsmark.randomness import HALF, ONE
from ditsmark.sampler import (
    detect_1bit,
    detect_1bit_array,
    p0_array,
    plain_sample,
    plain_sample_array,
    wat_sample,
    wat_sample_array,
)

HALF_DIST = NextBitDistribution.from_p0(0.5)
rng = np.random.default_rng(20261018)


def fx(x: float) -> int:
    return int(x * ONE)


def test_examples_half():
    assert wat_sample(HALF_DIST, 0, fx(0.2)) == 1
    assert wat_sample(HALF_DIST, 1, fx(0.2)) == 0
    assert detect_1bit(1, fx(0.2)) == 0
    assert detect_1bit(0, fx(0.2)) == 1


def test_examples_skewed():
    d = NextBitDistribution.from_p0(0.3)
    assert wat_sample(d, 0, fx(0.5)) == 1
    assert wat_sample(d, 1, fx(0.5)) == 1
    assert detect_1bit(1, fx(0.5)) == 1
    assert plain_sample(d, fx(0.29)) == 0
    assert plain_sample(d, fx(0.31)) == 1


def test_bad_signal():
    with pytest.raises(ValueError):
        wat_sample(HALF_DIST, 2, 0)


@given(st.integers(0, ONE - 1), st.integers(0, ONE), st.integers(0, 1))
def test_vector_matches_scalar(r, p0, m):
    d = NextBitDistribution(p0)
    arr = wat_sample_array(p0_array([p0]), np.array([m]), np.array([r], dtype=np.uint64))
    # clipping p0 = 1 to 2**64 - 1 shifts one boundary value of r
    if p0 < ONE or r not in (0, ONE - 1):
        assert int(arr[0]) == wat_sample(d, m, r)
    assert int(detect_1bit_array(np.array([1]), np.array([r], dtype=np.uint64))[0]) == detect_1bit(1, r)
    if p0 < ONE:
        assert int(plain_sample_array(p0_array([p0]), np.array([r], dtype=np.uint64))[0]) == plain_sample(d, r)


@pytest.mark.parametrize("m", [0, 1])
def test_marginal_frequency(m):
    n = 10**6
    r = rng.integers(0, np.iinfo(np.uint64).max, size=n, dtype=np.uint64, endpoint=True)
    p0 = p0_array([fx(0.3)])
    zeros = 1 - wat_sample_array(np.broadcast_to(p0, (n,)), np.full(n, m), r).mean()
    assert abs(zeros - 0.3) < 0.0025
    plain_zeros = 1 - plain_sample_array(np.broadcast_to(p0, (n,)), r).mean()
    assert abs(plain_zeros - 0.3) < 0.0025


def test_error_rate_exhaustive_grid():
    # Exact per-bit error of detect_1bit(wat_sample(.)) over a 10^4 grid of r
    # (midpoints), for a spread of p0 values; the oracle is max(p0, p1) - 1/2.
    grid = ((np.arange(10_000, dtype=np.float64) + 0.5) / 10_000 * 2.0**64).astype(np.uint64)
    for p in [0.5, 0.35, 0.3, 0.65, 0.9, 0.05, 1.0, 0.0]:
        p0 = np.broadcast_to(p0_array([fx(p) if p < 1 else ONE]), grid.shape)
        for m in (0, 1):
            b = wat_sample_array(p0, np.full(grid.shape, m), grid)
            err = (detect_1bit_array(b, grid) != m).mean()
            assert abs(err - (max(p, 1 - p) - 0.5)) <= 1e-4 + 1e-12


@given(st.integers(0, ONE - 1), st.integers(0, 1))
def test_flipping_bit_flips_score(r, b):
    assert detect_1bit(b, r) ^ detect_1bit(1 - b, r) == 1


def test_ties_strict():
    d = NextBitDistribution.from_p0(0.25)
    assert wat_sample(d, 1, d.p0_fixed) == 1
    assert wat_sample(d, 1, d.p0_fixed - 1) == 0
    assert wat_sample(d, 0, d.p1_fixed) == 0
    assert detect_1bit(0, HALF) == 0
