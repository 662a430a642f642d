import logging

import numpy as np
import pytest

from ditsmark.chain import (
    CLEAN_PREFIX,
    TAMPERED,
    UNWATERMARKED,
    MalformedInput,
    UnsupportedHashLength,
    dumps_report,
    hash_bits,
    loads_report,
    udetect,
    uembed,
    uembed_chain,
    verify,
)
from ditsmark.core import BitString, text_to_bits
from ditsmark.model import band_source
from ditsmark.singlebit import BlockDetection

PROMPT = text_to_bits("Write a short note about the weather.")


@pytest.fixture(scope="module")
def chain(sk, cfg):
    src = band_source(0.35, 0.65, seed=21, max_steps=6000, origin=len(PROMPT))
    return uembed_chain(sk, PROMPT, src, cfg)


class TestHash:
    @pytest.mark.parametrize("lam", [1, 8, 16, 17, 32, 256])
    def test_length(self, lam):
        assert len(hash_bits(PROMPT, lam)) == lam

    def test_deterministic_and_prefix_consistent(self):
        assert hash_bits(PROMPT, 32) == hash_bits(PROMPT, 32)
        assert hash_bits(PROMPT, 256)[:16] == hash_bits(PROMPT, 16)

    def test_padding_is_length_tagged(self):
        assert hash_bits(BitString.from_str("1"), 32) != hash_bits(BitString.from_str("10"), 32)
        assert hash_bits(BitString(), 32) != hash_bits(BitString.from_str("0"), 32)

    def test_too_long(self):
        with pytest.raises(UnsupportedHashLength):
            hash_bits(PROMPT, 257)

    def test_collisions_lambda_32(self):
        # birthday oracle: 10^5 inputs into 2^32 buckets -> about 1.16 expected
        rng = np.random.default_rng(32)
        seen = set()
        coll = 0
        for _ in range(100_000):
            h = str(hash_bits(BitString(rng.integers(0, 2, 64).tolist()), 32))
            coll += h in seen
            seen.add(h)
        assert coll <= 10


class TestEmbedDetect:
    def test_round_trip(self, sk, cfg, chain):
        assert chain.complete_links >= 2
        dets = udetect(sk, chain.payload, cfg)
        assert [(d.start, d.end, d.signal) for d in dets] == [(b.start, b.end, b.signal) for b in chain.blocks]
        rep = verify(PROMPT, dets, chain.payload, cfg.lambda_)
        assert rep.verdict and rep.classification == CLEAN_PREFIX and rep.coverage == 1.0
        assert rep.exit_code == 0

    def test_signals_are_chained_hashes(self, chain, cfg):
        links = chain.links
        assert links[0].signals == hash_bits(PROMPT, cfg.lambda_)
        for prev, cur in zip(links, links[1:]):
            if cur.complete:
                prev_bits = chain.payload[prev.start : prev.end + 1]
                assert cur.signals == hash_bits(prev_bits, cfg.lambda_)

    def test_tiling(self, chain):
        pos = 0
        for b in chain.blocks:
            assert b.start == pos
            pos = b.end + 1
        assert pos == len(chain.payload)

    def test_deterministic(self, sk, cfg):
        a = uembed(sk, PROMPT, band_source(0.35, 0.65, seed=4, max_steps=900, origin=len(PROMPT)), cfg)
        b = uembed(sk, PROMPT, band_source(0.35, 0.65, seed=4, max_steps=900, origin=len(PROMPT)), cfg)
        assert a == b

    def test_halt_in_first_link(self, sk, cfg, caplog):
        src = band_source(0.35, 0.65, seed=5, max_steps=300, origin=len(PROMPT))
        with caplog.at_level(logging.INFO, logger="ditsmark"):
            ch = uembed_chain(sk, PROMPT, src, cfg)
        assert ch.complete_links == 0
        dets = udetect(sk, ch.payload, cfg)
        rep = verify(PROMPT, dets, ch.payload, cfg.lambda_)
        assert rep.verdict and rep.classification == CLEAN_PREFIX and rep.warnings
        assert ch.prefix_span() is None

    def test_empty_prompt(self, sk, cfg):
        with pytest.raises(ValueError):
            uembed(sk, BitString(), band_source(0.35, 0.65, seed=1), cfg)

    def test_random_strings_mostly_clean(self, sk, cfg):
        rng = np.random.default_rng(10_000)
        empty = sum(not udetect(sk, BitString(rng.integers(0, 2, 10_000).tolist()), cfg) for _ in range(100))
        assert empty >= 99

    def test_splice(self, sk, cfg, chain):
        rng = np.random.default_rng(500)
        cut = chain.blocks[len(chain.blocks) // 2].start
        foreign = BitString(rng.integers(0, 2, 500).tolist())
        spliced = chain.payload[:cut] + foreign + chain.payload[cut:]
        dets = udetect(sk, spliced, cfg)
        rep = verify(PROMPT, dets, spliced, cfg.lambda_)
        assert rep.coverage < 1 and rep.classification == TAMPERED
        assert any(d.start >= cut + 500 for d in dets)
        # blocks before the splice are found untouched
        assert [d.end for d in dets if d.end < cut] == [b.end for b in chain.blocks if b.end < cut]


class TestVerify:
    def test_prompt_swap(self, sk, cfg, chain):
        dets = udetect(sk, chain.payload, cfg)
        rep = verify(text_to_bits("A different prompt"), dets, chain.payload, cfg.lambda_)
        assert not rep.verdict and not rep.per_link[0].match
        assert rep.classification == TAMPERED and rep.exit_code == 2

    def test_empty(self):
        rep = verify(PROMPT, [], BitString.zeros(10), 16)
        assert rep.verdict and rep.classification == UNWATERMARKED and rep.exit_code == 3

    def test_overlap(self, chain):
        d = BlockDetection.from_counts(0, 40, 40)
        with pytest.raises(MalformedInput):
            verify(PROMPT, [d, BlockDetection.from_counts(39, 40, 40)], chain.payload, 16)

    def test_report_round_trip(self, sk, cfg, chain):
        dets = udetect(sk, chain.payload, cfg)
        rep = verify(PROMPT, dets, chain.payload, cfg.lambda_)
        text = dumps_report(dets, cfg.lambda_, sk.fingerprint(), len(chain.payload), rep)
        parsed = loads_report(text)
        assert parsed.detections == dets and parsed.lambda_ == cfg.lambda_
        assert parsed.payload_length == len(chain.payload) and parsed.key_fingerprint == sk.fingerprint()

    @pytest.mark.parametrize(
        "text",
        ["lambda x\npayload_length 4\n", "payload_length 4\n", "lambda 16\npayload_length 40\ndetections 1\n0 9 1 11 1.0 0.1\n", "lambda 16\npayload_length 40\ndetections 2\n0 9 1 10 1.0 0.1\n"],
    )
    def test_malformed_reports(self, text):
        with pytest.raises(MalformedInput):
            loads_report(text)
