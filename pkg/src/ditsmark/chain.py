"""Hash-chained multi-bit watermarking: embed, scan, verify.

A link is ``lambda`` consecutive blocks whose signals spell
``hash_bits(prev, lambda)``; ``prev`` is the prompt for the first link and
the previous link's bits afterwards. Verification needs no key: it only
recomputes hashes over the spans the detector reported.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

from .core import BitString, SecretKey, WatermarkSignal, bytes_from_bits
from .model import Predictor, SourceHalted
from .singlebit import BlockDetection, EntropyExhausted, SchemeConfig, embed_block_traced, suffix_scan

log = logging.getLogger(__name__)

CLEAN_PREFIX = "clean-prefix"
TAMPERED = "tampered"
UNWATERMARKED = "unwatermarked"


class MalformedInput(ValueError):
    pass


class UnsupportedHashLength(ValueError):
    pass


def hash_bits(data: BitString, lambda_: int) -> BitString:
    """SHA-256 of (8-byte big-endian bit length || zero-padded bits), first ``lambda_`` bits."""
    if lambda_ > 256:
        raise UnsupportedHashLength(f"lambda {lambda_} exceeds the 256-bit digest")
    if lambda_ < 1:
        raise ValueError("lambda must be positive")
    pad = (-len(data)) % 8
    payload = bytes_from_bits(data + BitString.zeros(pad))
    digest = hashlib.sha256(len(data).to_bytes(8, "big") + payload).digest()
    value = int.from_bytes(digest, "big") >> (256 - lambda_)
    return BitString.from_str(format(value, f"0{lambda_}b"))


@dataclass
class WatermarkLink:
    blocks: List[BlockDetection]
    signals: BitString
    lambda_: int

    @property
    def complete(self) -> bool:
        return len(self.blocks) == self.lambda_

    @property
    def start(self) -> int:
        return self.blocks[0].start

    @property
    def end(self) -> int:
        return self.blocks[-1].end


@dataclass
class WatermarkChain:
    """Embedding record: where every block and link landed in the payload."""

    prompt: BitString
    payload: BitString
    blocks: List[BlockDetection]
    lambda_: int
    dropped_bits: int = 0

    @property
    def links(self) -> List[WatermarkLink]:
        out = []
        for k in range(0, len(self.blocks), self.lambda_):
            group = self.blocks[k : k + self.lambda_]
            out.append(WatermarkLink(group, BitString(int(b.signal) for b in group), self.lambda_))
        return out

    @property
    def complete_links(self) -> int:
        return len(self.blocks) // self.lambda_

    def prefix_span(self) -> Optional[range]:
        """Payload positions inside complete links that have a complete successor."""
        k = self.complete_links
        if k < 2:
            return None
        last = self.blocks[(k - 1) * self.lambda_ - 1].end
        return range(0, last + 1)


def uembed_chain(sk: SecretKey, prompt: BitString, source: Predictor, cfg: SchemeConfig) -> WatermarkChain:
    """Generate links until the source halts.

    A block interrupted by the halt is dropped: it carries no guarantee and
    would show up to the detector as unexplained bits.
    """
    if len(prompt) == 0:
        raise ValueError("prompt must be non-empty")
    lam = cfg.lambda_
    context = prompt
    payload = BitString()
    blocks: List[BlockDetection] = []
    prev = prompt
    dropped = 0
    while True:
        h = hash_bits(prev, lam)
        link_bits = BitString()
        for i in range(lam):
            if source.halted(context):
                return WatermarkChain(prompt, payload, blocks, lam, dropped)
            try:
                emb = embed_block_traced(sk, h[i], source, context, cfg)
            except SourceHalted as exc:
                dropped = getattr(exc, "produced", 0)
                log.info("source halted mid-block; dropping %d partial bits", dropped)
                return WatermarkChain(prompt, payload, blocks, lam, dropped)
            except EntropyExhausted as exc:
                raise EntropyExhausted(
                    exc.n,
                    exc.score,
                    exc.bound,
                    f"link {len(blocks) // lam + 1}, block {i + 1} at payload offset {len(payload)}: {exc}",
                ) from exc
            start = len(payload)
            d = round(emb.n * (2 * emb.score - 1))
            blocks.append(BlockDetection.from_counts(start, emb.n, d))
            payload = payload + emb.bits
            context = context + emb.bits
            link_bits = link_bits + emb.bits
        prev = link_bits


def uembed(sk: SecretKey, prompt: BitString, source: Predictor, cfg: SchemeConfig) -> BitString:
    return uembed_chain(sk, prompt, source, cfg).payload


def udetect(sk: SecretKey, b: BitString, cfg: SchemeConfig) -> List[BlockDetection]:
    """Scan every start offset; after a detection resume right after its span."""
    if len(b) < 1:
        raise ValueError("empty input")
    return suffix_scan(sk, b, cfg)


@dataclass
class LinkCheck:
    index: int
    expected: BitString
    recovered: BitString
    match: bool


@dataclass
class VerificationReport:
    verdict: bool
    per_link: List[LinkCheck]
    classification: str
    coverage: float
    warnings: List[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return {CLEAN_PREFIX: 0, TAMPERED: 2, UNWATERMARKED: 3}[self.classification]


def verify(
    prompt: BitString,
    detections: Sequence[BlockDetection],
    payload: BitString,
    lambda_: int,
) -> VerificationReport:
    """Check every complete link against the hash of its predecessor."""
    prev_end = -1
    for d in detections:
        if not d.found:
            raise MalformedInput("BOTTOM entries are not detections")
        if d.start <= prev_end or d.end < d.start or d.end >= len(payload):
            raise MalformedInput(f"detection [{d.start}, {d.end}] overlaps, is unordered, or exceeds the payload")
        prev_end = d.end

    checks: List[LinkCheck] = []
    warnings: List[str] = []
    prev = prompt
    complete = len(detections) // lambda_
    for k in range(complete):
        group = detections[k * lambda_ : (k + 1) * lambda_]
        expected = hash_bits(prev, lambda_)
        recovered = BitString(int(d.signal) for d in group)
        checks.append(LinkCheck(k + 1, expected, recovered, expected == recovered))
        prev = BitString()
        for d in group:
            prev = prev + payload[d.start : d.end + 1]
    if len(detections) % lambda_:
        warnings.append(f"trailing partial link of {len(detections) % lambda_} blocks not checked")
    if detections and complete == 0:
        warnings.append("no complete link; nothing bound to the prompt")

    verdict = all(c.match for c in checks)
    covered = sum(d.end - d.start + 1 for d in detections)
    coverage = covered / len(payload) if len(payload) else 0.0
    if not detections:
        classification = UNWATERMARKED
    elif verdict and covered == len(payload):
        classification = CLEAN_PREFIX
    else:
        classification = TAMPERED
    return VerificationReport(verdict, checks, classification, coverage, warnings)


# -- report file -------------------------------------------------------------
#
#   # ditsmark chain report
#   lambda <int>
#   key <fingerprint hex>
#   payload_length <int>
#   detections <count>
#   <start> <end> <signal> <n> <score> <pvalue>      (one per detection)
#   link <index> <expected bits> <recovered bits> <match|mismatch>
#   verdict <true|false>
#   classification <clean-prefix|tampered|unwatermarked>
#   coverage <float>
#
# start/end are 0-based inclusive payload offsets.


def dumps_report(
    detections: Sequence[BlockDetection],
    lambda_: int,
    key_fingerprint: str,
    payload_length: int,
    report: Optional[VerificationReport] = None,
) -> str:
    lines = [
        "# ditsmark chain report",
        f"lambda {lambda_}",
        f"key {key_fingerprint}",
        f"payload_length {payload_length}",
        f"detections {len(detections)}",
    ]
    for d in detections:
        lines.append(f"{d.start} {d.end} {int(d.signal)} {d.n} {d.score!r} {d.pvalue_bound!r}")
    if report is not None:
        for c in report.per_link:
            lines.append(f"link {c.index} {c.expected} {c.recovered} {'match' if c.match else 'mismatch'}")
        lines.append(f"verdict {'true' if report.verdict else 'false'}")
        lines.append(f"classification {report.classification}")
        lines.append(f"coverage {report.coverage!r}")
    return "\n".join(lines) + "\n"


@dataclass
class ParsedReport:
    lambda_: int
    key_fingerprint: str
    payload_length: int
    detections: List[BlockDetection]


def loads_report(text: str) -> ParsedReport:
    lines = text.splitlines()
    header = {}
    detections: List[BlockDetection] = []
    expected_count = None
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            if parts[0] in ("lambda", "payload_length", "detections"):
                header[parts[0]] = int(parts[1])
                if parts[0] == "detections":
                    expected_count = header["detections"]
            elif parts[0] == "key":
                header["key"] = parts[1]
            elif parts[0] in ("link", "verdict", "classification", "coverage"):
                continue
            else:
                start, end, sig, n = (int(x) for x in parts[:4])
                score, pval = float(parts[4]), float(parts[5])
                if sig not in (0, 1) or n != end - start + 1:
                    raise ValueError("inconsistent detection record")
                detections.append(BlockDetection(WatermarkSignal(sig), start, end, n, score, pval))
        except (ValueError, IndexError) as exc:
            raise MalformedInput(f"line {lineno}: {exc}: {raw!r}") from None
    for k in ("lambda", "payload_length"):
        if k not in header:
            raise MalformedInput(f"report is missing the '{k}' header")
    if expected_count is not None and expected_count != len(detections):
        raise MalformedInput(f"header announces {expected_count} detections, found {len(detections)}")
    return ParsedReport(header["lambda"], header.get("key", ""), header["payload_length"], detections)


def write_report(path: Union[str, Path], text: str) -> None:
    Path(path).write_text(text)
