"""Binary autoregressive sources: the Predictor side of a Model.

A predictor maps a context bit string to the distribution of the next bit
and says when it has halted. Mock sources stand in for a language model;
:class:`VocabSource` walks a fixed-width token vocabulary bit by bit.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Sequence, Union

from .core import BitString
from .randomness import ONE


class SourceHalted(RuntimeError):
    pass


class ImpossiblePrefix(ValueError):
    pass


class DecodeError(ValueError):
    def __init__(self, offset: int, chunk: str):
        super().__init__(f"bits {chunk!r} at offset {offset} are not a token of the vocabulary")
        self.offset = offset
        self.chunk = chunk


@dataclass(frozen=True)
class NextBitDistribution:
    """Next-bit distribution in 64-bit fixed point: ``p0 = p0_fixed / 2**64``.

    ``p1_fixed`` is defined as ``2**64 - p0_fixed`` so the pair sums to one
    exactly.
    """

    p0_fixed: int

    def __post_init__(self):
        if not 0 <= self.p0_fixed <= ONE:
            raise ValueError(f"p0_fixed out of range: {self.p0_fixed}")

    @classmethod
    def from_p0(cls, p0: Union[float, Fraction]) -> "NextBitDistribution":
        if not 0 <= p0 <= 1:
            raise ValueError(f"p0 must lie in [0, 1], got {p0}")
        if isinstance(p0, Fraction):
            return cls(p0.numerator * ONE // p0.denominator)
        return cls(min(ONE, int(round(p0 * ONE))))

    @property
    def p1_fixed(self) -> int:
        return ONE - self.p0_fixed

    @property
    def p0(self) -> float:
        return self.p0_fixed / ONE

    @property
    def p1(self) -> float:
        return self.p1_fixed / ONE

    @property
    def min_prob(self) -> float:
        return min(self.p0_fixed, self.p1_fixed) / ONE

    def __iter__(self):
        return iter((self.p0, self.p1))


class Predictor:
    """Deterministic next-bit distribution as a function of the context."""

    def next(self, context: BitString) -> NextBitDistribution:
        raise NotImplementedError

    def halted(self, context: BitString) -> bool:
        return False


def predict_next(source: Predictor, context: BitString) -> NextBitDistribution:
    if source.halted(context):
        raise SourceHalted(f"source halted at context length {len(context)}")
    return source.next(context)


# -- mock sources ------------------------------------------------------------

MOCK_KINDS = ("fixed", "band", "markov")


@dataclass(frozen=True)
class MockSourceConfig:
    kind: str = "band"
    p0_fixed: float = 0.5
    band_low: float = 0.35
    band_high: float = 0.65
    markov_stay: float = 0.7
    max_steps: int = 4096
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MOCK_KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}; expected one of {MOCK_KINDS}")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")
        if self.kind == "band" and not 0 < self.band_low <= self.band_high < 1:
            raise ValueError("band source needs 0 < band_low <= band_high < 1")
        if self.kind == "fixed" and not 0 <= self.p0_fixed <= 1:
            raise ValueError("p0_fixed must lie in [0, 1]")
        if self.kind == "markov" and not 0 <= self.markov_stay <= 1:
            raise ValueError("markov_stay must lie in [0, 1]")


class MockSource(Predictor):
    """Mock entropy source.

    ``origin`` is the context length at which generation starts (normally
    the prompt length). Step ``t = len(context) - origin`` indexes the band
    sequence and the source halts once ``t >= max_steps``.

    The band sequence is derived from the public ``seed`` and never from the
    watermark key.
    """

    def __init__(self, config: MockSourceConfig, origin: int = 0):
        self.config = config
        self.origin = origin
        self._seed = config.seed.to_bytes(16, "big", signed=True)
        lo = NextBitDistribution.from_p0(config.band_low).p0_fixed
        hi = NextBitDistribution.from_p0(config.band_high).p0_fixed
        self._lo, self._width = lo, hi - lo
        self._fixed = NextBitDistribution.from_p0(config.p0_fixed)

    def at(self, origin: int) -> "MockSource":
        return MockSource(self.config, origin)

    def step(self, context: BitString) -> int:
        return len(context) - self.origin

    def halted(self, context: BitString) -> bool:
        return self.step(context) >= self.config.max_steps

    def band_p0(self, t: int) -> NextBitDistribution:
        h = hashlib.blake2b(t.to_bytes(8, "big", signed=True), key=self._seed, digest_size=8).digest()
        u = int.from_bytes(h, "big")
        return NextBitDistribution(self._lo + (self._width * u >> 64))

    def next(self, context: BitString) -> NextBitDistribution:
        kind = self.config.kind
        if kind == "fixed":
            return self._fixed
        if kind == "band":
            return self.band_p0(self.step(context))
        if len(context) == 0:
            return NextBitDistribution(ONE // 2)
        stay = NextBitDistribution.from_p0(self.config.markov_stay)
        return stay if context[-1] == 0 else NextBitDistribution(stay.p1_fixed)


def fixed_source(p0: float, max_steps: int = 1 << 20, origin: int = 0) -> MockSource:
    return MockSource(MockSourceConfig(kind="fixed", p0_fixed=p0, max_steps=max_steps), origin)


def band_source(low: float, high: float, seed: int, max_steps: int = 1 << 20, origin: int = 0) -> MockSource:
    cfg = MockSourceConfig(kind="band", band_low=low, band_high=high, seed=seed, max_steps=max_steps)
    return MockSource(cfg, origin)


# -- token vocabularies ------------------------------------------------------


@dataclass
class TokenVocab:
    """Fixed-width vocabulary: token id (as a bit string) -> probability."""

    width: int
    probabilities: Dict[str, float]
    _mass: Dict[str, Fraction] = field(init=False, repr=False)

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("width must be positive")
        for tok in self.probabilities:
            if len(tok) != self.width or tok.strip("01"):
                raise ValueError(f"token {tok!r} is not a {self.width}-bit string")
        total = sum(self.probabilities.values())
        if abs(total - 1.0) > 2.0**-40:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        # Prefix masses, exact, so conditionals renormalize without drift.
        mass: Dict[str, Fraction] = {}
        for tok, p in self.probabilities.items():
            fp = Fraction(p)
            for k in range(self.width + 1):
                mass[tok[:k]] = mass.get(tok[:k], Fraction(0)) + fp
        self._mass = mass

    def prefix_mass(self, prefix: str) -> Fraction:
        return self._mass.get(prefix, Fraction(0))

    @classmethod
    def uniform(cls, width: int) -> "TokenVocab":
        n = 1 << width
        return cls(width, {format(i, f"0{width}b"): 1.0 / n for i in range(n)})

    @classmethod
    def loads(cls, text: str) -> "TokenVocab":
        probs: Dict[str, float] = {}
        width = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected '<bits> <probability>'")
            tok, p = parts
            if tok.strip("01"):
                raise ValueError(f"line {lineno}: token {tok!r} is not a bit string")
            if width is None:
                width = len(tok)
            elif len(tok) != width:
                raise ValueError(f"line {lineno}: token width {len(tok)} != {width}")
            if tok in probs:
                raise ValueError(f"line {lineno}: duplicate token {tok}")
            try:
                probs[tok] = float(p)
            except ValueError:
                raise ValueError(f"line {lineno}: bad probability {p!r}") from None
        if width is None:
            raise ValueError("empty vocabulary")
        return cls(width, probs)

    def dumps(self) -> str:
        return "".join(f"{tok} {p!r}\n" for tok, p in sorted(self.probabilities.items()))


def token_bit_walk(vocab: TokenVocab, token_context: Sequence[str], bit_prefix: BitString) -> NextBitDistribution:
    """Conditional next-bit distribution inside the current token.

    The vocabulary is a unigram model, so ``token_context`` does not change
    the result; it is accepted to keep the adapter's call shape.
    """
    if len(bit_prefix) >= vocab.width:
        raise ValueError(f"prefix length {len(bit_prefix)} must be below width {vocab.width}")
    prefix = str(bit_prefix)
    total = vocab.prefix_mass(prefix)
    if total == 0:
        raise ImpossiblePrefix(f"no token extends prefix {prefix!r}")
    return NextBitDistribution.from_p0(vocab.prefix_mass(prefix + "0") / total)


def decode_tokens(bits: BitString, vocab: TokenVocab) -> List[str]:
    w = vocab.width
    if len(bits) % w:
        raise ValueError(f"bit length {len(bits)} not divisible by width {w}")
    s = str(bits)
    out = []
    for off in range(0, len(s), w):
        chunk = s[off : off + w]
        if chunk not in vocab.probabilities:
            raise DecodeError(off, chunk)
        out.append(chunk)
    return out


class VocabSource(Predictor):
    """Generates whole tokens of ``vocab`` one bit at a time."""

    def __init__(self, vocab: TokenVocab, max_tokens: int, origin: int = 0):
        self.vocab = vocab
        self.max_tokens = max_tokens
        self.origin = origin

    def at(self, origin: int) -> "VocabSource":
        return VocabSource(self.vocab, self.max_tokens, origin)

    def halted(self, context: BitString) -> bool:
        return len(context) - self.origin >= self.max_tokens * self.vocab.width

    def next(self, context: BitString) -> NextBitDistribution:
        gen = len(context) - self.origin
        within = gen % self.vocab.width
        return token_bit_walk(self.vocab, (), context[len(context) - within :] if within else BitString())


# -- config files ------------------------------------------------------------


def parse_model_config(text: str, base_dir: Union[str, Path] = ".") -> Union[MockSourceConfig, dict]:
    """Parse ``key=value`` lines.

    ``kind`` is one of fixed/band/markov, or ``vocab`` with ``vocab_file``
    and ``max_tokens`` keys; the vocab form returns a plain dict.
    """
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        values[k] = v
    kind = values.get("kind", "band")
    if kind == "vocab":
        if "vocab_file" not in values:
            raise ValueError("vocab config needs vocab_file")
        path = Path(base_dir) / values["vocab_file"]
        return {
            "kind": "vocab",
            "vocab": TokenVocab.loads(path.read_text()),
            "max_tokens": int(values.get("max_tokens", "512")),
            "seed": int(values.get("seed", "0")),
        }
    conv = {"p0_fixed": float, "band_low": float, "band_high": float, "markov_stay": float, "max_steps": int, "seed": int}
    kwargs = {"kind": kind}
    for k, v in values.items():
        if k == "kind":
            continue
        if k not in conv:
            raise ValueError(f"unknown model config key {k!r}")
        try:
            kwargs[k] = conv[k](v)
        except ValueError:
            raise ValueError(f"bad value for {k}: {v!r}") from None
    return MockSourceConfig(**kwargs)


def dump_model_config(cfg: MockSourceConfig) -> str:
    return "".join(
        f"{k}={getattr(cfg, k)}\n"
        for k in ("kind", "p0_fixed", "band_low", "band_high", "markov_stay", "max_steps", "seed")
    )


def build_source(spec: Union[MockSourceConfig, dict], origin: int = 0) -> Predictor:
    if isinstance(spec, MockSourceConfig):
        return MockSource(spec, origin)
    return VocabSource(spec["vocab"], spec["max_tokens"], origin)
