"""Substitution attacks, forgery games and empirical measurements.

The games follow their definitions literally: the adversary wins iff
``verify`` returns True on what it hands back. Sources passed to the games
must already be positioned at the prompt (``source.at(len(prompt))`` for
the mock sources).
"""

from __future__ import annotations

import hmac
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import isqrt
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .chain import WatermarkChain, udetect, uembed_chain, verify
from .core import BitString, SecretKey, WatermarkSignal, hamming_distance
from .model import MockSource, MockSourceConfig, NextBitDistribution, Predictor
from .randomness import ONE
from .sampler import plain_sample
from .singlebit import EPSILON_ROBUST, EPSILON_STRICT, SchemeConfig, detect_block, embed_block, embed_block_traced, scores

ATTACK_KINDS = ("random_flip", "adversarial_flip", "splice", "prompt_swap", "single_flip_forgery")


class AttackTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    gamma: int = 0
    seed: int = 0
    # 0-based inclusive span; None means the whole string.
    target: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")

    @classmethod
    def loads(cls, text: str) -> "AttackSpec":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            values[k] = v
        if "kind" not in values:
            raise ValueError("attack spec needs a kind")
        target = None
        if "target" in values:
            lo, hi = values["target"].replace(",", " ").split()
            target = (int(lo), int(hi))
        return cls(values["kind"], int(values.get("gamma", 0)), int(values.get("seed", 0)), target)

    def dumps(self) -> str:
        out = f"kind={self.kind}\ngamma={self.gamma}\nseed={self.seed}\n"
        if self.target is not None:
            out += f"target={self.target[0]},{self.target[1]}\n"
        return out


def gamma_star(n: int, lambda_: int) -> int:
    """``floor(sqrt(n * lambda / 8))``, the flip radius tolerated at eps = 1/4."""
    return isqrt(n * lambda_ // 8) if (n * lambda_) % 8 == 0 else int((n * lambda_ / 8) ** 0.5)


def flip_order(b: BitString, spec: AttackSpec, sk: Optional[SecretKey] = None) -> List[int]:
    """Positions in the order the attack flips them.

    Taking a prefix of this list gives nested flip sets for growing gamma.
    """
    lo, hi = spec.target if spec.target is not None else (0, len(b) - 1)
    if not 0 <= lo <= hi + 1 or hi >= len(b):
        raise ValueError(f"target span ({lo}, {hi}) outside string of length {len(b)}")
    rng = random.Random(spec.seed)
    span = list(range(lo, hi + 1))
    if spec.kind == "adversarial_flip":
        if sk is None:
            raise ValueError("adversarial_flip needs the secret key")
        x = scores(sk, b[lo : hi + 1])
        majority = 1 if 2 * int(x.sum()) >= len(x) else 0
        agree = [p for p in span if x[p - lo] == majority]
        other = [p for p in span if x[p - lo] != majority]
        rng.shuffle(agree)
        rng.shuffle(other)
        return agree + other
    rng.shuffle(span)
    return span


def substitution_attack(b: BitString, spec: AttackSpec, sk: Optional[SecretKey] = None) -> BitString:
    lo, hi = spec.target if spec.target is not None else (0, len(b) - 1)
    width = hi - lo + 1
    if spec.gamma > width:
        raise AttackTooLarge(f"gamma {spec.gamma} exceeds target span of {width} bits")
    if spec.kind == "prompt_swap":
        return b
    if spec.kind == "single_flip_forgery":
        return b.flip([lo])
    if spec.kind == "splice":
        rng = random.Random(spec.seed)
        buf = bytearray(b.to_bytes_raw())
        for p in range(lo, lo + spec.gamma):
            buf[p] = rng.getrandbits(1)
        return BitString(bytes(buf))
    return b.flip(flip_order(b, spec, sk)[: spec.gamma])


# -- forgery games -----------------------------------------------------------


@dataclass
class GameOutcome:
    adversary_wins: bool
    transcript: Dict[str, object] = field(default_factory=dict)


def robustness_forgery_game(
    sk: SecretKey,
    prompt: BitString,
    source: Predictor,
    flip_position: int,
    cfg: SchemeConfig,
    chain: Optional[WatermarkChain] = None,
) -> GameOutcome:
    """Flip one watermarked bit and claim the result is unmodified.

    ``chain`` may be passed to reuse one embedding across many flips.
    """
    if chain is None:
        chain = uembed_chain(sk, prompt, source, cfg)
    b = chain.payload
    if not 0 <= flip_position < len(b):
        raise ValueError(f"flip position {flip_position} outside output of length {len(b)}")
    forged = b.flip([flip_position])
    dets = udetect(sk, forged, cfg)
    report = verify(prompt, dets, forged, cfg.lambda_)
    span = chain.prefix_span()
    region = "prefix" if span is not None and flip_position in span else "final-link"
    return GameOutcome(
        report.verdict,
        {
            "flip_position": flip_position,
            "region": region,
            "payload_length": len(b),
            "complete_links": chain.complete_links,
            "detections": len(dets),
            "classification": report.classification,
            "verdict": report.verdict,
        },
    )


def prompt_misattribution_game(
    sk: SecretKey,
    z: BitString,
    z_prime: BitString,
    source: Predictor,
    cfg: SchemeConfig,
    chain: Optional[WatermarkChain] = None,
) -> GameOutcome:
    if z == z_prime:
        raise ValueError("z_prime must differ from z")
    if chain is None:
        chain = uembed_chain(sk, z, source, cfg)
    dets = udetect(sk, chain.payload, cfg)
    report = verify(z_prime, dets, chain.payload, cfg.lambda_)
    return GameOutcome(
        report.verdict,
        {
            "complete_links": chain.complete_links,
            "detections": len(dets),
            "first_link_match": report.per_link[0].match if report.per_link else None,
            "classification": report.classification,
        },
    )


# -- robustness sweep --------------------------------------------------------


@dataclass
class SweepRow:
    gamma: float
    epsilon: Fraction
    trials: int
    successes: int
    mean_gap: float

    @property
    def recovery(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    def line(self) -> str:
        return f"{self.gamma:g} {float(self.epsilon):g} {self.trials} {self.successes} {self.recovery:.6f} {self.mean_gap:.6f}"


def _flip_count(gamma: float, scale: str, n: int, lambda_: int) -> int:
    if scale == "absolute":
        k = int(gamma)
    elif scale == "gamma_star":
        k = int(gamma * gamma_star(n, lambda_))
    elif scale == "length":
        k = int(gamma * n)
    else:
        raise ValueError(f"unknown gamma scale {scale!r}")
    return min(k, n)


def robustness_sweep(
    sk: SecretKey,
    source: MockSourceConfig,
    cfg: SchemeConfig,
    gammas: Sequence[float],
    trials: int,
    seed: int = 0,
    kind: str = "adversarial_flip",
    scale: str = "gamma_star",
    epsilons: Sequence[Fraction] = (EPSILON_STRICT, EPSILON_ROBUST),
) -> List[SweepRow]:
    """Embed ``trials`` blocks, attack each at every gamma, detect at each epsilon.

    Flip sets are nested across gammas within a trial, so recovery is
    monotone per trial and the curve is monotone up to sampling noise only
    through the stopping rule.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = random.Random(seed)
    success = {(g, e): 0 for g in gammas for e in epsilons}
    gap_total = 0.0
    for _ in range(trials):
        m = rng.getrandbits(1)
        src = MockSource(replace(source, seed=rng.getrandbits(63)))
        emb = embed_block_traced(sk, m, src, BitString(), cfg)
        gap_total += emb.gap
        order = flip_order(emb.bits, AttackSpec(kind, 0, rng.getrandbits(63)), sk)
        for g in gammas:
            k = _flip_count(g, scale, emb.n, cfg.lambda_)
            attacked = emb.bits.flip(order[:k])
            for e in epsilons:
                if detect_block(sk, attacked, cfg, e).signal == m:
                    success[(g, e)] += 1
    mean_gap = gap_total / trials
    return [SweepRow(g, Fraction(e), trials, success[(g, e)], mean_gap) for g in gammas for e in epsilons]


def dumps_sweep(rows: Sequence[SweepRow]) -> str:
    return "# gamma epsilon trials successes recovery mean_gap\n" + "".join(r.line() + "\n" for r in rows)


def loads_sweep(text: str) -> List[SweepRow]:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 6:
            raise ValueError(f"line {lineno}: expected 6 fields, got {len(parts)}")
        g, e, t, s, _, gap = parts
        rows.append(SweepRow(float(g), Fraction(e).limit_denominator(1 << 20), int(t), int(s), float(gap)))
    return rows


# -- distinguisher battery ---------------------------------------------------

SIGNIFICANCE = 1e-4


def window_key(sk: SecretKey, j: int) -> SecretKey:
    """Independent per-window key derived from ``sk``."""
    material = hmac.digest(sk.key_material, b"ditsmark-window" + j.to_bytes(8, "big"), "sha256")
    return SecretKey(material, sk.lambda_)


def watermarked_corpus(
    sk: SecretKey,
    source: MockSourceConfig,
    cfg: SchemeConfig,
    nbits: int,
    seed: int,
    signal: int = 1,
    shared_key: bool = False,
) -> List[BitString]:
    """Independent embed_block windows totalling at least ``nbits`` bits.

    Each window gets a fresh model seed. With ``shared_key`` every window
    reuses ``sk`` (and hence the same stream), otherwise each window gets
    its own derived key.
    """
    rng = random.Random(seed)
    windows: List[BitString] = []
    total = 0
    j = 0
    while total < nbits:
        key = sk if shared_key else window_key(sk, j)
        src = MockSource(replace(source, seed=rng.getrandbits(63)))
        w = embed_block(key, signal, src, BitString(), cfg)
        windows.append(w)
        total += len(w)
        j += 1
    return windows


def plain_corpus(source: MockSourceConfig, lengths: Sequence[int], seed: int) -> List[BitString]:
    """Unwatermarked windows of the given lengths from fresh model seeds."""
    rng = random.Random(seed)
    nrng = np.random.default_rng(rng.getrandbits(63))
    out = []
    for n in lengths:
        src = MockSource(replace(source, seed=rng.getrandbits(63)))
        rs = nrng.integers(0, ONE, size=n, dtype=np.uint64, endpoint=False)
        buf = bytearray()
        for i in range(n):
            dist: NextBitDistribution = src.next(BitString(bytes(buf)))
            buf.append(plain_sample(dist, int(rs[i])))
        out.append(BitString(bytes(buf)))
    return out


def _pooled_chi2(table: np.ndarray) -> float:
    table = np.asarray(table, dtype=float)
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2:
        return 1.0
    res = stats.chi2_contingency(table, correction=False)
    return float(res.pvalue)


def compare_corpora(a: Sequence[BitString], b: Sequence[BitString]) -> Dict[str, float]:
    """Two-sample tests on block-aligned windows; returns p-values.

    * ``frequency``: ones vs zeros, 2x2 chi-square.
    * ``position``: per-position ones count for positions every window
      reaches, summed 1-dof chi-squares.
    * ``serial``: lag-1 pairs within windows, 2x4 chi-square.
    * ``chi16``: non-overlapping 4-bit patterns within windows, 2x16 chi-square.
    """

    def counts(ws):
        ones = sum(w.count() for w in ws)
        total = sum(len(w) for w in ws)
        pairs = np.zeros(4)
        nib = np.zeros(16)
        for w in ws:
            x = w.to_numpy().astype(np.int64)
            if len(x) > 1:
                pairs += np.bincount(2 * x[:-1] + x[1:], minlength=4)
            k = len(x) // 4
            if k:
                q = x[: 4 * k].reshape(k, 4) @ np.array([8, 4, 2, 1])
                nib += np.bincount(q, minlength=16)
        return ones, total, pairs, nib

    oa, ta, pa, na = counts(a)
    ob, tb, pb, nb = counts(b)
    out = {"frequency": _pooled_chi2([[oa, ta - oa], [ob, tb - ob]])}

    k = min(min(len(w) for w in a), min(len(w) for w in b))
    if k:
        xa = np.stack([w.to_numpy()[:k] for w in a]).astype(float)
        xb = np.stack([w.to_numpy()[:k] for w in b]).astype(float)
        chi = 0.0
        dof = 0
        for pos in range(k):
            t = np.array([[xa[:, pos].sum(), len(a) - xa[:, pos].sum()], [xb[:, pos].sum(), len(b) - xb[:, pos].sum()]])
            t = t[:, t.sum(axis=0) > 0]
            if t.shape[1] == 2:
                chi += stats.chi2_contingency(t, correction=False).statistic
                dof += 1
        out["position"] = float(stats.chi2.sf(chi, dof)) if dof else 1.0
    out["serial"] = _pooled_chi2([pa, pb])
    out["chi16"] = _pooled_chi2([na, nb])
    return out


@dataclass
class BatteryReport:
    pvalues: Dict[str, float]
    bits_per_arm: Tuple[int, int]
    windows: int
    significance: float = SIGNIFICANCE

    @property
    def passed(self) -> bool:
        return all(p >= self.significance for p in self.pvalues.values())

    @property
    def failed_tests(self) -> List[str]:
        return [k for k, p in self.pvalues.items() if p < self.significance]


def distinguisher_battery(
    sk: SecretKey,
    source: MockSourceConfig,
    cfg: SchemeConfig,
    samples: int,
    seed: int = 0,
    signal: int = 1,
    shared_key: bool = False,
    control: Optional[str] = None,
) -> BatteryReport:
    """Watermarked windows vs plain windows of the same lengths.

    ``control`` swaps the watermarked arm: ``"identical"`` feeds the plain
    corpus to both arms, ``"biased"`` emits ``b = m`` for every bit.
    """
    if samples < 10_000:
        raise ValueError("samples must be at least 10^4 bits")
    wat = watermarked_corpus(sk, source, cfg, samples, seed, signal, shared_key)
    lengths = [len(w) for w in wat]
    plain = plain_corpus(source, lengths, seed + 1)
    if control == "identical":
        wat = plain
    elif control == "biased":
        wat = [BitString(bytes([signal]) * n) for n in lengths]
    elif control is not None:
        raise ValueError(f"unknown control {control!r}")
    pv = compare_corpora(wat, plain)
    return BatteryReport(pv, (sum(lengths), sum(lengths)), len(lengths))


__all__ = [
    "AttackSpec",
    "AttackTooLarge",
    "BatteryReport",
    "GameOutcome",
    "SweepRow",
    "compare_corpora",
    "distinguisher_battery",
    "flip_order",
    "gamma_star",
    "hamming_distance",
    "prompt_misattribution_game",
    "robustness_forgery_game",
    "robustness_sweep",
    "substitution_attack",
]
