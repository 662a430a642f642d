"""Spurious udetect detections on uniform strings, next to the exact expectation.

The expectation sums, over start offsets, the probability that a fair +-1
walk crosses D^2 > 2*lambda*n within the remaining length.

    python3 scripts/false_positive_scan.py --strings 10000 --length 4096
"""

import argparse
import time

import numpy as np

from ditsmark.core import BitString
from ditsmark.randomness import keygen
from ditsmark.singlebit import SchemeConfig, detect_block, suffix_scan


def first_passage_cdf(length, c):
    off = length + 1
    p = np.zeros(2 * length + 3)
    p[off] = 1.0
    d = np.arange(len(p)) - off
    cdf = np.zeros(length + 1)
    absorbed = 0.0
    for n in range(1, length + 1):
        q = np.zeros_like(p)
        q[1:] += 0.5 * p[:-1]
        q[:-1] += 0.5 * p[1:]
        hit = d * d > c * n
        absorbed += q[hit].sum()
        q[hit] = 0
        p = q
        cdf[n] = absorbed
    return cdf


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lambda", dest="lam", type=int, default=16)
    ap.add_argument("--strings", type=int, default=10_000)
    ap.add_argument("--length", type=int, default=4096)
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--keys", type=int, default=1)
    args = ap.parse_args()

    cfg = SchemeConfig(args.lam)
    cdf = first_passage_cdf(args.length, 2 * args.lam)
    per_string = sum(cdf[args.length - s] for s in range(args.length))
    print(f"expected: udetect {per_string * args.strings:.2f}, offset-0 {cdf[args.length] * args.strings:.4f}")
    for k in range(args.keys):
        sk = keygen(args.lam, (args.seed * 1000 + k).to_bytes(8, "big") * 4)
        rng = np.random.default_rng(args.seed + k)
        t = time.perf_counter()
        scan = single = 0
        for _ in range(args.strings):
            b = BitString(rng.integers(0, 2, args.length, dtype=np.uint8).tobytes())
            scan += len(suffix_scan(sk, b, cfg))
            single += detect_block(sk, b, cfg).found
        print(f"key {k}: udetect {scan}, offset-0 {single} ({time.perf_counter() - t:.1f}s)")


if __name__ == "__main__":
    main()
