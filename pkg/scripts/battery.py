"""Distinguisher battery: per-window keys, shared key, and both controls.

    python3 scripts/battery.py --samples 100000
"""

import argparse

from ditsmark.attacks import distinguisher_battery
from ditsmark.model import MockSourceConfig
from ditsmark.randomness import keygen
from ditsmark.singlebit import SchemeConfig


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lambda", dest="lam", type=int, default=16)
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=10)
    args = ap.parse_args()

    sk = keygen(args.lam, args.seed.to_bytes(8, "big") * 4)
    src = MockSourceConfig(kind="band", band_low=0.35, band_high=0.65, max_steps=1 << 20)
    cfg = SchemeConfig(args.lam)
    runs = {
        "per-window keys": {},
        "shared key": {"shared_key": True},
        "identical control": {"control": "identical"},
        "biased control": {"control": "biased"},
    }
    for name, kw in runs.items():
        rep = distinguisher_battery(sk, src, cfg, args.samples, seed=args.seed, **kw)
        pv = "  ".join(f"{k}={v:.3g}" for k, v in rep.pvalues.items())
        print(f"{name:18s} windows={rep.windows:5d}  {pv}  {'pass' if rep.passed else 'FAIL'}")


if __name__ == "__main__":
    main()
