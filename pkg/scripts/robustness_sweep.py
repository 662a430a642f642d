"""Recovery rate vs flip budget for single blocks (both epsilons).

    python3 scripts/robustness_sweep.py --trials 500 --kind adversarial_flip
"""

import argparse
import time

from ditsmark.attacks import dumps_sweep, robustness_sweep
from ditsmark.model import MockSourceConfig
from ditsmark.randomness import keygen
from ditsmark.singlebit import SchemeConfig


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lambda", dest="lam", type=int, default=16)
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--kind", default="adversarial_flip", choices=("adversarial_flip", "random_flip"))
    ap.add_argument("--scale", default="gamma_star", choices=("gamma_star", "absolute", "length"))
    ap.add_argument("--gammas", default="0,0.5,1,1.5,2,2.5,3,4,6")
    ap.add_argument("--band", default="0.35,0.65")
    ap.add_argument("--out")
    args = ap.parse_args()

    lo, hi = (float(x) for x in args.band.split(","))
    sk = keygen(args.lam, args.seed.to_bytes(8, "big") * 4)
    src = MockSourceConfig(kind="band", band_low=lo, band_high=hi, max_steps=1 << 20)
    t = time.perf_counter()
    rows = robustness_sweep(sk, src, SchemeConfig(args.lam), [float(g) for g in args.gammas.split(",")], args.trials, seed=args.seed, kind=args.kind, scale=args.scale)
    text = dumps_sweep(rows)
    if args.out:
        open(args.out, "w").write(text)
    print(text, end="")
    print(f"# {time.perf_counter() - t:.1f}s")


if __name__ == "__main__":
    main()
