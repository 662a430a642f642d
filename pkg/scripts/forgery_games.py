"""Robustness-exploiting forgery over every payload position of one chain,
split by region, plus prompt-misattribution trials.

    python3 scripts/forgery_games.py --max-steps 2000 --swaps 200
"""

import argparse
import random

from ditsmark.attacks import prompt_misattribution_game, robustness_forgery_game
from ditsmark.chain import uembed_chain
from ditsmark.core import text_to_bits
from ditsmark.model import band_source
from ditsmark.randomness import keygen
from ditsmark.singlebit import SchemeConfig


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lambda", dest="lam", type=int, default=16)
    ap.add_argument("--max-steps", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=8)
    ap.add_argument("--swaps", type=int, default=200)
    args = ap.parse_args()

    sk = keygen(args.lam, args.seed.to_bytes(8, "big") * 4)
    cfg = SchemeConfig(args.lam)
    prompt = text_to_bits("forgery game prompt")
    chain = uembed_chain(sk, prompt, band_source(0.35, 0.65, seed=args.seed, max_steps=args.max_steps, origin=len(prompt)), cfg)
    print(f"payload {len(chain.payload)} bits, {len(chain.blocks)} blocks, {chain.complete_links} complete links")
    tally = {}
    for pos in range(len(chain.payload)):
        out = robustness_forgery_game(sk, prompt, None, pos, cfg, chain=chain)
        region = out.transcript["region"]
        n, w = tally.get(region, (0, 0))
        tally[region] = (n + 1, w + out.adversary_wins)
    for region, (n, w) in sorted(tally.items()):
        print(f"{region:10s} flips={n:5d} adversary wins={w} ({w / n:.3f})")

    rng = random.Random(args.seed)
    wins = 0
    for _ in range(args.swaps):
        z2 = text_to_bits(f"other prompt {rng.getrandbits(32)}")
        wins += prompt_misattribution_game(sk, prompt, z2, None, cfg, chain=chain).adversary_wins
    print(f"prompt swaps: {wins}/{args.swaps} adversary wins")


if __name__ == "__main__":
    main()
