#!/usr/bin/env python3
"""Auction convergence: rounds to satisfaction and welfare ratio per delta."""
import argparse
import csv
import statistics
import sys
from fractions import Fraction

from market_rounds.instance_gen import gen_uniform_matching
from market_rounds.matching_oracle import matching_size, max_matching
from market_rounds.matching_protocols import auction_matching


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=32)
    parser.add_argument("--degree", type=int, default=3)
    parser.add_argument("--deltas", default="1/2,1/4,1/8")
    parser.add_argument("--seeds", type=int, default=100)
    parser.add_argument("--out", default="auction_convergence.csv")
    args = parser.parse_args()

    deltas = [Fraction(d) for d in args.deltas.split(",")]
    rows = []
    for delta in deltas:
        sizes, opts, rounds_used, bits = [], [], [], []
        for seed in range(args.seeds):
            inst, _ = gen_uniform_matching(args.n, args.degree, seed)
            matching, tr, _ = auction_matching(inst, delta, seed=seed)
            sizes.append(matching_size(matching))
            opts.append(matching_size(max_matching(inst)))
            rounds_used.append(tr.total_rounds)
            bits.append(tr.total_bits)
        rows.append(
            {
                "delta": str(delta),
                "mean_size": statistics.fmean(sizes),
                "mean_opt": statistics.fmean(opts),
                "mean_ratio": statistics.fmean(o / max(1, s) for o, s in zip(opts, sizes)),
                "mean_rounds": statistics.fmean(rounds_used),
                "mean_bits": statistics.fmean(bits),
            }
        )
        print(
            f"delta={delta}: size {rows[-1]['mean_size']:.2f}/{rows[-1]['mean_opt']:.2f}, "
            f"rounds {rows[-1]['mean_rounds']:.1f}, bits {rows[-1]['mean_bits']:.0f}"
        )

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
