#!/usr/bin/env python3
"""Sweep the acceptance threshold against randomized score trajectories.

For each threshold, simulates many sessions whose per-turn scores follow a
noisy upward drift (regeneration tends to help) and reports acceptance rate
and mean turns spent. Useful for picking a threshold/budget trade-off before
paying for real backends.

    python3 scripts/threshold_sweep.py [--sessions N] [--max-regen N] [--seed N]
"""

from __future__ import annotations

import argparse
import random


def simulate(threshold: float, max_regen: int, rng: random.Random) -> tuple[bool, int]:
    score = rng.uniform(5.0, 8.5)
    turns = 1
    while score < threshold and turns <= max_regen:
        score = min(10.0, score + rng.uniform(-0.3, 1.2))  # suggestions usually help
        turns += 1
    return score >= threshold, turns


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sessions", type=int, default=2000)
    parser.add_argument("--max-regen", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    print(f"{'threshold':>9}  {'accept rate':>11}  {'mean turns':>10}")
    for threshold in [6.0, 6.5, 7.0, 7.5, 8.0, 8.5, 9.0]:
        rng = random.Random(args.seed)
        accepted = 0
        total_turns = 0
        for _ in range(args.sessions):
            ok, turns = simulate(threshold, args.max_regen, rng)
            accepted += ok
            total_turns += turns
        print(f"{threshold:>9.1f}  {accepted / args.sessions:>11.1%}  {total_turns / args.sessions:>10.2f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
