#!/usr/bin/env python3
"""Reproduce the two-user participation-filter study.

User A streams over a steady 3 Mbps link; user B's link averages only a
fraction of that for the first 100 seconds and then recovers. Without the
participation filter, B keeps joining auctions on its own weak link and
occasionally drags A's playback down with it. With the filter enabled, B
refrains while better capacity is available nearby and both users ride
A's good link.

Run with e.g.:  python demos/participation_filter_study.py --replications 50
"""

import argparse

from cmstream.experiments import modification_comparison

parser = argparse.ArgumentParser()
parser.add_argument("--replications", type=int, default=50)
args = parser.parse_args()

print(f"{'B mean (Mbps)':>14} | {'variant':>10} | {'welfare':>8} | "
      f"{'rebuffer':>8} | {'degradation':>11}")
print("-" * 64)

for mean_b in (0.15, 0.3, 0.45, 1.5, 3.0):
    table = modification_comparison(mean_b, args.replications)
    rows = {row["cell"]: row for row in table.rows}
    for variant in ("unmodified", "modified"):
        row = rows[variant]
        print(f"{mean_b:>14g} | {variant:>10} | "
              f"{row['social_welfare']:>8.2f} | "
              f"{row['rebuffer_ratio']:>8.4f} | "
              f"{row['degradation_ratio']:>11.4f}")
    gain = rows["modified"]["social_welfare"] / rows["unmodified"]["social_welfare"] - 1
    print(f"{'':>14} | welfare change with the filter: {100 * gain:+.1f}%")
    print("-" * 64)

print()
print("The filter pays off exactly when B's link is weak; once both links")
print("are strong the two variants coincide.")
