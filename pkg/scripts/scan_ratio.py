#!/usr/bin/env python3
"""Scan the annihilation-partner ratio r(p) across a density grid.

Where ``dlacs pc`` bisects for the r(p) = 1 crossing, this evaluates
r(p) on an even grid and writes one CSV row per point, which is the
right tool for eyeballing the shape of the curve around the crossing.
"""

import argparse
import dataclasses
import sys

from dlacs.experiments import default_pc_config, ratio_at


def run() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lo", type=float, default=0.50)
    ap.add_argument("--hi", type=float, default=0.80)
    ap.add_argument("--points", type=int, default=7)
    ap.add_argument("--replicas", type=int, default=24)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--profile", choices=("quick", "full"), default="quick")
    ap.add_argument("--out", default="-", help="CSV path, - for stdout")
    args = ap.parse_args()

    base = default_pc_config(args.profile)
    step = (args.hi - args.lo) / max(args.points - 1, 1)
    lines = ["p,r,r_stderr,r_alt,annihilated_fraction,flags"]
    for i in range(args.points):
        p = round(args.lo + i * step, 6)
        pt = ratio_at(dataclasses.replace(base, p=p), args.replicas,
                      master_seed=args.seed, jobs=args.jobs)
        lines.append(f"{p!r},{pt.r.mean!r},{pt.r.stderr!r},{pt.r_alt.mean!r},"
                     f"{pt.annihilated_fraction!r},{';'.join(pt.flags)}")
        print(f"p={p:.3f}  r={pt.r.mean:.4f} +- {pt.r.stderr:.4f}", file=sys.stderr)
    text = "\n".join(lines) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(run())
