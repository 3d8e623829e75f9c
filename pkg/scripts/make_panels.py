#!/usr/bin/env python3
"""Regenerate the three space-time panels (p = 0.6, 0.7, 0.8).

Wraps ``dlacs plot``.  At the default full scale each panel is a
2000x2000 raster of the discrete frozen-opponent dynamics; ``--quick``
drops to 300x300 for a fast look.
"""

import argparse
import os
import sys
import tempfile

from dlacs.cli import main as dlacs_main

QUICK_CONFIG = """\
graph=cycle n=300 p=0.6
lambda_B=0 mode=discrete steps=300
p_values=0.6,0.7,0.8
"""


def run() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="figures", help="output directory")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--quick", action="store_true", help="300x300 panels instead of 2000x2000")
    args = ap.parse_args()

    argv = ["plot", "--seed", str(args.seed), "--out", args.out]
    if not args.quick:
        return dlacs_main(argv)
    with tempfile.NamedTemporaryFile("w", suffix=".cfg", delete=False) as f:
        f.write(QUICK_CONFIG)
        path = f.name
    try:
        return dlacs_main(argv + ["--config", path])
    finally:
        os.unlink(path)


if __name__ == "__main__":
    sys.exit(run())
