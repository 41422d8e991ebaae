"""Poincare rules with phi_n and its zeros, for a few densities.

The last run uses one random density drawn with the given seed.
"""

import argparse
import sys
from pathlib import Path

from poincare_quad.cli import main

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--out", default="out/quad")
p.add_argument("--seed", default="0")
args = p.parse_args()
out = Path(args.out)

main(["random-batch", "--count", "1", "--seed", args.seed, "--out", str(out / "density")])
runs = [
    ("uniform_n5", ["--measure", "uniform", "--n", "5"]),
    ("truncexp_1_5_n8", ["--measure", "truncexp", "--a", "1", "--b", "5", "--n", "8"]),
    ("truncexp_0_3_n6", ["--measure", "truncexp", "--a", "0", "--b", "3", "--n", "6"]),
    ("random_n5", ["--measure", f"csv:{out / 'density' / 'density_000.csv'}", "--n", "5"]),
]
for name, extra in runs:
    code = main(["quad", *extra, "--out", str(out / name)])
    if code:
        sys.exit(code)
