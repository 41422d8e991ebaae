"""Poincare, Gaussian and Lloyd rules on random GP densities (n = 5 and n = 4)."""

import argparse
import sys

from poincare_quad.cli import main

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--out", default="out/compare")
p.add_argument("--seed", default="2024")
p.add_argument("--count", default="100")
p.add_argument("--jobs", default="1")
args = p.parse_args()

code = main(["compare", "--seed", args.seed, "--count", args.count, "--jobs", args.jobs,
             "--out", args.out, "-v"])
if code == 0:
    print(open(f"{args.out}/metadata.txt").read())
sys.exit(code)
