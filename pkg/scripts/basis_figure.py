"""Poincare basis and FEM eigenvalues for the uniform and truncated exponential laws."""

import argparse
import sys

from poincare_quad.cli import main

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--out", default="out/basis")
p.add_argument("--m-max", default="50")
args = p.parse_args()

runs = {
    "uniform": ["--measure", "uniform"],
    "truncexp_0_3": ["--measure", "truncexp", "--a", "0", "--b", "3"],
    "truncexp_1_5": ["--measure", "truncexp", "--a", "1", "--b", "5"],
}
for name, extra in runs.items():
    code = main(["basis", *extra, "--m-max", args.m_max, "--out", f"{args.out}/{name}", "-v"])
    if code:
        sys.exit(code)
