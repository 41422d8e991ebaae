"""Worst-case error of Poincare rules against n, with the fitted log-log slope."""

import argparse
import csv
from pathlib import Path

import numpy as np

from poincare_quad.cli import main

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--out", default="out/wce")
p.add_argument("--n-max", default="50")
args = p.parse_args()

for name, extra in [("uniform", ["--measure", "uniform"]),
                    ("truncexp_1_5", ["--measure", "truncexp", "--a", "1", "--b", "5"])]:
    out = Path(args.out) / name
    if main(["wce-curve", *extra, "--n-min", "1", "--n-max", args.n_max, "--out", str(out)]):
        raise SystemExit(3)
    with open(out / "wce.csv") as fh:
        rows = [(int(r["n"]), float(r["wce2"])) for r in csv.DictReader(fh)]
    n, w2 = np.array([r for r in rows if r[0] >= 5]).T
    slope = np.polyfit(np.log(n), np.log(w2), 1)[0]
    print(f"{name}: wce^2 slope over n in [5, {args.n_max}] = {slope:.3f}")
