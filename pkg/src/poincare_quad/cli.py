"""Command-line driver for the numerical experiments.

Every command writes CSV files plus a gnuplot script next to them::

    poincare-quad basis --measure truncexp --a 0 --b 3 --out out/basis
    poincare-quad quad --measure uniform --n 5 --out out/quad
    poincare-quad wce-curve --measure truncexp --a 1 --b 5 --n-min 5 --n-max 50 --out out/wce
    poincare-quad compare --seed 0 --out out/compare
    poincare-quad random-batch --seed 0 --out out/densities

Exit status: 0 on success, 2 for invalid configuration, 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import kernel as kern
from .errors import ConfigError, NumericalError, PoincareQuadError
from .measures import Measure, load_csv, make_measure
from .quadrature import QuadratureConfig, poincare_quadrature, zeros_of_basis_function
from .quantize import compare_rules, write_comparisons
from .randdens import GPConfig, sample_densities, write_batch
from .spectral import closed_form_trunc_exp, closed_form_uniform, fem_basis, make_basis

log = logging.getLogger("poincare_quad")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
GENERAL_RESIDUAL = 1e-6
UNIFORM_RESIDUAL = 1e-12


def fmt(v) -> str:
    return f"{float(v):.17g}"


@dataclass
class ExperimentConfig:
    command: str
    measure: str = "uniform"
    a: float | None = None
    b: float | None = None
    rate: float = 1.0
    mean: float | None = None
    sd: float = 1.0
    n: int | None = None
    n_min: int = 1
    n_max: int = 20
    m_max: int = 50
    count: int = 100
    seed: int = 0
    jobs: int = 1
    out: Path = Path("out")
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)


def read_config_file(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return values


def _apply_quad_settings(cfg: QuadratureConfig, settings: dict[str, str]) -> None:
    known = {f.name for f in fields(QuadratureConfig)}
    for key, value in settings.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        current = getattr(cfg, key)
        try:
            setattr(cfg, key, type(current)(value))
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc


def build_measure(cfg: ExperimentConfig) -> Measure:
    kind = cfg.measure
    if kind.startswith("csv:"):
        return load_csv(kind[4:])
    defaults = {"uniform": (0.0, 1.0), "truncexp": (1.0, 5.0), "truncnorm": (0.0, 1.0)}
    if kind not in defaults:
        raise ConfigError(f"unknown measure {kind!r}")
    a = defaults[kind][0] if cfg.a is None else cfg.a
    b = defaults[kind][1] if cfg.b is None else cfg.b
    if kind == "truncexp":
        return make_measure(kind, (a, b), rate=cfg.rate)
    if kind == "truncnorm":
        return make_measure(kind, (a, b), mean=0.5 * (a + b) if cfg.mean is None else cfg.mean, sd=cfg.sd)
    return make_measure(kind, (a, b))


def _write_atomic(path: Path, rows, header) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    with os.fdopen(fd, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    os.replace(tmp, path)


def _closed_basis(measure: Measure, m_max: int):
    if measure.kind == "uniform":
        return closed_form_uniform(measure.interval, m_max)
    if measure.kind == "truncexp" and measure.rate == 1.0 and measure.a >= 0:
        return closed_form_trunc_exp(measure.interval, m_max)
    return None


def cmd_basis(cfg: ExperimentConfig) -> int:
    measure = build_measure(cfg)
    fem = fem_basis(measure, max(cfg.quad.mesh_size, 4 * cfg.m_max), cfg.m_max)
    exact = _closed_basis(measure, cfg.m_max)
    rows = []
    for m, lam in enumerate(fem.eigenvalues):
        ref = exact.eigenvalues[m] if exact is not None else float("nan")
        rows.append([m, fmt(lam), fmt(ref)])
    _write_atomic(cfg.out / "eigenvalues.csv", rows, ["m", "lambda_fem", "lambda_exact"])
    k = min(4, cfg.m_max)
    vals = fem.evaluate_all(fem.mesh, k)
    ref = exact.evaluate_all(fem.mesh, k) if exact is not None else np.full_like(vals, np.nan)
    rows = [[fmt(t)] + [fmt(v) for v in vals[:, j]] + [fmt(v) for v in ref[:, j]]
            for j, t in enumerate(fem.mesh)]
    header = ["t"] + [f"phi_{m}" for m in range(k + 1)] + [f"phi_{m}_exact" for m in range(k + 1)]
    _write_atomic(cfg.out / "eigenfunctions.csv", rows, header)
    (cfg.out / "basis.gp").write_text(_BASIS_GP.format(k=k + 1))
    log.info("Poincare constant 1/lambda_1 = %.10g", 1.0 / fem.eigenvalues[1])
    return 0


def _residual_target(measure: Measure) -> float:
    return UNIFORM_RESIDUAL if measure.kind == "uniform" else GENERAL_RESIDUAL


def cmd_quad(cfg: ExperimentConfig) -> int:
    if cfg.n is None:
        raise ConfigError("quad needs --n")
    measure = build_measure(cfg)
    basis = make_basis(measure, 2 * cfg.n, cfg.quad.basis_backend, cfg.quad.mesh_size)
    rule = poincare_quadrature(measure, cfg.n, cfg.quad, basis=basis)
    zeros = zeros_of_basis_function(basis, cfg.n)
    res = rule.diagnostics["moment_residual"]
    path = cfg.out / "rule.csv"
    with open(path, "w", newline="") as fh:
        fh.write(f"# n={rule.n}\n# M={rule.order}\n# moment_residual={fmt(res)}\n")
        fh.write(f"# lp_objective={fmt(rule.diagnostics['lp_objective'])}\n")
        fh.write(f"# backend={basis.backend}\n")
        w = csv.writer(fh)
        w.writerow(["node", "weight", "zero_of_phi_n", "ratio"])
        ratio = rule.n * rule.weights / (measure.interval.length * measure.pdf(rule.nodes))
        for row in zip(rule.nodes, rule.weights, zeros, ratio):
            w.writerow([fmt(v) for v in row])
    t = measure.interval.linspace(1001)
    curve = zip(t, basis.evaluate(cfg.n, t), measure.pdf(t))
    _write_atomic(cfg.out / "curve.csv", ([fmt(v) for v in r] for r in curve), ["t", "phi_n", "pdf"])
    (cfg.out / "quad.gp").write_text(_QUAD_GP.format(n=cfg.n))
    print(f"moment_residual {res:.3e}")
    if res > _residual_target(measure):
        log.error("moment residual %.3g above target %.1g", res, _residual_target(measure))
        return EXIT_NUMERIC
    return 0


def cmd_wce_curve(cfg: ExperimentConfig) -> int:
    measure = build_measure(cfg)
    if measure.kind == "uniform":
        kernel = kern.uniform_kernel(measure.interval)
    elif measure.kind == "truncexp" and measure.rate == 1.0:
        kernel = kern.trunc_exp_kernel(measure.interval)
    else:
        raise ConfigError("wce-curve needs a closed-form kernel (uniform or unit-rate truncexp)")
    if not 1 <= cfg.n_min <= cfg.n_max:
        raise ConfigError("need 1 <= n-min <= n-max")
    rows = []
    for n in range(cfg.n_min, cfg.n_max + 1):
        rule = poincare_quadrature(measure, n, cfg.quad)
        w2 = kern.wce_squared(kernel, rule.nodes, rule.weights)
        if measure.kind == "uniform":
            h = measure.interval.length / (2 * n)
            ref = h / np.tanh(h) - 1.0
        else:
            ref = float("nan")
        rows.append([n, fmt(w2), fmt(ref), fmt(rule.diagnostics["moment_residual"])])
        log.info("n=%d wce^2=%.6g", n, w2)
    _write_atomic(cfg.out / "wce.csv", rows, ["n", "wce2", "wce2_closed_form", "moment_residual"])
    (cfg.out / "wce.gp").write_text(_WCE_GP)
    return 0


def _compare_one(args):
    measure, n, quad = args
    return compare_rules(measure, n, quad)


def cmd_compare(cfg: ExperimentConfig) -> int:
    densities = sample_densities(GPConfig(seed=cfg.seed), cfg.count)
    dens_dir = cfg.out / "densities"
    write_batch(densities, dens_dir)
    summary = []
    for n in (5, 4):
        jobs = [(m, n, cfg.quad) for m in densities]
        if cfg.jobs > 1:
            with ProcessPoolExecutor(cfg.jobs) as pool:
                records = list(pool.map(_compare_one, jobs))
        else:
            records = [_compare_one(j) for j in jobs]
        write_comparisons(list(enumerate(records)), cfg.out / f"comparison_n{n}.csv")
        rows = [[i, fmt(r.distances["poincare"]), fmt(r.distances["gaussian"]), fmt(r.distances["lloyd"])]
                for i, r in enumerate(records)]
        _write_atomic(cfg.out / f"wasserstein_n{n}.csv", rows,
                      ["density_id", "poincare", "gaussian", "lloyd"])
        rows = [[i, k, fmt(x), fmt(q)] for i, r in enumerate(records)
                for k, (x, q) in enumerate(zip(r.poincare.atoms, r.ratios))]
        _write_atomic(cfg.out / f"ratios_n{n}.csv", rows, ["density_id", "index", "node", "ratio"])
        d = np.array([[r.distances[k] for k in ("poincare", "gaussian", "lloyd")] for r in records])
        summary.append((n, float(np.mean(d[:, 0] <= d[:, 1])),
                        int(np.sum((d[:, 2] <= d[:, 0]) & (d[:, 2] <= d[:, 1])))))
    with open(cfg.out / "metadata.txt", "w") as fh:
        fh.write(f"seed={cfg.seed}\ncount={cfg.count}\n")
        fh.write("node-location and ratio tables are written for both n=4 and n=5\n")
        for n, frac, lloyd_ok in summary:
            fh.write(f"n={n}: poincare<=gaussian fraction={frac:.3f}; lloyd best count={lloyd_ok}\n")
    (cfg.out / "compare.gp").write_text(_COMPARE_GP)
    return 0


def cmd_random_batch(cfg: ExperimentConfig) -> int:
    write_batch(sample_densities(GPConfig(seed=cfg.seed), cfg.count), cfg.out)
    (cfg.out / "densities.gp").write_text(_DENSITIES_GP.format(count=cfg.count))
    return 0


COMMANDS = {
    "basis": cmd_basis,
    "quad": cmd_quad,
    "wce-curve": cmd_wce_curve,
    "compare": cmd_compare,
    "random-batch": cmd_random_batch,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="poincare-quad", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--measure", default="uniform",
                   help="uniform | truncexp | truncnorm | csv:<path>")
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--mean", type=float)
    p.add_argument("--sd", type=float, default=1.0)
    p.add_argument("--n", type=int)
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, default=20)
    p.add_argument("--m-max", type=int, default=50)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--grid", type=int, help="LP grid size")
    p.add_argument("--mesh", type=int, help="finite element mesh size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--config", type=Path, help="key=value file (grid_size, lp_tol, refine_tol, "
                                                 "mesh_size, basis_backend)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_config(argv: list[str] | None = None) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    quad = QuadratureConfig()
    if args.config is not None:
        _apply_quad_settings(quad, read_config_file(args.config))
    if args.grid is not None:
        quad.grid_size = args.grid
    if args.mesh is not None:
        quad.mesh_size = args.mesh
    if args.n is not None and args.n < 1:
        raise ConfigError("n must be >= 1")
    cfg = ExperimentConfig(args.command, args.measure, args.a, args.b, args.rate, args.mean, args.sd,
                           args.n, args.n_min, args.n_max, args.m_max, args.count, args.seed,
                           args.jobs, args.out, quad)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return cfg


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
        cfg.out.mkdir(parents=True, exist_ok=True)
        if not os.access(cfg.out, os.W_OK):
            raise ConfigError(f"output directory {cfg.out} is not writable")
        return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, PoincareQuadError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


_BASIS_GP = """\
set datafile separator ','
set key autotitle columnhead
set multiplot layout 1,2
set title 'Poincare basis'
plot for [i=2:{k}+1] 'eigenfunctions.csv' using 1:i with lines dt 2, \\
     for [i={k}+2:2*{k}+1] 'eigenfunctions.csv' using 1:i with lines lc rgb 'gray' notitle
set title 'eigenvalues'
set logscale y
plot 'eigenvalues.csv' using 1:2 with points, '' using 1:3 with lines lc rgb 'gray'
unset multiplot
"""

_QUAD_GP = """\
set datafile separator ','
set key autotitle columnhead
set ytics nomirror
set y2tics
set title 'Poincare quadrature, n = {n}'
plot 'curve.csv' using 1:2 with lines title 'phi_n', \\
     'rule.csv' using 3:(0) with points pt 2 title 'zeros of phi_n', \\
     'rule.csv' using 1:(0) with points pt 7 title 'nodes', \\
     'curve.csv' using 1:3 axes x1y2 with lines lc rgb 'gray' title 'pdf', \\
     'rule.csv' using 1:($2*{n}) axes x1y2 with impulses lc rgb 'red' title 'n w_i'
"""

_WCE_GP = """\
set datafile separator ','
set key autotitle columnhead
set logscale xy
set xlabel 'n'
set ylabel 'wce^2'
plot 'wce.csv' using 1:2 with linespoints, '' using 1:3 with lines lc rgb 'gray'
"""

_COMPARE_GP = """\
set datafile separator ','
set key autotitle columnhead
set multiplot layout 1,2
set title 'Wasserstein distances (n = 5)'
plot 'wasserstein_n5.csv' using 3:2 with points title 'Gaussian vs Poincare', \\
     '' using 4:2 with points title 'optimal vs Poincare', x with lines dt 2 notitle
set title 'n w_i / rho(x_i) (n = 5)'
set style data boxplot
plot 'ratios_n5.csv' using (1+$2):4 notitle
unset multiplot
"""

_DENSITIES_GP = """\
set datafile separator ','
plot for [i=0:{count}-1] sprintf('density_%03d.csv', i) using 1:2 skip 1 with lines notitle
"""


if __name__ == "__main__":
    sys.exit(main())
