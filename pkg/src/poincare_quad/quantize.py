"""Baselines for comparing Poincare rules as quantizers of mu.

Classical Gaussian quadrature (polynomial exactness), the 2-Wasserstein
optimal quantizer from Lloyd's algorithm, and the 2-Wasserstein distance
between mu and a discrete measure.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import eigh_tridiagonal

from .errors import ConfigError, MomentBreakdown
from .measures import Measure
from .quadrature import QuadratureConfig, poincare_quadrature, zeros_of_basis_function
from .spectral import make_basis

log = logging.getLogger(__name__)

STIELTJES_POINTS = 10_000
P_GRID = 10_000
_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)


@dataclass(frozen=True)
class DiscreteMeasure:
    atoms: NDArray
    masses: NDArray
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        atoms = np.asarray(self.atoms, float)
        masses = np.asarray(self.masses, float)
        if atoms.shape != masses.shape or atoms.ndim != 1:
            raise ConfigError("atoms and masses must be 1-d arrays of equal length")
        if np.any(np.diff(atoms) <= 0):
            raise ConfigError("atoms must be strictly increasing")
        if np.any(masses <= 0) or abs(masses.sum() - 1.0) > 1e-10:
            raise ConfigError("masses must be positive and sum to 1")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "masses", masses)

    def quantile(self, p: ArrayLike) -> NDArray:
        """Left-continuous inverse of the step cdf: smallest atom with ``G(atom) >= p``."""
        cum = np.cumsum(self.masses)
        idx = np.searchsorted(cum, np.asarray(p, float), side="left")
        return self.atoms[np.minimum(idx, self.atoms.size - 1)]


def _discretize(measure: Measure, points: int) -> tuple[NDArray, NDArray]:
    panels = points // 4
    edges = measure.interval.linspace(panels + 1)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    t = (0.5 * (lo + hi))[:, None] + half[:, None] * _GL_X
    w = half[:, None] * _GL_W * measure.pdf(t)
    return t.ravel(), w.ravel() / w.sum()


def recurrence_coefficients(measure: Measure, n: int,
                            points: int = STIELTJES_POINTS) -> tuple[NDArray, NDArray]:
    """Three-term recurrence ``(alpha_k, beta_k)``, ``k < n``, by the discretized Stieltjes procedure.

    Computed in the variable mapped onto ``[-1, 1]``; ``beta_0`` is the total mass.
    """
    t, w = _discretize(measure, points)
    a, b = measure.a, measure.b
    s = (2 * t - (a + b)) / (b - a)
    alpha = np.zeros(n)
    beta = np.zeros(n)
    p_prev = np.zeros_like(s)
    p = np.ones_like(s)
    norm_prev = 1.0
    beta[0] = w.sum()
    for k in range(n):
        norm = np.dot(w, p * p)
        if not norm > 0:
            raise MomentBreakdown(f"recurrence lost positivity at degree {k}")
        alpha[k] = np.dot(w, s * p * p) / norm
        if k > 0:
            beta[k] = norm / norm_prev
            if not beta[k] > 0:
                raise MomentBreakdown(f"recurrence lost positivity at degree {k}")
        p, p_prev = (s - alpha[k]) * p - (beta[k] if k > 0 else 0.0) * p_prev, p
        norm_prev = norm
    return alpha, beta


def gaussian_quadrature(measure: Measure, n: int, points: int = STIELTJES_POINTS) -> DiscreteMeasure:
    """n-point Gaussian rule for mu from the eigendecomposition of its Jacobi matrix."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    alpha, beta = recurrence_coefficients(measure, n, points)
    evals, evecs = eigh_tridiagonal(alpha, np.sqrt(beta[1:]))
    a, b = measure.a, measure.b
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * evals
    weights = beta[0] * evecs[0] ** 2
    return DiscreteMeasure(nodes, weights / weights.sum())


def _cell_stats(measure: Measure, edges: NDArray) -> tuple[NDArray, NDArray, NDArray]:
    m = [np.diff(measure.partial_moment(k, edges)) for k in range(3)]
    return m[0], m[1], m[2]


def quantization_energy(measure: Measure, atoms: ArrayLike) -> float:
    """``int min_i (t - x_i)^2 dmu(t)`` with Voronoi cells of the sorted atoms."""
    x = np.sort(np.asarray(atoms, float))
    edges = np.concatenate([[measure.a], 0.5 * (x[1:] + x[:-1]), [measure.b]])
    m0, m1, m2 = _cell_stats(measure, edges)
    return float(np.sum(m2 - 2 * x * m1 + x * x * m0))


def lloyd_quantizer(measure: Measure, n: int, tol: float = 1e-10, max_iter: int = 10_000,
                    init: ArrayLike | None = None) -> DiscreteMeasure:
    """Fixed point of Lloyd's algorithm, started at the quantiles ``(i - 1/2)/n``.

    ``info`` carries the energy history, iteration count and a convergence flag.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    a, b = measure.a, measure.b
    x = measure.quantile((np.arange(1, n + 1) - 0.5) / n) if init is None else np.sort(np.asarray(init, float))
    energies = []
    converged = False
    for it in range(1, max_iter + 1):
        edges = np.concatenate([[a], 0.5 * (x[1:] + x[:-1]), [b]])
        m0, m1, m2 = _cell_stats(measure, edges)
        energies.append(float(np.sum(m2 - 2 * x * m1 + x * x * m0)))
        new = m1 / m0
        move = np.max(np.abs(new - x))
        x = new
        if move < tol * (b - a):
            converged = True
            break
    if not converged:
        log.warning("Lloyd iteration did not converge in %d steps", max_iter)
    edges = np.concatenate([[a], 0.5 * (x[1:] + x[:-1]), [b]])
    masses = np.diff(measure.cdf(edges))
    return DiscreteMeasure(x, masses / masses.sum(),
                           {"iterations": it, "converged": converged, "energies": energies})


def wasserstein(measure: Measure, discrete: DiscreteMeasure, p_grid: int = P_GRID) -> float:
    """2-Wasserstein distance via the midpoint rule on ``p_grid`` quantile levels."""
    if p_grid < 100:
        raise ConfigError("p_grid must be >= 100")
    p = (np.arange(p_grid) + 0.5) / p_grid
    diff = measure.quantile(p) - discrete.quantile(p)
    return float(np.sqrt(np.mean(diff * diff)))


def wasserstein_tables(F_inv: ArrayLike, G_inv: ArrayLike) -> float:
    """Distance between two quantile tables sampled on the same midpoint p-grid."""
    d = np.asarray(F_inv, float) - np.asarray(G_inv, float)
    return float(np.sqrt(np.mean(d * d)))


@dataclass
class ComparisonRecord:
    n: int
    poincare: DiscreteMeasure
    gaussian: DiscreteMeasure
    lloyd: DiscreteMeasure
    zeros: NDArray
    distances: dict[str, float]
    ratios: NDArray
    moment_residual: float

    def rows(self, density_id: int | str = 0):
        """Tidy rows ``(density_id, rule, index, node, weight, wasserstein)``."""
        for name in ("poincare", "gaussian", "lloyd"):
            rule = getattr(self, name)
            for i, (x, w) in enumerate(zip(rule.atoms, rule.masses)):
                yield density_id, name, i, x, w, self.distances[name]
        for i, z in enumerate(self.zeros):
            yield density_id, "zeros", i, z, float("nan"), float("nan")


def compare_rules(measure: Measure, n: int, config: QuadratureConfig | None = None,
                  p_grid: int = P_GRID) -> ComparisonRecord:
    """Poincare, Gaussian and Lloyd rules for ``mu`` with their distances to ``mu``."""
    config = config or QuadratureConfig()
    basis = make_basis(measure, 2 * n, config.basis_backend, config.mesh_size)
    rule = poincare_quadrature(measure, n, config, basis=basis)
    poinc = DiscreteMeasure(rule.nodes, rule.weights / rule.weights.sum())
    gauss = gaussian_quadrature(measure, n)
    lloyd = lloyd_quantizer(measure, n)
    dist = {name: wasserstein(measure, d, p_grid)
            for name, d in (("poincare", poinc), ("gaussian", gauss), ("lloyd", lloyd))}
    ratios = n * rule.weights / (measure.interval.length * measure.pdf(rule.nodes))
    return ComparisonRecord(n, poinc, gauss, lloyd, zeros_of_basis_function(basis, n), dist,
                            ratios, rule.diagnostics["moment_residual"])


def write_comparisons(records: list[tuple[int, ComparisonRecord]], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["density_id", "rule", "index", "node", "weight", "wasserstein"])
        for density_id, rec in records:
            for row in rec.rows(density_id):
                w.writerow([row[0], row[1], row[2]] + [f"{v:.17g}" for v in row[3:]])
