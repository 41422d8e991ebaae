"""Poincare quadrature: the Gaussian quadrature of the Poincare T-system.

Pipeline: a linear program over measures supported on a fine grid
(:func:`solve_lp`), one-dimensional clustering of its support
(:func:`cluster_support`), and a box-constrained Gauss-Newton polish of
the moment equations (:func:`refine`).
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq, linprog

from .errors import (
    ConfigError, Infeasible, InvalidRule, TooFewSupportPoints, Unbounded,
    WrongOrder, WrongRootCount,
)
from .measures import Measure
from .spectral import DEFAULT_MESH, SpectralBasis, make_basis

log = logging.getLogger(__name__)

SUPPORT_THRESHOLD = 1e-10
EXACTNESS_TOL = 1e-5


@dataclass
class QuadratureConfig:
    grid_size: int = 1000
    lp_tol: float = 1e-9
    refine_tol: float = 1e-12
    max_iter: int = 500
    mesh_size: int = DEFAULT_MESH
    basis_backend: str = "auto"


@dataclass(frozen=True)
class QuadratureRule:
    nodes: NDArray
    weights: NDArray
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def order(self) -> int:
        return 2 * self.n - 1

    def __call__(self, f) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


@dataclass(frozen=True)
class LPProblem:
    """Discretized moment problem on the grid ``z_j = a + j h``.

    Rows of ``A_eq`` are ``phi_i(z_j)`` for ``i = 0 .. 2n-1``; row 0 is the
    sum-to-one constraint since ``phi_0 = 1``.
    """

    grid: NDArray
    c: NDArray
    A_eq: NDArray
    b_eq: NDArray
    n: int


@dataclass(frozen=True)
class LPResult:
    weights: NDArray
    objective: float
    support: NDArray
    points: NDArray
    max_residual: float


def build_lp(basis: SpectralBasis, n: int, grid_size: int) -> LPProblem:
    if n < 1:
        raise ConfigError("n must be >= 1")
    if grid_size < 50 * n:
        raise ConfigError(f"grid of {grid_size} points too coarse for n={n} (need >= {50 * n})")
    if basis.m_max < 2 * n:
        raise ConfigError(f"basis must reach index {2 * n}, has {basis.m_max}")
    z = basis.interval.linspace(grid_size)
    phi = basis.evaluate_all(z, m_max=2 * n)
    rhs = np.zeros(2 * n)
    rhs[0] = 1.0
    return LPProblem(z, phi[2 * n], phi[: 2 * n], rhs, n)


def solve_lp(problem: LPProblem, tol: float = 1e-9) -> LPResult:
    """Minimize ``sum_j w_j phi_2n(z_j)`` over ``w in [0,1]^N`` under the moment constraints.

    Solved with the HiGHS dual simplex so the optimum is a basic solution
    with at most ``2n`` nonzero entries.
    """
    res = linprog(problem.c, A_eq=problem.A_eq, b_eq=problem.b_eq, bounds=(0.0, 1.0),
                  method="highs-ds",
                  options={"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol})
    if res.status == 2:
        raise Infeasible("moment LP is infeasible (grid too coarse or inconsistent basis)")
    if res.status == 3:
        raise Unbounded("moment LP reported unbounded despite box constraints")
    if res.status != 0:
        raise Infeasible(f"LP solver failed: {res.message}")
    w = np.clip(res.x, 0.0, 1.0)
    resid = float(np.max(np.abs(problem.A_eq @ w - problem.b_eq)))
    support = np.flatnonzero(w > SUPPORT_THRESHOLD)
    return LPResult(w, float(res.fun), support, problem.grid[support], resid)


def cluster_support(points: ArrayLike, weights: ArrayLike, n: int) -> tuple[NDArray, NDArray]:
    """Merge a weighted 1-d support into ``n`` nodes.

    Clusters minimize the weighted within-cluster sum of squares; on a line
    the optimal partition is contiguous, so it is found exactly by dynamic
    programming over the sorted points.  Each node is the weighted mean of
    its cluster and carries the cluster's total weight.
    """
    x = np.asarray(points, float)
    w = np.asarray(weights, float)
    keep = w > SUPPORT_THRESHOLD
    x, w = x[keep], w[keep]
    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order]
    s = x.size
    if s < n:
        raise TooFewSupportPoints(f"{s} support points cannot form {n} clusters")

    cw = np.concatenate([[0.0], np.cumsum(w)])
    cwx = np.concatenate([[0.0], np.cumsum(w * x)])
    cwxx = np.concatenate([[0.0], np.cumsum(w * x * x)])

    def cost(i, j):  # points i..j-1
        mass = cw[j] - cw[i]
        m1 = cwx[j] - cwx[i]
        return np.maximum(cwxx[j] - cwxx[i] - m1 * m1 / mass, 0.0)

    inf = np.inf
    D = np.full((n + 1, s + 1), inf)
    arg = np.zeros((n + 1, s + 1), dtype=int)
    D[0, 0] = 0.0
    for k in range(1, n + 1):
        for j in range(k, s - (n - k) + 1):
            i = np.arange(k - 1, j)
            cand = D[k - 1, i] + cost(i, j)
            best = int(np.argmin(cand))  # lowest index wins ties
            D[k, j] = cand[best]
            arg[k, j] = i[best]
    bounds = [s]
    for k in range(n, 0, -1):
        bounds.append(arg[k, bounds[-1]])
    bounds = bounds[::-1]
    nodes = np.empty(n)
    wts = np.empty(n)
    for k in range(n):
        lo, hi = bounds[k], bounds[k + 1]
        wts[k] = w[lo:hi].sum()
        nodes[k] = np.dot(w[lo:hi], x[lo:hi]) / wts[k]
    return nodes, wts


def moment_residuals(basis: SpectralBasis, nodes: ArrayLike, weights: ArrayLike,
                     order: int | None = None) -> NDArray:
    """``delta_{i0} - sum_j w_j phi_i(x_j)`` for ``i = 0 .. order``."""
    nodes = np.asarray(nodes, float)
    order = 2 * len(nodes) - 1 if order is None else order
    r = -basis.evaluate_all(nodes, m_max=order) @ np.asarray(weights, float)
    r[0] += 1.0
    return r


def refine(nodes: ArrayLike, weights: ArrayLike, basis: SpectralBasis, n: int | None = None,
           tol: float = 1e-12, max_iter: int = 500) -> QuadratureRule:
    """Projected Gauss-Newton on the ``2n`` moment equations over ``[a,b]^n x [0,1]^n``.

    Stops when the sum of squared residuals drops below ``tol``, when the
    relative step falls below ``tol`` or after ``max_iter`` iterations.  The
    best iterate is always returned; ``diagnostics["converged"]`` flags the
    last case.
    """
    x = np.array(nodes, float)
    w = np.array(weights, float)
    n = len(x) if n is None else n
    if len(x) != n or len(w) != n:
        raise ConfigError("need exactly n nodes and n weights")
    a, b = basis.interval.a, basis.interval.b
    M = 2 * n - 1
    lo = np.concatenate([np.full(n, a), np.zeros(n)])
    hi = np.concatenate([np.full(n, b), np.ones(n)])

    def residual(v):
        return moment_residuals(basis, v[:n], v[n:], M)

    def step(v, r, f):
        phi = basis.evaluate_all(v[:n], m_max=M)
        dphi = basis.derivative_all(v[:n], m_max=M)
        J = -np.hstack([dphi * v[n:], phi])
        direction = np.linalg.lstsq(J, -r, rcond=None)[0]
        t = 1.0
        while True:
            cand = np.clip(v + t * direction, lo, hi)
            rc = residual(cand)
            fc = float(rc @ rc)
            if fc < f or t < 1e-10:
                break
            t *= 0.5
        return cand, rc, fc, np.linalg.norm(cand - v) / max(np.linalg.norm(v), 1.0)

    v = np.clip(np.concatenate([x, w]), lo, hi)
    r = residual(v)
    f = float(r @ r)
    iterations = 0
    converged = f < tol
    while not converged and iterations < max_iter:
        iterations += 1
        cand, rc, fc, rel_step = step(v, r, f)
        if fc < f:
            v, r, f = cand, rc, fc
        converged = f < tol or rel_step < tol
    # A few extra Newton steps take the residual from tol to rounding level.
    for _ in range(4):
        if f == 0.0:
            break
        cand, rc, fc, _ = step(v, r, f)
        if not fc < 0.5 * f:
            break
        v, r, f = cand, rc, fc
    if not converged:
        warnings.warn(f"refinement stopped after {iterations} iterations at objective {f:.3g}",
                      RuntimeWarning, stacklevel=2)
    x, w = v[:n], v[n:]
    if np.any(np.diff(x) <= 0):
        raise WrongOrder("refinement moved nodes across each other")
    return QuadratureRule(x, w, {"moment_residual": f, "iterations": iterations,
                                 "converged": converged})


def validate(rule: QuadratureRule, basis: SpectralBasis, tol: float = EXACTNESS_TOL) -> None:
    a, b = basis.interval.a, basis.interval.b
    x, w = rule.nodes, rule.weights
    if abs(w.sum() - 1.0) > 1e-8:
        raise InvalidRule(f"weights sum to {w.sum()!r}")
    if np.any(w <= 0) or np.any(w > 1):
        raise InvalidRule("weights must lie in (0, 1]")
    if x[0] <= a or x[-1] >= b:
        raise InvalidRule("nodes must lie in the open interval")
    if np.any(np.diff(x) <= 1e-10 * (b - a)):
        raise InvalidRule("nodes must be strictly increasing and separated")
    worst = float(np.max(np.abs(moment_residuals(basis, x, w))))
    if worst > tol:
        raise InvalidRule(f"moment residual {worst:.3g} exceeds {tol:g}")


def poincare_quadrature(measure: Measure, n: int, config: QuadratureConfig | None = None,
                        basis: SpectralBasis | None = None) -> QuadratureRule:
    """n-node quadrature exact for ``phi_0 .. phi_{2n-1}`` with positive weights.

    The basis is built from ``config`` unless one is passed in.  The LP grid
    is enlarged to ``50 n`` points when ``config.grid_size`` is smaller.
    """
    config = config or QuadratureConfig()
    if n < 1:
        raise ConfigError("n must be >= 1")
    if basis is None:
        basis = make_basis(measure, 2 * n, config.basis_backend, config.mesh_size)
    grid_size = max(config.grid_size, 50 * n)
    lp = solve_lp(build_lp(basis, n, grid_size), config.lp_tol)
    x0, w0 = cluster_support(lp.points, lp.weights[lp.support], n)
    rule = refine(x0, w0, basis, n, config.refine_tol, config.max_iter)
    rule.diagnostics.update(lp_objective=lp.objective, lp_residual=lp.max_residual,
                            support_size=int(lp.support.size), cluster_count=n,
                            grid_size=grid_size, backend=basis.backend)
    validate(rule, basis)
    return rule


def zeros_of_basis_function(basis: SpectralBasis, n: int) -> NDArray:
    """The ``n`` roots of ``phi_n`` in ``(a, b)``, bracketed on a ``100 n`` scan."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    t = basis.interval.linspace(100 * n + 1)
    v = basis.evaluate(n, t)
    roots = []
    for j in np.flatnonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0):
        roots.append(brentq(lambda s: basis.evaluate(n, s)[0], t[j], t[j + 1], xtol=1e-13, rtol=1e-15))
    roots.extend(t[1:-1][v[1:-1] == 0])
    if len(roots) != n:
        raise WrongRootCount(f"phi_{n} has {len(roots)} sign changes, expected {n}")
    return np.sort(np.array(roots))


def weight_density_ratio(rule: QuadratureRule, measure: Measure) -> NDArray:
    """``n w_i / ((b - a) rho(x_i))``, close to one for Poincare rules."""
    return rule.n * rule.weights / (measure.interval.length * measure.pdf(rule.nodes))


__all__ = [
    "QuadratureConfig", "QuadratureRule", "LPProblem", "LPResult", "build_lp", "solve_lp",
    "cluster_support", "moment_residuals", "refine", "validate", "poincare_quadrature",
    "zeros_of_basis_function", "weight_density_ratio",
]
