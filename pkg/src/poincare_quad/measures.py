"""Probability measures on a bounded interval with a strictly positive density.

Supported families are the uniform law, the truncated exponential, the
truncated normal and tabulated densities (linear interpolation between
evenly spaced samples).  All densities are normalized at construction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import ndtr

from .errors import BadInterval, ConfigError, NonPositiveDensity

Kind = Literal["uniform", "truncexp", "truncnorm", "tabulated"]
Rule = Literal["trapezoid", "simpson", "gauss_legendre_composite"]

CHECK_GRID = 10_000
_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise BadInterval(f"interval endpoints must be finite, got ({self.a}, {self.b})")
        if not self.a < self.b:
            raise BadInterval(f"need a < b, got ({self.a}, {self.b})")

    @property
    def length(self) -> float:
        return self.b - self.a

    def linspace(self, num: int) -> NDArray:
        return np.linspace(self.a, self.b, num)


@dataclass(frozen=True, eq=False)
class Measure:
    """A probability measure ``rho(t) dt`` on ``[a, b]``.

    Use :func:`make_measure` or the named constructors rather than building
    this directly; they validate positivity and normalization.
    """

    interval: Interval
    kind: Kind
    rate: float | None = None
    mean: float | None = None
    sd: float | None = None
    grid: NDArray | None = field(default=None, repr=False)
    values: NDArray | None = field(default=None, repr=False)

    @property
    def a(self) -> float:
        return self.interval.a

    @property
    def b(self) -> float:
        return self.interval.b

    def pdf(self, t: ArrayLike) -> NDArray:
        t = np.asarray(t, dtype=float)
        a, b = self.a, self.b
        if self.kind == "uniform":
            return np.full_like(t, 1.0 / (b - a))
        if self.kind == "truncexp":
            r = self.rate
            return r * np.exp(-r * (t - a)) / -np.expm1(-r * (b - a))
        if self.kind == "truncnorm":
            z = (t - self.mean) / self.sd
            mass = ndtr((b - self.mean) / self.sd) - ndtr((a - self.mean) / self.sd)
            return np.exp(-0.5 * z * z) / (np.sqrt(2 * np.pi) * self.sd * mass)
        return np.interp(t, self.grid, self.values)

    def potential(self, t: ArrayLike) -> NDArray:
        """``V = -log(rho)``."""
        return -np.log(self.pdf(t))

    def potential_derivative(self, t: ArrayLike) -> NDArray:
        t = np.asarray(t, dtype=float)
        if self.kind == "uniform":
            return np.zeros_like(t)
        if self.kind == "truncexp":
            return np.full_like(t, self.rate)
        if self.kind == "truncnorm":
            return (t - self.mean) / self.sd**2
        # Tabulated: finite differences of V on the tabulation grid.
        dv = np.gradient(-np.log(self.values), self.grid)
        return np.interp(t, self.grid, dv)

    @property
    def breakpoints(self) -> NDArray:
        """Points where the density may fail to be smooth."""
        if self.kind == "tabulated":
            return self.grid
        return np.array([self.a, self.b])

    def integrate(self, f: Callable[[NDArray], ArrayLike], rule: Rule = "gauss_legendre_composite",
                  n_panels: int = 512) -> float:
        return integrate(self, f, rule, n_panels)

    # --- cumulative quantities -------------------------------------------

    @cached_property
    def _table(self) -> tuple[NDArray, NDArray]:
        # Exact-at-node cumulative moments of order 0, 1, 2 on a fine grid.
        z = _panel_edges(self, 8192)
        lo, hi = z[:-1], z[1:]
        half = 0.5 * (hi - lo)
        t = (lo + hi)[:, None] * 0.5 + half[:, None] * _GL_X[None, :]
        w = half[:, None] * _GL_W[None, :] * self.pdf(t)
        cells = np.stack([w.sum(1), (w * t).sum(1), (w * t * t).sum(1)])
        cum = np.concatenate([np.zeros((3, 1)), np.cumsum(cells, axis=1)], axis=1)
        return z, cum

    def partial_moment(self, k: int, t: ArrayLike) -> NDArray:
        """``int_a^t s^k rho(s) ds`` for k in {0, 1, 2}."""
        z, cum = self._table
        t = np.clip(np.asarray(t, dtype=float), self.a, self.b)
        j = np.clip(np.searchsorted(z, t, side="right") - 1, 0, len(z) - 2)
        lo = z[j]
        half = 0.5 * (t - lo)
        s = (lo + t)[..., None] * 0.5 + half[..., None] * _GL_X
        part = (half[..., None] * _GL_W * self.pdf(s) * s**k).sum(-1)
        return cum[k, j] + part

    def cdf(self, t: ArrayLike) -> NDArray:
        return self.partial_moment(0, t) / self._table[1][0, -1]

    def quantile(self, p: ArrayLike) -> NDArray:
        """Inverse cdf, polished by Newton steps on the interpolated table."""
        z, cum = self._table
        p = np.asarray(p, dtype=float)
        x = np.interp(p, cum[0] / cum[0, -1], z)
        for _ in range(3):
            x = np.clip(x - (self.cdf(x) - p) / self.pdf(x), self.a, self.b)
        return x

    def first_moment(self) -> float:
        return float(self._table[1][1, -1])


def _panel_edges(measure: Measure, n_panels: int) -> NDArray:
    """Evenly spaced panel edges refined so every breakpoint is an edge."""
    edges = np.union1d(measure.interval.linspace(n_panels + 1), measure.breakpoints)
    return edges


def integrate(measure: Measure, f: Callable[[NDArray], ArrayLike],
              rule: Rule = "gauss_legendre_composite", n_panels: int = 512) -> float:
    """Approximate ``int f(t) rho(t) dt`` with a composite rule.

    For tabulated densities the breakpoints of the interpolant are added to
    the panel edges so that each panel sees a smooth integrand.
    """
    if n_panels < 1:
        raise ConfigError("n_panels must be >= 1")

    def g(t):
        return np.asarray(f(t), dtype=float) * measure.pdf(t)

    edges = _panel_edges(measure, n_panels)
    lo, hi = edges[:-1], edges[1:]
    if rule == "trapezoid":
        ge = g(edges)
        return float(np.sum((hi - lo) * 0.5 * (ge[:-1] + ge[1:])))
    if rule == "simpson":
        mid = 0.5 * (lo + hi)
        ge = g(edges)
        return float(np.sum((hi - lo) / 6.0 * (ge[:-1] + 4 * g(mid) + ge[1:])))
    if rule == "gauss_legendre_composite":
        half = 0.5 * (hi - lo)
        t = 0.5 * (lo + hi)[:, None] + half[:, None] * _GL_X[None, :]
        return float(np.sum(half[:, None] * _GL_W[None, :] * g(t)))
    raise ConfigError(f"unknown integration rule {rule!r}")


def cdf_and_quantile(measure: Measure, grid_size: int) -> tuple[NDArray, NDArray, NDArray, NDArray]:
    """Tabulate the cdf on an even z-grid and its inverse on an even p-grid.

    Returns ``(z, F(z), p, F^{-1}(p))``.
    """
    if grid_size < 2:
        raise ConfigError("grid_size must be >= 2")
    z = measure.interval.linspace(grid_size)
    F = measure.cdf(z)
    F[0], F[-1] = 0.0, 1.0
    F = np.maximum.accumulate(F)
    p = np.linspace(0.0, 1.0, grid_size)
    q = np.interp(p, F, z)
    return z, F, p, q


def _check(measure: Measure) -> Measure:
    t = measure.interval.linspace(CHECK_GRID)
    rho = measure.pdf(t)
    if not np.all(np.isfinite(rho)) or rho.min() <= 0:
        raise NonPositiveDensity(f"density minimum {rho.min():.3g} on the check grid is not positive")
    mass = integrate(measure, lambda s: np.ones_like(s))
    if abs(mass - 1.0) > 1e-8:
        raise NonPositiveDensity(f"density integrates to {mass!r}, not 1")
    return measure


def uniform(a: float = 0.0, b: float = 1.0) -> Measure:
    return _check(Measure(Interval(a, b), "uniform"))


def truncated_exponential(a: float, b: float, rate: float = 1.0) -> Measure:
    if not rate > 0:
        raise ConfigError("rate must be positive")
    return _check(Measure(Interval(a, b), "truncexp", rate=float(rate)))


def truncated_normal(a: float, b: float, mean: float = 0.0, sd: float = 1.0) -> Measure:
    if not sd > 0:
        raise ConfigError("sd must be positive")
    return _check(Measure(Interval(a, b), "truncnorm", mean=float(mean), sd=float(sd)))


def tabulated(grid: ArrayLike, values: ArrayLike) -> Measure:
    """Density given by samples on an evenly spaced grid, normalized by the trapezoid rule.

    The trapezoid rule is exact for the piecewise-linear interpolant, so the
    stored values integrate to one.
    """
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
        raise ConfigError("grid and values must be 1-d arrays of equal length >= 2")
    interval = Interval(float(grid[0]), float(grid[-1]))
    steps = np.diff(grid)
    if not np.allclose(steps, steps[0], rtol=1e-8, atol=0):
        raise ConfigError("tabulation grid must be evenly spaced")
    if not np.all(np.isfinite(values)) or values.min() <= 0:
        raise NonPositiveDensity("tabulated density must be strictly positive")
    mass = np.trapezoid(values, grid)
    values = values / mass
    grid.setflags(write=False)
    values.setflags(write=False)
    return _check(Measure(interval, "tabulated", grid=grid, values=values))


def make_measure(kind: Kind, interval: Interval | tuple[float, float], **params) -> Measure:
    """Build a validated measure of the given family on ``interval``."""
    if not isinstance(interval, Interval):
        interval = Interval(*map(float, interval))
    a, b = interval.a, interval.b
    if kind == "uniform":
        return uniform(a, b)
    if kind == "truncexp":
        return truncated_exponential(a, b, params.get("rate", 1.0))
    if kind == "truncnorm":
        return truncated_normal(a, b, params.get("mean", 0.5 * (a + b)), params.get("sd", 1.0))
    if kind == "tabulated":
        values = np.asarray(params["values"], dtype=float)
        return tabulated(interval.linspace(values.size), values)
    raise ConfigError(f"unknown measure kind {kind!r}")


def load_csv(path: str | Path) -> Measure:
    """Read a two-column ``t,rho`` CSV (with header) into a tabulated measure."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 2:
        raise ConfigError(f"{path}: expected two columns (t, rho)")
    return tabulated(data[:, 0], data[:, 1])


def save_csv(measure: Measure, path: str | Path, num: int = 1001) -> None:
    """Write ``t,rho`` samples; tabulated measures keep their own grid."""
    t = measure.grid if measure.kind == "tabulated" else measure.interval.linspace(num)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "rho"])
        for ti, ri in zip(t, measure.pdf(t)):
            writer.writerow([f"{ti:.17g}", f"{ri:.17g}"])
