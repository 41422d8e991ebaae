"""Random densities on [0, 1]: exp of a Matern-5/2 Gaussian process sample."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ConfigError, FactorizationFailure, RejectionLimit
from .measures import Measure, save_csv, tabulated

MAX_JITTER = 1e-6
MAX_DRAWS = 1000


@dataclass(frozen=True)
class GPConfig:
    lengthscale: float = 0.3
    grid_size: int = 200
    jitter: float = 1e-10
    seed: int = 0
    rejection_floor: float = 0.05

    def __post_init__(self):
        if not self.lengthscale > 0:
            raise ConfigError("lengthscale must be positive")
        if self.jitter < 0:
            raise ConfigError("jitter must be non-negative")
        if self.grid_size < 2:
            raise ConfigError("grid_size must be >= 2")


def matern52(x: ArrayLike, y: ArrayLike, lengthscale: float) -> NDArray:
    if not lengthscale > 0:
        raise ConfigError("lengthscale must be positive")
    r = np.abs(np.asarray(x, float) - np.asarray(y, float)) * (np.sqrt(5.0) / lengthscale)
    return (1.0 + r + r * r / 3.0) * np.exp(-r)


def gp_factor(config: GPConfig) -> tuple[NDArray, NDArray]:
    """Grid on [0, 1] and the lower Cholesky factor of its Matern covariance.

    The diagonal jitter is multiplied by ten until the factorization succeeds
    or exceeds ``MAX_JITTER``.
    """
    grid = np.linspace(0.0, 1.0, config.grid_size)
    cov = matern52(grid[:, None], grid[None, :], config.lengthscale)
    jitter = config.jitter
    while True:
        try:
            return grid, np.linalg.cholesky(cov + jitter * np.eye(grid.size))
        except np.linalg.LinAlgError:
            jitter = max(10 * jitter, 1e-12)
            if jitter > MAX_JITTER:
                raise FactorizationFailure("covariance not factorizable with jitter <= 1e-6")


def sample_gp(config: GPConfig, size: int, rng: np.random.Generator | None = None) -> NDArray:
    """``size`` independent GP paths on the grid, one per row."""
    rng = rng or np.random.default_rng(config.seed)
    _, L = gp_factor(config)
    return rng.standard_normal((size, config.grid_size)) @ L.T


def sample_density(config: GPConfig, rng: np.random.Generator | None = None) -> Measure:
    """Draw ``exp(g)`` normalized on [0, 1], redrawing while its minimum is below the floor."""
    rng = rng or np.random.default_rng(config.seed)
    grid, L = gp_factor(config)
    for _ in range(MAX_DRAWS):
        g = L @ rng.standard_normal(config.grid_size)
        values = np.exp(g - g.max())
        values /= np.trapezoid(values, grid)
        if values.min() >= config.rejection_floor:
            return tabulated(grid, values)
    raise RejectionLimit(f"no acceptable density after {MAX_DRAWS} draws")


def sample_densities(config: GPConfig, count: int) -> list[Measure]:
    """``count`` densities from a single stream seeded by ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    return [sample_density(config, rng) for _ in range(count)]


def write_batch(densities: list[Measure], out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, m in enumerate(densities):
        path = out / f"density_{i:03d}.csv"
        save_csv(m, path)
        paths.append(path)
    return paths
