"""Reproducing kernel of H1(mu) and the kernel-quadrature quantities built on it.

Two representations are provided: the closed single-pair (Green function)
form ``K(x, y) = psi(min) chi(max) / C`` for the uniform and unit-rate
truncated exponential laws, and the truncated Mercer sum
``K_M = sum_{m <= M} phi_m(x) phi_m(y) / (1 + lambda_m)`` for any basis.

For both, ``int K(x, y) dmu(y) = 1``, so the kernel mean embedding is the
constant 1 and its integral is 1.  Worst-case errors below rely on this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from .errors import (
    ConfigError, DuplicateNodes, InsufficientBasis, SingularGram, TooManyNodesForTruncation,
)
from .measures import Interval, Measure, truncated_exponential, uniform
from .spectral import SpectralBasis

WCE_CLAMP = 1e-12


@dataclass(frozen=True, eq=False)
class ClosedFormKernel:
    kind: Literal["uniform", "truncexp"]
    measure: Measure
    psi: Callable[[NDArray], NDArray]
    chi: Callable[[NDArray], NDArray]
    normalizer: float

    @property
    def interval(self) -> Interval:
        return self.measure.interval

    def __call__(self, x: ArrayLike, y: ArrayLike) -> NDArray:
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return self.psi(np.minimum(x, y)) * self.chi(np.maximum(x, y)) / self.normalizer

    def matrix(self, X: ArrayLike) -> NDArray:
        X = np.asarray(X, float)
        return self(X[:, None], X[None, :])


@dataclass(frozen=True, eq=False)
class MercerKernel:
    basis: SpectralBasis
    order: int

    def __post_init__(self):
        if not 0 <= self.order <= self.basis.m_max:
            raise InsufficientBasis(f"basis has indices up to {self.basis.m_max}, need {self.order}")

    @property
    def measure(self) -> Measure:
        return self.basis.measure

    @property
    def coefficients(self) -> NDArray:
        return 1.0 / (1.0 + self.basis.eigenvalues[: self.order + 1])

    def __call__(self, x: ArrayLike, y: ArrayLike) -> NDArray:
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        px = self.basis.evaluate_all(x.ravel(), self.order)
        py = self.basis.evaluate_all(y.ravel(), self.order)
        return (self.coefficients @ (px * py)).reshape(x.shape)

    def matrix(self, X: ArrayLike) -> NDArray:
        phi = self.basis.evaluate_all(np.asarray(X, float), self.order)
        return phi.T @ (self.coefficients[:, None] * phi)


Kernel = ClosedFormKernel | MercerKernel


def uniform_kernel(interval: Interval | tuple[float, float]) -> ClosedFormKernel:
    """``K(x,y) = (b-a)/sinh(b-a) cosh(min(x,y)-a) cosh(b-max(x,y))``."""
    if not isinstance(interval, Interval):
        interval = Interval(*interval)
    a, b = interval.a, interval.b
    return ClosedFormKernel(
        "uniform", uniform(a, b),
        psi=lambda x: np.cosh(x - a),
        chi=lambda x: np.cosh(b - x),
        normalizer=math.sinh(b - a) / (b - a),
    )


def trunc_exp_kernel(interval: Interval | tuple[float, float]) -> ClosedFormKernel:
    """Kernel for the unit-rate exponential truncated on ``[a, b]`` with ``a >= 0``.

    ``psi`` and ``chi`` span the solutions of ``f'' - f' - f = 0`` with
    ``psi'(a) = 0`` and ``chi'(b) = 0``.
    """
    if not isinstance(interval, Interval):
        interval = Interval(*interval)
    a, b = interval.a, interval.b
    if a < 0:
        raise ConfigError("truncated exponential kernel needs an interval inside [0, inf)")
    r0 = (1 - math.sqrt(5)) / 2
    r1 = (1 + math.sqrt(5)) / 2

    def psi(x):
        return r1 * np.exp(r1 * a + r0 * x) - r0 * np.exp(r0 * a + r1 * x)

    def chi(x):
        return r1 * np.exp(r1 * b + r0 * x) - r0 * np.exp(r0 * b + r1 * x)

    c = (math.exp(r0 * a + r1 * b) - math.exp(r0 * b + r1 * a)) * (r1 - r0) / (math.exp(-a) - math.exp(-b))
    return ClosedFormKernel("truncexp", truncated_exponential(a, b, 1.0), psi, chi, c)


def mercer_kernel(basis: SpectralBasis, order: int) -> MercerKernel:
    return MercerKernel(basis, order)


def _nodes(X: ArrayLike) -> NDArray:
    X = np.atleast_1d(np.asarray(X, float))
    if X.ndim != 1:
        raise ConfigError("nodes must be a 1-d array")
    if np.unique(X).size != X.size:
        raise DuplicateNodes("nodes must be pairwise distinct")
    return X


def gram(kernel: Kernel, X: ArrayLike) -> NDArray:
    """``K(X, X)``; for a truncated kernel at most ``order + 1`` nodes are allowed."""
    X = _nodes(X)
    if isinstance(kernel, MercerKernel) and X.size > kernel.order + 1:
        raise TooManyNodesForTruncation(
            f"{X.size} nodes exceed the rank {kernel.order + 1} of the truncated kernel")
    G = kernel.matrix(X)
    return 0.5 * (G + G.T)


def optimal_weights(kernel: Kernel, X: ArrayLike) -> NDArray:
    """Weights minimizing the worst-case error for fixed nodes: ``K(X,X)^{-1} 1``.

    No positivity or normalization is imposed.
    """
    G = gram(kernel, X)
    try:
        factor = scipy.linalg.cho_factor(G, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularGram("Gram matrix is not numerically positive definite "
                           "(nodes too close?)") from exc
    pivots = np.diag(factor[0]) ** 2
    if pivots.min() <= 1e-14 * np.max(np.diag(G)):
        raise SingularGram("Gram matrix is numerically singular (nodes too close?)")
    return scipy.linalg.cho_solve(factor, np.ones(len(G)))


def wce_squared(kernel: Kernel, X: ArrayLike, w: ArrayLike) -> float:
    """Squared worst-case error ``w'K(X,X)w - 2 sum(w) + 1``, clamped at zero."""
    G = gram(kernel, X)
    w = np.asarray(w, float)
    val = float(w @ G @ w - 2.0 * w.sum() + 1.0)
    if val < 0 and val >= -WCE_CLAMP:
        return 0.0
    return val


def wce_optimal_squared(kernel: Kernel, X: ArrayLike) -> float:
    """Squared worst-case error at the optimal weights, ``1 - 1'K(X,X)^{-1}1``."""
    return max(1.0 - float(optimal_weights(kernel, X).sum()), 0.0)


def wce_spectral(basis: SpectralBasis, order: int, X: ArrayLike, w: ArrayLike,
                 tail_length: int | None = None) -> tuple[float, float]:
    """Squared worst-case error of a rule exact up to ``order`` from its spectral tail.

    Sums ``alpha_m (sum_i w_i phi_m(x_i))^2`` over ``m = order+1 .. order+tail_length``
    and returns ``(partial_sum, last_term)``; the last term indicates how far
    the truncated tail is from converged.  ``tail_length`` defaults to ``20 n``.
    """
    X = np.atleast_1d(np.asarray(X, float))
    if tail_length is None:
        tail_length = 20 * X.size
    if tail_length < 0:
        raise ConfigError("tail_length must be >= 0")
    if tail_length == 0:
        return 0.0, 0.0
    top = order + tail_length
    if top > basis.m_max:
        raise InsufficientBasis(f"need eigenpairs up to {top}, basis stops at {basis.m_max}")
    w = np.asarray(w, float)
    phi = basis.evaluate_all(X, m_max=top, m_min=order + 1)
    alpha = 1.0 / (1.0 + basis.eigenvalues[order + 1: top + 1])
    terms = alpha * (phi @ w) ** 2
    return float(terms.sum()), float(terms[-1])


def riemann_series_check(r: float, n_terms: int = 1_000_000) -> dict[str, float]:
    """Compare partial sums of two shifted Riemann series with their closed forms.

    ``sum 1/(n^2 + r^2)`` and ``sum (-1)^(n-1)/(n^2 + r^2)`` are summed over
    ``n_terms`` terms plus a tail estimate; ``r = 0`` gives zeta(2) and eta(2).
    """
    if r < 0:
        raise ConfigError("r must be >= 0")
    n = np.arange(n_terms, 0, -1, dtype=float)  # smallest terms first
    terms = 1.0 / (n * n + r * r)
    head1 = math.fsum(terms)
    sign = np.where(n % 2 == 1, 1.0, -1.0)
    head2 = math.fsum(sign * terms)
    # Midpoint-integral tail for the monotone series; for the alternating
    # series the tail is about half the first omitted term, with its sign.
    N = n_terms + 0.5
    tail1 = 1.0 / N if r == 0 else math.atan(r / N) / r
    first_omitted = (-1.0) ** n_terms / ((n_terms + 1) ** 2 + r * r)
    sum1 = head1 + tail1
    sum2 = head2 + 0.5 * first_omitted

    x = math.pi * r
    if x < 1e-3:
        # Series of x/tanh(x) - 1 and 1 - x/sinh(x) around zero.
        closed1 = math.pi**2 / 6 * (1 - x**2 / 15)
        closed2 = math.pi**2 / 12 * (1 - 7 * x**2 / 60)
    else:
        closed1 = (x / math.tanh(x) - 1) / (2 * r * r)
        closed2 = (1 - x / math.sinh(x)) / (2 * r * r)
    return {"sum1": sum1, "sum2": sum2, "closed1": closed1, "closed2": closed2,
            "tail1": tail1, "tail2_bound": abs(first_omitted)}
