"""Eigenpairs of the Neumann operator ``f'' - V' f' = -lambda f`` in L2(mu).

Closed forms are available for the uniform law and the unit-rate truncated
exponential; every other density goes through a piecewise-linear finite
element discretization on an evenly spaced mesh.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from .errors import ConfigError, IndexOutOfRange, MeshTooCoarse, NumericalBreakdown
from .measures import Interval, Measure, truncated_exponential, uniform

Backend = Literal["closed_uniform", "closed_truncexp", "fem"]
MassMatrix = Literal["blended", "consistent"]

DEFAULT_MESH = 1000
_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Orthonormal eigenfunctions ``phi_0 .. phi_M`` and eigenvalues of the Poincare operator.

    ``phi_0`` is the constant 1 and every ``phi_m`` is positive at the left
    endpoint.  FEM bases store the nodal values on ``mesh`` and evaluate by
    linear interpolation.
    """

    measure: Measure
    eigenvalues: NDArray
    backend: Backend
    mesh: NDArray | None = field(default=None, repr=False)
    nodal: NDArray | None = field(default=None, repr=False)

    @property
    def m_max(self) -> int:
        return len(self.eigenvalues) - 1

    @property
    def interval(self) -> Interval:
        return self.measure.interval

    @property
    def omega(self) -> float:
        return np.pi / self.interval.length

    def _check_index(self, m: int) -> None:
        if not 0 <= m <= self.m_max:
            raise IndexOutOfRange(f"index {m} outside 0..{self.m_max}")

    def evaluate(self, m: int, x: ArrayLike) -> NDArray:
        """``phi_m(x)`` with the shape of ``x`` (at least 1-d)."""
        self._check_index(m)
        x = np.asarray(x, dtype=float)
        return self.evaluate_all(x.ravel(), m_max=m, m_min=m)[0].reshape(x.shape or (1,))

    def derivative(self, m: int, x: ArrayLike) -> NDArray:
        self._check_index(m)
        x = np.asarray(x, dtype=float)
        return self.derivative_all(x.ravel(), m_max=m, m_min=m)[0].reshape(x.shape or (1,))

    def evaluate_all(self, x: ArrayLike, m_max: int | None = None, m_min: int = 0) -> NDArray:
        """Matrix ``[phi_m(x_j)]`` with rows ``m = m_min .. m_max``; ``x`` is flattened."""
        x = np.asarray(x, dtype=float).ravel()
        m_max = self.m_max if m_max is None else m_max
        self._check_index(m_max)
        m = np.arange(m_min, m_max + 1)[:, None]
        a = self.interval.a
        if self.backend == "closed_uniform":
            out = np.sqrt(2.0) * np.cos(m * self.omega * (x - a))
        elif self.backend == "closed_truncexp":
            mw = m * self.omega
            c = self._truncexp_norms(m)
            arg = mw * (x - a)
            out = c * np.exp(x / 2) * (2 * mw * np.cos(arg) - np.sin(arg))
        else:
            out = np.vstack([np.interp(x, self.mesh, self.nodal[:, k]) for k in range(m_min, m_max + 1)])
        if m_min == 0:
            out[0] = 1.0
        return out

    def derivative_all(self, x: ArrayLike, m_max: int | None = None, m_min: int = 0) -> NDArray:
        """Matrix ``[phi_m'(x_j)]``; FEM slopes are taken from the element to the right."""
        x = np.asarray(x, dtype=float).ravel()
        m_max = self.m_max if m_max is None else m_max
        self._check_index(m_max)
        m = np.arange(m_min, m_max + 1)[:, None]
        a = self.interval.a
        if self.backend == "closed_uniform":
            mw = m * self.omega
            return -np.sqrt(2.0) * mw * np.sin(mw * (x - a))
        if self.backend == "closed_truncexp":
            mw = m * self.omega
            lam = 0.25 + mw**2
            # d/dx [e^{x/2}(2mw cos - sin)] collapses to -2 lambda e^{x/2} sin.
            return -2 * lam * self._truncexp_norms(m) * np.exp(x / 2) * np.sin(mw * (x - a))
        j = np.clip(np.searchsorted(self.mesh, x, side="right") - 1, 0, len(self.mesh) - 2)
        h = self.mesh[j + 1] - self.mesh[j]
        vals = self.nodal[:, m_min:m_max + 1]
        return ((vals[j + 1] - vals[j]) / h[:, None]).T

    def _truncexp_norms(self, m: NDArray) -> NDArray:
        a, b = self.interval.a, self.interval.b
        lam = 0.25 + (m * self.omega) ** 2
        return np.sqrt((np.exp(-a) - np.exp(-b)) / ((b - a) * 2 * lam))


def closed_form_uniform(interval: Interval | tuple[float, float], m_max: int) -> SpectralBasis:
    """``lambda_m = (m pi / (b-a))^2`` and ``phi_m = sqrt(2) cos(m pi (x-a)/(b-a))``."""
    if m_max < 0:
        raise ConfigError("m_max must be >= 0")
    if not isinstance(interval, Interval):
        interval = Interval(*interval)
    measure = uniform(interval.a, interval.b)
    omega = np.pi / interval.length
    lam = (np.arange(m_max + 1) * omega) ** 2
    return SpectralBasis(measure, lam, "closed_uniform")


def closed_form_trunc_exp(interval: Interval | tuple[float, float], m_max: int) -> SpectralBasis:
    """Basis for the unit-rate exponential truncated on ``interval``: ``lambda_m = 1/4 + (m omega)^2``."""
    if m_max < 0:
        raise ConfigError("m_max must be >= 0")
    if not isinstance(interval, Interval):
        interval = Interval(*interval)
    if interval.a < 0:
        raise ConfigError("truncated exponential basis needs an interval inside [0, inf)")
    measure = truncated_exponential(interval.a, interval.b, 1.0)
    omega = np.pi / interval.length
    lam = 0.25 + (np.arange(m_max + 1) * omega) ** 2
    lam[0] = 0.0
    return SpectralBasis(measure, lam, "closed_truncexp")


def assemble(measure: Measure, mesh_size: int) -> tuple[NDArray, NDArray, NDArray, NDArray]:
    """Tridiagonal stiffness and consistent mass matrices for hat functions.

    Returns ``(mesh, stiffness_bands, mass_bands, lumped_diag)`` where bands
    are ``(diag, offdiag)`` stacked as a ``2 x N`` array (offdiag padded).
    """
    mesh = measure.interval.linspace(mesh_size)
    h = np.diff(mesh)
    # Sub-cells split elements at density breakpoints so each quadrature
    # sees a smooth integrand.
    sub = np.union1d(mesh, measure.breakpoints)
    lo, hi = sub[:-1], sub[1:]
    elem = np.clip(np.searchsorted(mesh, lo, side="right") - 1, 0, mesh_size - 2)
    t = 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * _GL_X[None, :]
    wr = 0.5 * (hi - lo)[:, None] * _GL_W[None, :] * measure.pdf(t)
    s = (t - mesh[elem][:, None]) / h[elem][:, None]  # local coordinate in [0, 1]
    left, right = 1.0 - s, s

    def per_element(v):
        return np.bincount(elem, weights=v.sum(1), minlength=mesh_size - 1)

    rho_int = per_element(wr)
    m_ll = per_element(wr * left * left)
    m_lr = per_element(wr * left * right)
    m_rr = per_element(wr * right * right)
    k_e = rho_int / h**2

    n = mesh_size
    kd = np.zeros(n)
    kd[:-1] += k_e
    kd[1:] += k_e
    ko = np.append(-k_e, 0.0)
    md = np.zeros(n)
    md[:-1] += m_ll
    md[1:] += m_rr
    mo = np.append(m_lr, 0.0)
    lumped = np.zeros(n)
    lumped[:-1] += m_ll + m_lr
    lumped[1:] += m_rr + m_lr
    return mesh, np.vstack([kd, ko]), np.vstack([md, mo]), lumped


def _tridiag_dense(bands: NDArray) -> NDArray:
    d, o = bands[0], bands[1][:-1]
    return np.diag(d) + np.diag(o, 1) + np.diag(o, -1)


def fem_basis(measure: Measure, mesh_size: int = DEFAULT_MESH, m_max: int = 10,
              mass: MassMatrix = "blended") -> SpectralBasis:
    """Finite element approximation of the first ``m_max + 1`` eigenpairs.

    ``mass="blended"`` averages the consistent and lumped mass matrices,
    which cancels the leading ``O(h^2)`` eigenvalue error of linear
    elements.  ``mass="consistent"`` is the plain Galerkin mass matrix.
    """
    if m_max < 0:
        raise ConfigError("m_max must be >= 0")
    if mesh_size < 4 * max(m_max, 1):
        raise MeshTooCoarse(f"mesh of {mesh_size} nodes cannot resolve index {m_max} (need >= {4 * m_max})")
    mesh, stiff, cons, lumped = assemble(measure, mesh_size)
    A = _tridiag_dense(stiff)
    B = _tridiag_dense(cons)
    if mass == "blended":
        B = 0.5 * (B + np.diag(lumped))
    elif mass != "consistent":
        raise ConfigError(f"unknown mass matrix {mass!r}")
    try:
        lam, vecs = scipy.linalg.eigh(A, B, subset_by_index=[0, m_max], driver="gvx")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalBreakdown(f"generalized eigensolve failed: {exc}") from exc

    # eigh returns B-orthonormal vectors; fix the sign at the left endpoint.
    for k in range(vecs.shape[1]):
        v = vecs[:, k]
        lead = v[0] if abs(v[0]) >= 1e-12 else v[np.flatnonzero(np.abs(v) >= 1e-12)[0]]
        if lead < 0:
            vecs[:, k] = -v
    lam = lam.copy()
    lam[0] = 0.0
    vecs[:, 0] = 1.0
    if np.any(np.diff(lam) <= 0):
        raise NumericalBreakdown("computed eigenvalues are not strictly increasing")
    mesh.setflags(write=False)
    vecs.setflags(write=False)
    lam.setflags(write=False)
    return SpectralBasis(measure, lam, "fem", mesh=mesh, nodal=vecs)


def make_basis(measure: Measure, m_max: int, backend: str = "auto",
               mesh_size: int = DEFAULT_MESH) -> SpectralBasis:
    """Closed form when the measure admits one (and ``backend`` allows it), FEM otherwise."""
    if backend not in ("auto", "closed", "fem"):
        raise ConfigError(f"unknown basis backend {backend!r}")
    if backend != "fem":
        if measure.kind == "uniform":
            return closed_form_uniform(measure.interval, m_max)
        if measure.kind == "truncexp" and measure.rate == 1.0 and measure.a >= 0:
            return closed_form_trunc_exp(measure.interval, m_max)
        if backend == "closed":
            raise ConfigError(f"no closed-form basis for {measure.kind} measures")
    return fem_basis(measure, max(mesh_size, 4 * m_max), m_max)


def poincare_constant(basis: SpectralBasis) -> float:
    """Best constant of the Poincare inequality, ``1 / lambda_1``."""
    if basis.m_max < 1:
        raise ConfigError("need at least two eigenpairs")
    return 1.0 / float(basis.eigenvalues[1])


def save_csv(basis: SpectralBasis, eigenvalue_path: str | Path, function_path: str | Path,
             num: int = 1001) -> None:
    """Write eigenvalues and a matrix of eigenfunction values (rows = points, columns = m)."""
    with open(eigenvalue_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "lambda"])
        for m, lam in enumerate(basis.eigenvalues):
            w.writerow([m, f"{lam:.17g}"])
    t = basis.mesh if basis.backend == "fem" else basis.interval.linspace(num)
    vals = basis.evaluate_all(t)
    with open(function_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"phi_{m}" for m in range(basis.m_max + 1)])
        for j, tj in enumerate(t):
            w.writerow([f"{tj:.17g}"] + [f"{v:.17g}" for v in vals[:, j]])


def load_csv(eigenvalue_path: str | Path, function_path: str | Path,
             measure: Measure | None = None) -> SpectralBasis:
    """Rebuild a piecewise-linear basis from :func:`save_csv` output.

    Without ``measure`` the density is unknown; a uniform placeholder on the
    same interval is attached.
    """
    lam = np.loadtxt(eigenvalue_path, delimiter=",", skiprows=1, ndmin=2)[:, 1]
    table = np.loadtxt(function_path, delimiter=",", skiprows=1, ndmin=2)
    mesh, nodal = table[:, 0], table[:, 1:]
    if nodal.shape[1] != lam.size:
        raise ConfigError("eigenvalue and eigenfunction files disagree on the number of pairs")
    if measure is None:
        measure = uniform(mesh[0], mesh[-1])
    return SpectralBasis(measure, lam, "fem", mesh=mesh, nodal=nodal)


__all__ = [
    "SpectralBasis", "closed_form_uniform", "closed_form_trunc_exp", "fem_basis", "make_basis",
    "poincare_constant", "assemble", "save_csv", "load_csv",
]
