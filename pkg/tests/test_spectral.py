import math

import numpy as np
import pytest
from scipy import integrate as spi

from poincare_quad import measures, spectral
from poincare_quad.errors import ConfigError, IndexOutOfRange, MeshTooCoarse


def test_uniform_closed_form_values():
    b = spectral.closed_form_uniform((0, 1), 3)
    assert b.eigenvalues[1] == pytest.approx(math.pi**2, rel=1e-15)
    assert b.eigenvalues[0] == 0.0
    np.testing.assert_array_equal(b.evaluate(0, [0.1, 0.7]), 1.0)
    b2 = spectral.closed_form_uniform((0, 2), 2)
    assert b2.eigenvalues[2] == pytest.approx(math.pi**2, rel=1e-15)
    assert b2.evaluate(2, 0.0)[0] == pytest.approx(math.sqrt(2), rel=1e-15)


def test_truncexp_closed_form_values():
    b = spectral.closed_form_trunc_exp((0, 3), 4)
    assert b.eigenvalues[1] == pytest.approx(0.25 + (math.pi / 3) ** 2, rel=1e-15)
    assert b.eigenvalues[0] == 0.0
    rho = lambda t: math.exp(-t) / (1 - math.exp(-3))
    norm, _ = spi.quad(lambda t: float(b.evaluate(1, t)[0]) ** 2 * rho(t), 0, 3, epsabs=1e-13)
    assert norm == pytest.approx(1.0, abs=1e-8)
    cross, _ = spi.quad(lambda t: float(b.evaluate(1, t)[0] * b.evaluate(3, t)[0]) * rho(t), 0, 3)
    assert abs(cross) < 1e-8


@pytest.mark.parametrize("maker,iv", [(spectral.closed_form_uniform, (0.5, 2.0)),
                                      (spectral.closed_form_trunc_exp, (1.0, 5.0))])
def test_closed_form_derivative_matches_finite_difference(maker, iv):
    b = maker(iv, 6)
    x = np.linspace(iv[0] + 0.1, iv[1] - 0.1, 9)
    h = 1e-6
    fd = (b.evaluate_all(x + h) - b.evaluate_all(x - h)) / (2 * h)
    np.testing.assert_allclose(b.derivative_all(x), fd, atol=1e-6)
    # Neumann conditions
    np.testing.assert_allclose(b.derivative_all([iv[0], iv[1]]), 0.0, atol=1e-10)


@pytest.mark.parametrize("maker,iv", [(spectral.closed_form_uniform, (0, 1)),
                                      (spectral.closed_form_trunc_exp, (1.0, 5.0))])
def test_closed_form_orthonormal(maker, iv):
    b = maker(iv, 8)
    gram = np.array([[b.measure.integrate(lambda t: b.evaluate(i, t) * b.evaluate(j, t), n_panels=2048)
                      for j in range(9)] for i in range(9)])
    np.testing.assert_allclose(gram, np.eye(9), atol=1e-8)


def test_fem_uniform_eigenvalues(fem_unif):
    exact = (np.arange(21) * math.pi) ** 2
    assert fem_unif.eigenvalues[0] == 0.0
    assert fem_unif.eigenvalues[1] == pytest.approx(math.pi**2, rel=1e-4)
    np.testing.assert_allclose(fem_unif.eigenvalues[1:], exact[1:], rtol=1e-4)


def test_fem_truncexp_eigenvalue(texp03):
    b = spectral.fem_basis(texp03, 1000, 5)
    assert b.eigenvalues[1] == pytest.approx(0.25 + (math.pi / 3) ** 2, rel=1e-3)


def test_fem_evaluate_matches_closed_form(fem_unif):
    rng = np.random.default_rng(7)
    x = rng.uniform(0, 1, 100)
    exact = spectral.closed_form_uniform((0, 1), 1)
    assert np.max(np.abs(fem_unif.evaluate(1, x) - exact.evaluate(1, x))) <= 1e-3
    assert fem_unif.evaluate(1, 0.0)[0] == pytest.approx(math.sqrt(2), abs=1e-4)


def test_fem_sign_convention_and_phi0(bumpy):
    b = spectral.fem_basis(bumpy, 600, 12)
    assert np.all(b.nodal[0, 1:] > 0)
    np.testing.assert_array_equal(b.evaluate(0, np.linspace(0, 1, 17)), 1.0)
    assert np.all(np.diff(b.eigenvalues) > 0)


@pytest.mark.parametrize("mass", ["blended", "consistent"])
def test_fem_discrete_orthonormality(bumpy, mass):
    b = spectral.fem_basis(bumpy, 500, 10, mass=mass)
    _, _, cons, lumped = spectral.assemble(bumpy, 500)
    B = spectral._tridiag_dense(cons)
    if mass == "blended":
        B = 0.5 * (B + np.diag(lumped))
    G = b.nodal.T @ B @ b.nodal
    np.testing.assert_allclose(np.diag(G), 1.0, atol=1e-8)
    np.testing.assert_allclose(G - np.diag(np.diag(G)), 0.0, atol=1e-6)


def test_fem_moments_of_nonconstant_functions_vanish(bumpy):
    # Lumping preserves row sums, so int phi_m dmu = 0 exactly for the interpolant.
    b = spectral.fem_basis(bumpy, 400, 8)
    for m in range(1, 9):
        assert abs(bumpy.integrate(lambda t: b.evaluate(m, t), n_panels=399)) < 1e-10


def test_rayleigh_consistency_consistent_mass(bumpy):
    N = 400
    b = spectral.fem_basis(bumpy, N, 8, mass="consistent")
    mesh = b.mesh
    for m in range(1, 9):
        v = b.nodal[:, m]
        slopes = np.diff(v) / np.diff(mesh)
        # int rho over each element by adaptive quadrature, independent of assembly
        rho_e = np.array([spi.quad(lambda s: float(bumpy.pdf(s)), lo, hi)[0]
                          for lo, hi in zip(mesh[:-1], mesh[1:])])
        energy = np.sum(slopes**2 * rho_e)
        mass = bumpy.integrate(lambda t: b.evaluate(m, t) ** 2, n_panels=N - 1)
        assert energy / mass == pytest.approx(b.eigenvalues[m], rel=1e-6)


def test_rayleigh_quotient_blended_is_close(bumpy):
    b = spectral.fem_basis(bumpy, 1000, 4)
    _, stiff, cons, _ = spectral.assemble(bumpy, 1000)
    A, B = spectral._tridiag_dense(stiff), spectral._tridiag_dense(cons)
    for m in range(1, 5):
        v = b.nodal[:, m]
        assert (v @ A @ v) / (v @ B @ v) == pytest.approx(b.eigenvalues[m], rel=1e-4)


def test_neumann_slope_shrinks_with_mesh(unif01):
    slopes = []
    for N in (200, 400, 800):
        b = spectral.fem_basis(unif01, N, 3)
        h = b.mesh[1] - b.mesh[0]
        left = abs(b.nodal[1, 2] - b.nodal[0, 2]) / h
        right = abs(b.nodal[-1, 2] - b.nodal[-2, 2]) / h
        slopes.append(max(left, right))
        assert max(left, right) <= 50 * h * b.eigenvalues[2]
    assert slopes[0] > slopes[1] > slopes[2]


def _slope(Ns, errs):
    return np.polyfit(np.log(Ns), np.log(errs), 1)[0]


def test_convergence_order_consistent_mass(unif01):
    Ns = [125, 250, 500, 1000]
    errs = [abs(spectral.fem_basis(unif01, N, 2, mass="consistent").eigenvalues[1] - math.pi**2) for N in Ns]
    assert _slope(Ns, errs) <= -1.8


def test_convergence_order_blended_mass(unif01):
    Ns = [50, 100, 200]
    errs = [abs(spectral.fem_basis(unif01, N, 2).eigenvalues[1] - math.pi**2) for N in Ns]
    assert _slope(Ns, errs) <= -3.5


def test_tsystem_determinants_nonzero(bumpy):
    b = spectral.fem_basis(bumpy, 800, 8)
    rng = np.random.default_rng(11)
    for _ in range(200):
        k = rng.integers(1, 9)
        t = np.sort(rng.uniform(0.01, 0.99, k))
        if np.min(np.diff(t), initial=1.0) < 1e-3:
            continue
        V = b.evaluate_all(t, m_max=k - 1)
        assert abs(np.linalg.det(V)) > 0


def test_mesh_too_coarse(unif01):
    with pytest.raises(MeshTooCoarse):
        spectral.fem_basis(unif01, 30, 10)


def test_index_out_of_range(fem_unif):
    with pytest.raises(IndexOutOfRange):
        fem_unif.evaluate(21, 0.5)


def test_poincare_constant():
    assert spectral.poincare_constant(spectral.closed_form_uniform((0, 1), 2)) == pytest.approx(1 / math.pi**2)
    assert spectral.poincare_constant(spectral.closed_form_uniform((0, 3), 2)) == pytest.approx(9 / math.pi**2)
    assert spectral.poincare_constant(spectral.closed_form_trunc_exp((0, 3), 2)) == pytest.approx(
        1 / (0.25 + (math.pi / 3) ** 2))
    with pytest.raises(ConfigError):
        spectral.poincare_constant(spectral.closed_form_uniform((0, 1), 0))


def test_make_basis_dispatch(unif01, texp15, bumpy):
    assert spectral.make_basis(unif01, 4).backend == "closed_uniform"
    assert spectral.make_basis(texp15, 4).backend == "closed_truncexp"
    assert spectral.make_basis(unif01, 4, "fem").backend == "fem"
    assert spectral.make_basis(measures.truncated_exponential(0, 1, 2.0), 4).backend == "fem"
    with pytest.raises(ConfigError):
        spectral.make_basis(bumpy, 4, "closed")


def test_csv_round_trip(tmp_path, bumpy):
    b = spectral.fem_basis(bumpy, 300, 6)
    spectral.save_csv(b, tmp_path / "ev.csv", tmp_path / "ef.csv")
    back = spectral.load_csv(tmp_path / "ev.csv", tmp_path / "ef.csv", bumpy)
    x = np.linspace(0, 1, 77)
    np.testing.assert_allclose(back.evaluate_all(x), b.evaluate_all(x), atol=1e-15)
    np.testing.assert_allclose(back.eigenvalues, b.eigenvalues, rtol=1e-15)
