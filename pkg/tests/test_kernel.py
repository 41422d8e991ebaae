import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp
from scipy import integrate as spi

from poincare_quad import kernel as K
from poincare_quad import spectral
from poincare_quad.errors import DuplicateNodes, InsufficientBasis, SingularGram, TooManyNodesForTruncation


def midpoints(n, a=0.0, b=1.0):
    return a + (np.arange(1, n + 1) - 0.5) * (b - a) / n


def test_uniform_kernel_values():
    k = K.uniform_kernel((0, 1))
    assert k(0.0, 0.0) == pytest.approx(1.313035285499331, rel=1e-14)  # coth(1)
    assert k(0.0, 1.0) == pytest.approx(0.8509181282393216, rel=1e-14)  # 1/sinh(1)


@pytest.mark.parametrize("make,iv", [(K.uniform_kernel, (0, 1)), (K.uniform_kernel, (-1, 2.5)),
                                     (K.trunc_exp_kernel, (1, 5)), (K.trunc_exp_kernel, (0, 3))])
def test_kernel_integrates_to_one(make, iv):
    k = make(iv)
    rho = k.measure.pdf
    for x in np.linspace(iv[0], iv[1], 7):
        val = sum(spi.quad(lambda y: float(k(x, y) * rho(y)), lo, hi, epsabs=1e-13)[0]
                  for lo, hi in ((iv[0], x), (x, iv[1])) if hi > lo)
        assert val == pytest.approx(1.0, abs=1e-8)


def test_kernel_integrates_to_one_many_points():
    k = K.trunc_exp_kernel((1, 5))
    rho = k.measure.pdf
    for x in np.random.default_rng(3).uniform(1, 5, 50):
        val = spi.quad(lambda y: float(k(x, y) * rho(y)), 1, 5, points=[x], epsabs=1e-13)[0]
        assert val == pytest.approx(1.0, abs=1e-8)


def test_truncexp_one_sided_neumann():
    k = K.trunc_exp_kernel((1, 5))
    h = 1e-6
    assert abs(k.psi(1 + h) - k.psi(1 - h)) / (2 * h) < 1e-6
    assert abs(k.chi(5 + h) - k.chi(5 - h)) / (2 * h) < 1e-5


@settings(max_examples=50, deadline=None)
@given(st.floats(1, 5), st.floats(1, 5))
def test_kernel_symmetric(x, y):
    k = K.trunc_exp_kernel((1, 5))
    assert k(x, y) == pytest.approx(k(y, x), rel=1e-14)


@pytest.mark.parametrize("make,iv", [(K.uniform_kernel, (0, 1)), (K.trunc_exp_kernel, (1, 5))])
def test_mercer_truncation_converges(make, iv):
    k = make(iv)
    maker = spectral.closed_form_uniform if k.kind == "uniform" else spectral.closed_form_trunc_exp
    g = np.linspace(*iv, 60)
    errs = []
    for M in (10, 20, 40, 80):
        km = K.mercer_kernel(maker(iv, M), M)
        errs.append(np.abs(k.matrix(g) - km.matrix(g)).max())
    assert errs == sorted(errs, reverse=True)
    # tail bound: sum_{m > 80} alpha_m sup phi_m^2, summed far enough out
    big = maker(iv, 20000)
    alpha = 1 / (1 + big.eigenvalues[81:])
    sup = np.max(big.evaluate_all(g, 20000)[81:] ** 2, axis=1)
    assert errs[-1] <= np.sum(alpha * sup) * 1.01


def test_mercer_coefficients():
    km = K.mercer_kernel(spectral.closed_form_uniform((0, 1), 10), 10)
    assert km.coefficients[0] == 1.0
    assert np.all(np.diff(km.coefficients) < 0)
    x = np.linspace(0, 1, 21)
    assert np.all(km(x, x) >= 0)


def test_gram_examples():
    k = K.uniform_kernel((0, 1))
    assert K.gram(k, [0.3])[0, 0] == pytest.approx(float(k(0.3, 0.3)))
    G = K.gram(k, [0.25, 0.75])
    assert np.allclose(G, G.T) and np.linalg.det(G) > 0
    with pytest.raises(DuplicateNodes):
        K.gram(k, [0.2, 0.2])
    km = K.mercer_kernel(spectral.closed_form_uniform((0, 1), 3), 3)
    with pytest.raises(TooManyNodesForTruncation):
        K.gram(km, np.linspace(0.1, 0.9, 5))


def test_optimal_weights_midpoint_closed_form():
    k = K.uniform_kernel((0, 1))
    np.testing.assert_allclose(K.optimal_weights(k, midpoints(3)), 2 * math.tanh(1 / 6), rtol=1e-12)
    w1 = K.optimal_weights(k, [0.5])
    assert w1[0] == pytest.approx(1 / float(k(0.5, 0.5)), rel=1e-14)
    assert w1[0] == pytest.approx(2 * math.tanh(0.5), rel=1e-14)


def test_optimal_weights_truncated_kernel_uniform():
    for n in (2, 3, 6):
        km = K.mercer_kernel(spectral.closed_form_uniform((0, 1), 2 * n - 1), 2 * n - 1)
        np.testing.assert_allclose(K.optimal_weights(km, midpoints(n)), 1 / n, atol=1e-8)


def test_singular_gram():
    k = K.uniform_kernel((0, 1))
    with pytest.raises(SingularGram):
        K.optimal_weights(k, [0.5, 0.5 + 1e-15])


def test_wce_zero_for_exact_rule_on_truncated_space():
    n = 4
    km = K.mercer_kernel(spectral.closed_form_uniform((0, 1), 2 * n - 1), 2 * n - 1)
    assert K.wce_squared(km, midpoints(n), np.full(n, 1 / n)) <= 1e-10


@pytest.mark.parametrize("n", [1, 2, 5, 13])
def test_wce_midpoint_closed_form(n):
    k = K.uniform_kernel((0, 1))
    h = 1 / (2 * n)
    assert K.wce_squared(k, midpoints(n), np.full(n, 1 / n)) == pytest.approx(h / math.tanh(h) - 1, rel=1e-8)


def test_wce_at_optimal_weights_identity():
    k = K.trunc_exp_kernel((1, 5))
    X = np.array([1.3, 2.0, 2.9, 4.1, 4.8])
    w = K.optimal_weights(k, X)
    assert K.wce_squared(k, X, w) == pytest.approx(1 - w.sum(), abs=1e-10)
    assert K.wce_optimal_squared(k, X) == pytest.approx(1 - w.sum(), abs=1e-12)


def test_wce_spectral_only_multiples_of_2n_survive():
    n = 4
    b = spectral.closed_form_uniform((0, 1), 7 + 64)
    X, w = midpoints(n), np.full(n, 1 / n)
    phi = b.evaluate_all(X, 71, 8)
    terms = (1 / (1 + b.eigenvalues[8:72])) * (phi @ w) ** 2
    m = np.arange(8, 72)
    assert np.all(np.abs(terms[m % 8 != 0]) < 1e-28)
    np.testing.assert_allclose(terms[m % 8 == 0], 2 / (1 + b.eigenvalues[m[m % 8 == 0]]), rtol=1e-12)


def test_wce_spectral_matches_closed_kernel():
    n = 4
    X, w = midpoints(n), np.full(n, 1 / n)
    closed = K.wce_squared(K.uniform_kernel((0, 1)), X, w)
    assert closed == pytest.approx(1 / 8 / math.tanh(1 / 8) - 1, rel=1e-12)
    b = spectral.closed_form_uniform((0, 1), 7 + 40_000)
    partial, last = K.wce_spectral(b, 7, X, w, 400)
    # remaining terms are 2 alpha_{8p} for p > 50, bounded by 2/(64 pi^2 * 50)
    assert 0 < closed - partial <= 2 / (64 * math.pi**2 * 50)
    assert last >= 0
    partial, _ = K.wce_spectral(b, 7, X, w, 40_000)
    assert partial == pytest.approx(closed, abs=1e-6)


def test_wce_spectral_edge_cases():
    b = spectral.closed_form_uniform((0, 1), 10)
    assert K.wce_spectral(b, 7, [0.5], [1.0], 0) == (0.0, 0.0)
    with pytest.raises(InsufficientBasis):
        K.wce_spectral(b, 7, [0.5], [1.0], 4)


def test_wce_spectral_default_tail():
    b = spectral.closed_form_uniform((0, 1), 200)
    X = (np.arange(4) + 0.5) / 4
    w = np.full(4, 0.25)
    assert K.wce_spectral(b, 7, X, w) == K.wce_spectral(b, 7, X, w, 80)


@pytest.mark.parametrize("r", [0.1, 1.0, 10.0])
def test_riemann_series(r):
    d = K.riemann_series_check(r)
    assert d["sum1"] == pytest.approx(d["closed1"], abs=1e-10)
    assert d["sum2"] == pytest.approx(d["closed2"], abs=1e-10)
    if r == 1.0:
        assert d["closed1"] == pytest.approx(0.5 * (math.pi / math.tanh(math.pi) - 1), rel=1e-15)


def test_riemann_limits():
    d = K.riemann_series_check(0.0)
    assert d["sum1"] == pytest.approx(math.pi**2 / 6, abs=1e-10)
    assert d["sum2"] == pytest.approx(math.pi**2 / 12, abs=1e-10)
    small = K.riemann_series_check(1e-5)
    assert small["closed1"] == pytest.approx(math.pi**2 / 6, abs=1e-6)
    assert small["closed2"] == pytest.approx(math.pi**2 / 12, abs=1e-6)


node_sets = hnp.arrays(float, st.integers(2, 12), elements=st.floats(0.0, 1.0), unique=True)


@settings(max_examples=60, deadline=None)
@given(node_sets, st.sampled_from(["uniform", "truncexp"]))
def test_precision_matrix_is_tridiagonal(u, kind):
    X = np.sort(u)
    if np.min(np.diff(X)) < 1e-2:
        return
    k = K.uniform_kernel((0, 1)) if kind == "uniform" else K.trunc_exp_kernel((1, 5))
    if kind == "truncexp":
        X = 1 + 4 * X
    P = np.linalg.inv(K.gram(k, X))
    i, j = np.indices(P.shape)
    assert np.max(np.abs(P[np.abs(i - j) >= 2]), initial=0) <= 1e-8 * np.max(np.abs(P))


def test_optimal_weights_beat_random_weights():
    k = K.trunc_exp_kernel((1, 5))
    X = np.linspace(1.2, 4.7, 6)
    best = K.wce_squared(k, X, K.optimal_weights(k, X))
    rng = np.random.default_rng(5)
    for _ in range(100):
        assert best <= K.wce_squared(k, X, rng.dirichlet(np.ones(6))) + 1e-14


def test_diagonal_sup_at_least_one():
    for k in (K.uniform_kernel((0, 1)), K.trunc_exp_kernel((1, 5))):
        x = np.linspace(k.interval.a, k.interval.b, 101)
        assert np.max(k(x, x)) >= 1
