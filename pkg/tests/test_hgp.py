import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bfselect.basis import BoxDomain, design_matrix
from bfselect.gp_exact import SeKernel, gp_predict
from bfselect.hgp import build_hgp, hgp_fit, hgp_predict, laplacian_frequency, se_spectral_density
from bfselect.metrics import mean_kl
from bfselect.posterior import DualPosterior, dual_accumulate
from bfselect.selection import SelectionResult, dual_scores, select_top_k

CUBE = BoxDomain.cube(-2, 2, 3)


def test_spectral_density_examples():
    assert se_spectral_density(0.0, 0.05, 0.1, 3) == pytest.approx(7.8748e-4, rel=1e-4)
    w = np.linspace(0, 30, 50)
    s = se_spectral_density(w, 0.05, 0.1, 3)
    assert np.all(np.diff(s) < 0)
    np.testing.assert_allclose(se_spectral_density(w, 0.1, 0.1, 3), 2 * s)


def test_laplacian_frequency_examples():
    assert laplacian_frequency((1, 1, 1), CUBE) == pytest.approx(1.36035, abs=1e-5)
    assert laplacian_frequency((1,), BoxDomain([-2.0], [2.0])) == pytest.approx(np.pi / 4)
    assert laplacian_frequency((1, 2, 1), CUBE) > laplacian_frequency((1, 1, 1), CUBE)
    with pytest.raises(ValueError):
        laplacian_frequency((0, 1, 1), CUBE)


def test_build_hgp_sizes_and_eigenvalues():
    assert build_hgp(CUBE, [2, 2, 2], 0.05, 0.1, 0.01).size == 8
    model = build_hgp(CUBE, [20, 20, 20], 0.05, 0.1, 0.01)
    assert model.size == 8000
    lam = model.prior_eigenvalues
    assert np.all(lam > 0)
    freqs = np.array([laplacian_frequency(i, CUBE) for i in model.basis.indices[:50]])
    np.testing.assert_allclose(lam[:50], se_spectral_density(freqs, 0.05, 0.1, 3), rtol=1e-12)
    order = np.argsort(np.sqrt((model.basis.frequencies**2).sum(axis=1)), kind="stable")
    assert np.all(np.diff(lam[order]) <= 0)


def test_eigenvalues_non_increasing_along_each_axis():
    model = build_hgp(CUBE, [5, 5, 5], 1.0, 0.3, 0.1)
    lam = model.prior_eigenvalues.reshape(5, 5, 5)
    for axis in range(3):
        assert np.all(np.diff(lam, axis=axis) < 0)


def test_hgp_fit_examples(rng):
    model = build_hgp(CUBE, [3, 3, 3], 0.05, 0.1, 0.01)
    zero = hgp_fit(model, np.zeros((0, 3)), np.zeros(0))
    assert zero.count == 0 and np.all(zero.b_matrix == 0)

    X, y = rng.uniform(-1, 1, size=(40, 3)), rng.normal(size=40)
    dual = hgp_fit(model, X, y)
    phi = design_matrix(model.basis, X)
    stream = DualPosterior.empty(model.prior_eigenvalues, model.noise_variance)
    for row, yn in zip(phi, y):
        stream = dual_accumulate(stream, row, yn)
    np.testing.assert_allclose(stream.b_matrix, dual.b_matrix, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(stream.alpha, dual.alpha, rtol=1e-12, atol=1e-14)

    diag = np.diag(dual.b_matrix)
    # each 1-D factor is at most 1/sqrt(2) on [-2, 2]
    assert np.all(diag > 0) and np.all(diag <= 40 * (0.5**3) + 1e-12)
    with pytest.raises(ValueError):
        hgp_fit(model, [[0.0, 0.0, 2.5]], [1.0])


def test_prior_predictive_without_data(rng):
    model = build_hgp(BoxDomain([-2.0], [2.0]), [64], 1.0, 0.5, 0.1)
    dual = hgp_fit(model, np.zeros((0, 1)), np.zeros(0))
    Xs = np.linspace(-1, 1, 9).reshape(-1, 1)
    pred = hgp_predict(model, dual, Xs)
    np.testing.assert_array_equal(pred.means, 0.0)
    phi = design_matrix(model.basis, Xs)
    np.testing.assert_allclose(pred.variances, (phi**2) @ model.prior_eigenvalues, rtol=1e-10)
    np.testing.assert_allclose(pred.variances, 1.0, atol=1e-3)


def test_full_selection_matches_unselected(rng):
    model = build_hgp(CUBE, [4, 4, 4], 0.05, 0.1, 0.01)
    X, y = rng.uniform(-1, 1, size=(100, 3)), rng.normal(size=100) * 0.2
    dual = hgp_fit(model, X, y)
    Xs = rng.uniform(-1, 1, size=(30, 3))
    full = hgp_predict(model, dual, Xs)
    sel = select_top_k(dual_scores(dual), model.size)
    same = hgp_predict(model, dual, Xs, sel)
    np.testing.assert_allclose(same.means, full.means, rtol=0, atol=1e-12)
    np.testing.assert_allclose(same.variances, full.variances, rtol=0, atol=1e-12)
    assert full.latency_seconds is not None and full.latency_seconds >= 0


def test_predict_matches_formula_transcription(rng):
    box = BoxDomain.cube(-2, 2, 2)
    model = build_hgp(box, [4, 4], 0.8, 0.5, 0.05)
    X, y = rng.uniform(-1, 1, size=(30, 2)), rng.normal(size=30)
    Xs = rng.uniform(-1, 1, size=(12, 2))
    dual = hgp_fit(model, X, y)
    # independent route: explicit Sigma from an inverse, as in the displayed equations
    idx = np.array([[i, j] for i in range(1, 5) for j in range(1, 5)])
    def phi_of(P):
        return np.prod(np.sin(np.pi * idx[None, :, :] * (P[:, None, :] + 2) / 4) / np.sqrt(2), axis=2)
    Phi, Phis = phi_of(X), phi_of(Xs)
    Sigma = np.linalg.inv(Phi.T @ Phi + 0.05 * np.diag(1 / model.prior_eigenvalues))
    mu = Phis @ Sigma @ Phi.T @ y
    V = 0.05 * Phis @ Sigma @ Phis.T
    pred = hgp_predict(model, dual, Xs)
    np.testing.assert_allclose(pred.means, mu, rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(pred.variances, np.diag(V), rtol=1e-8, atol=1e-12)

    sel = SelectionResult.from_kept(np.ones(16), [0, 3, 5, 9, 12])
    k = sel.kept
    Sk = np.linalg.inv(Phi[:, k].T @ Phi[:, k] + 0.05 * np.diag(1 / model.prior_eigenvalues[k]))
    red = hgp_predict(model, dual, Xs, sel)
    np.testing.assert_allclose(red.means, Phis[:, k] @ Sk @ Phi[:, k].T @ y, rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(red.variances, 0.05 * np.einsum("ni,ij,nj->n", Phis[:, k], Sk, Phis[:, k]),
                               rtol=1e-8, atol=1e-12)


def test_empty_selection_predicts_zero(rng):
    model = build_hgp(CUBE, [2, 2, 2], 0.05, 0.1, 0.01)
    dual = hgp_fit(model, rng.uniform(-1, 1, size=(10, 3)), rng.normal(size=10))
    pred = hgp_predict(model, dual, np.zeros((3, 3)), SelectionResult.from_kept(np.ones(8), []))
    np.testing.assert_array_equal(pred.means, 0.0)
    np.testing.assert_array_equal(pred.variances, 0.0)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 40))
def test_data_reduces_variance(seed, n):
    rng = np.random.default_rng(seed)
    model = build_hgp(BoxDomain.cube(-2, 2, 2), [5, 5], 0.5, 0.4, 0.05)
    Xs = rng.uniform(-1.5, 1.5, size=(10, 2))
    prior = hgp_predict(model, hgp_fit(model, np.zeros((0, 2)), np.zeros(0)), Xs)
    post = hgp_predict(model, hgp_fit(model, rng.uniform(-1.5, 1.5, size=(n, 2)), rng.normal(size=n)), Xs)
    assert np.all(post.variances <= prior.variances + 1e-10)


def test_hgp_converges_to_exact_gp():
    rng = np.random.default_rng(3)
    kernel = SeKernel(1.0, 0.3)
    X = rng.uniform(-1, 1, size=(200, 2))
    y = np.sin(2 * X[:, 0]) * np.cos(3 * X[:, 1]) + 0.1 * rng.normal(size=200)
    Xs = rng.uniform(-0.9, 0.9, size=(100, 2))
    ref = gp_predict(kernel, X, y, 0.01, Xs)
    kls = []
    for ld in (4, 8, 12):
        model = build_hgp(BoxDomain.cube(-2, 2, 2), [ld, ld], 1.0, 0.3, 0.01)
        kls.append(mean_kl(hgp_predict(model, hgp_fit(model, X, y), Xs), ref))
    assert kls[0] > kls[1] > kls[2]
