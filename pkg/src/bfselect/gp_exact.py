"""Exact squared-exponential GP regression and prior sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.spatial.distance import cdist

from .posterior import PredictiveDistribution, jittered_cholesky


@dataclass(frozen=True)
class SeKernel:
    kernel_variance: float
    lengthscale: float

    def __post_init__(self):
        if not (self.kernel_variance > 0 and self.lengthscale > 0):
            raise ValueError("kernel variance and lengthscale must be positive")

    def __call__(self, A, B) -> np.ndarray:
        return kernel_matrix(self, A, B)


def _points(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X.reshape(-1, 1) if X.ndim == 1 else X


def kernel_matrix(kernel: SeKernel, A, B) -> np.ndarray:
    A, B = _points(A), _points(B)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if A.shape[0] == 0 or B.shape[0] == 0:
        return np.zeros((A.shape[0], B.shape[0]))
    sq = cdist(A, B, "sqeuclidean")
    return kernel.kernel_variance * np.exp(-sq / (2.0 * kernel.lengthscale**2))


def gp_predict(kernel: SeKernel, X, y, noise_variance: float, X_star) -> PredictiveDistribution:
    """Latent posterior ``f* | y``; variances include the prior term ``k(x*, x*)``."""
    if not noise_variance > 0:
        raise ValueError("noise_variance must be positive")
    X, X_star = _points(X), _points(X_star)
    y = np.asarray(y, dtype=float).reshape(-1)
    prior_var = np.full(X_star.shape[0], kernel.kernel_variance)
    if X.shape[0] == 0:
        return PredictiveDistribution(np.zeros(X_star.shape[0]), prior_var)
    K = kernel_matrix(kernel, X, X)
    K[np.diag_indices_from(K)] += noise_variance
    chol, _ = jittered_cholesky(K)
    K_sf = kernel_matrix(kernel, X_star, X)
    # solve with the lower factor only; cho_factor leaves junk above the diagonal
    L = np.tril(chol)
    w = solve_triangular(L, y, lower=True, check_finite=False)
    V = solve_triangular(L, K_sf.T, lower=True, check_finite=False)
    means = V.T @ w
    variances = prior_var - np.sum(V**2, axis=0)
    return PredictiveDistribution(means, variances)


def sample_gp_prior(kernel: SeKernel, X, seed: int | np.random.Generator) -> np.ndarray:
    """One zero-mean prior draw at ``X``; deterministic for a given seed and point order."""
    X = _points(X)
    if X.shape[0] > 5000:
        raise ValueError(f"{X.shape[0]} points exceeds the dense Cholesky budget of 5000")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(X.shape[0])
    if X.shape[0] == 0:
        return z
    chol, _ = jittered_cholesky(kernel_matrix(kernel, X, X))
    return np.tril(chol) @ z
