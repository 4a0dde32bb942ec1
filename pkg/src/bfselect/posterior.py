"""Gaussian weight posteriors for linear-in-parameters models.

The prior is ``theta ~ N(0, diag(prior_eigenvalues))`` and the likelihood
``y ~ N(Phi theta, noise_variance I)``. With
``Sigma = (Phi^T Phi + noise_variance Lambda^{-1})^{-1}`` the posterior is
``N(Sigma Phi^T y, noise_variance Sigma)``.

Two parametrizations are kept:

* :class:`MomentPosterior` -- mean and covariance ``(m, S)``.
* :class:`DualPosterior` -- the data-dependent sufficient statistics
  ``alpha = Phi^T y`` and ``B = Phi^T Phi``, which are additive over
  observations and so can be accumulated one point at a time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

logger = logging.getLogger(__name__)

JITTER_LEVELS = (1e-12, 1e-10, 1e-8)


class CholeskyError(LinAlgError):
    pass


def jittered_cholesky(A: np.ndarray):
    """Lower Cholesky factor of ``A``, escalating ``eps * mean(diag) * I`` on failure.

    Returns the ``cho_factor`` tuple so it can be passed to ``cho_solve``.
    """
    A = np.asarray(A, dtype=float)
    if A.shape[0] == 0:
        return (A.copy(), True)
    try:
        return cho_factor(A, lower=True, check_finite=False)
    except LinAlgError:
        pass
    scale = float(np.mean(np.diag(A)))
    if not np.isfinite(scale) or scale <= 0:
        scale = 1.0
    eye = np.eye(A.shape[0])
    for eps in JITTER_LEVELS:
        try:
            factor = cho_factor(A + eps * scale * eye, lower=True, check_finite=False)
        except LinAlgError:
            continue
        logger.warning("Cholesky needed jitter %.0e * mean(diag)", eps)
        return factor
    raise CholeskyError(
        f"matrix of size {A.shape[0]} is not positive definite even with jitter {JITTER_LEVELS[-1]:.0e}"
    )


def _check_hyper(noise_variance: float, prior_eigenvalues: np.ndarray) -> None:
    if not noise_variance > 0:
        raise ValueError("noise_variance must be positive")
    if np.any(~(prior_eigenvalues > 0)):
        raise ValueError("prior eigenvalues must be positive")


@dataclass
class PredictiveDistribution:
    """Pointwise latent predictive means and variances."""

    means: np.ndarray
    variances: np.ndarray
    latency_seconds: float | None = None

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=float).reshape(-1)
        variances = np.asarray(self.variances, dtype=float).reshape(-1)
        negative = variances < 0
        if np.any(negative):
            logger.info(
                "clamped %d negative variances (min %.3e) to 0", negative.sum(), variances.min()
            )
            variances = np.where(negative, 0.0, variances)
        self.variances = variances

    def __len__(self) -> int:
        return self.means.size


@dataclass(frozen=True)
class MomentPosterior:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.covariance, dtype=float).reshape(mean.size, mean.size)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def size(self) -> int:
        return self.mean.size

    def predict(self, phi_star: np.ndarray):
        """Latent predictive mean and marginal variance at rows of ``phi_star``."""
        means = phi_star @ self.mean
        variances = np.einsum("ni,ij,nj->n", phi_star, self.covariance, phi_star)
        return means, variances


@dataclass(frozen=True)
class DualPosterior:
    alpha: np.ndarray
    b_matrix: np.ndarray
    prior_eigenvalues: np.ndarray
    noise_variance: float
    count: int = 0

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float).reshape(-1)
        L = alpha.size
        b = np.asarray(self.b_matrix, dtype=float).reshape(L, L)
        lam = np.asarray(self.prior_eigenvalues, dtype=float).reshape(-1)
        if lam.size != L:
            raise ValueError(f"expected {L} prior eigenvalues, got {lam.size}")
        _check_hyper(self.noise_variance, lam)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "b_matrix", b)
        object.__setattr__(self, "prior_eigenvalues", lam)
        object.__setattr__(self, "noise_variance", float(self.noise_variance))

    @classmethod
    def empty(cls, prior_eigenvalues, noise_variance: float) -> "DualPosterior":
        lam = np.asarray(prior_eigenvalues, dtype=float).reshape(-1)
        return cls(np.zeros(lam.size), np.zeros((lam.size, lam.size)), lam, noise_variance, 0)

    @property
    def size(self) -> int:
        return self.alpha.size

    @property
    def nbytes(self) -> int:
        return self.alpha.nbytes + self.b_matrix.nbytes + self.prior_eigenvalues.nbytes

    def precision_factor(self):
        """Cholesky factor of ``B + noise_variance Lambda^{-1}``."""
        A = self.b_matrix.copy()
        A[np.diag_indices_from(A)] += self.noise_variance / self.prior_eigenvalues
        return jittered_cholesky(A)


def fit_moment(phi, y, noise_variance: float, prior_eigenvalues) -> MomentPosterior:
    phi = np.asarray(phi, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    lam = np.asarray(prior_eigenvalues, dtype=float).reshape(-1)
    _check_hyper(noise_variance, lam)
    if phi.ndim != 2 or phi.shape[0] != y.size or phi.shape[1] != lam.size:
        raise ValueError(f"shape mismatch: phi {phi.shape}, y {y.shape}, prior {lam.shape}")
    A = phi.T @ phi
    A[np.diag_indices_from(A)] += noise_variance / lam
    factor = jittered_cholesky(A)
    mean = cho_solve(factor, phi.T @ y, check_finite=False)
    sigma = cho_solve(factor, np.eye(lam.size), check_finite=False)
    cov = noise_variance * 0.5 * (sigma + sigma.T)
    return MomentPosterior(mean, cov)


def dual_from_batch(phi, y, noise_variance: float, prior_eigenvalues) -> DualPosterior:
    phi = np.asarray(phi, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    lam = np.asarray(prior_eigenvalues, dtype=float).reshape(-1)
    if phi.ndim != 2 or phi.shape[0] != y.size or phi.shape[1] != lam.size:
        raise ValueError(f"shape mismatch: phi {phi.shape}, y {y.shape}, prior {lam.shape}")
    return DualPosterior(phi.T @ y, phi.T @ phi, lam, noise_variance, phi.shape[0])


def dual_accumulate(dual: DualPosterior, features, y_n: float) -> DualPosterior:
    """Absorb one observation: rank-1 update of ``B`` and ``alpha``; returns a new posterior."""
    features = np.asarray(features, dtype=float).reshape(-1)
    if features.size != dual.size:
        raise ValueError(f"expected {dual.size} features, got {features.size}")
    return DualPosterior(
        dual.alpha + features * y_n,
        dual.b_matrix + np.outer(features, features),
        dual.prior_eigenvalues,
        dual.noise_variance,
        dual.count + 1,
    )


def dual_to_moment(dual: DualPosterior) -> MomentPosterior:
    """O(L^3) conversion to ``(m, S)``."""
    factor = dual.precision_factor()
    mean = cho_solve(factor, dual.alpha, check_finite=False)
    sigma = cho_solve(factor, np.eye(dual.size), check_finite=False)
    return MomentPosterior(mean, dual.noise_variance * 0.5 * (sigma + sigma.T))


def dual_diag_sigma(dual: DualPosterior) -> np.ndarray:
    """Diagonal approximation ``Sigma_ii ~ 1 / (B_ii + noise_variance / lambda_i)``."""
    return 1.0 / (np.diagonal(dual.b_matrix) + dual.noise_variance / dual.prior_eigenvalues)
